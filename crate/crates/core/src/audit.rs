//! Sampled certification of the metric facts the scheme relies on: thin
//! triangles, convexity of the distance, the `Ψ` gradient formula and strong
//! Γ-convexity, plus structural invariants of computed geodesics.

use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::Domain;
use crate::error::Result;
use crate::geodesic::{geodesic, log_map, psi, rotation_angle, GeodesicPath, VisibilityOracle};
use crate::math;
use crate::vec2::{Point, Vec2};
use crate::verify::CheckReport;

/// Tolerance on CAT(0) comparison margins.
pub const CAT0_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub checks: Vec<CheckReport>,
    /// Largest observed `Ψ(x, y) / |x − y|²`.
    pub norm_ratio: f64,
    pub pass: bool,
}

fn pt(p: Point) -> String {
    alloc::format!("({}, {})", p.x, p.y)
}

struct Worst {
    margin: f64,
    at: String,
}

impl Worst {
    fn new() -> Self {
        Worst { margin: f64::INFINITY, at: String::new() }
    }

    fn offer(&mut self, m: f64, at: impl FnOnce() -> String) {
        if m < self.margin {
            self.margin = m;
            self.at = at();
        }
    }

    fn report(self, name: &str, tol: f64) -> CheckReport {
        let m = if self.margin.is_finite() { self.margin } else { 0.0 };
        CheckReport::new(name, m, tol, self.at)
    }
}

/// Thin triangles, convexity of `t ↦ d(γ¹_t, γ²_t)` and the norm-equivalence
/// ratio, over `n_samples` triples and pairs.
pub fn cat0_audit(d: &Domain, n_samples: usize, seed: u64) -> Result<AuditReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let degenerate = 1e-9 * d.diameter();

    let mut thin = Worst::new();
    let mut skipped = 0usize;
    for _ in 0..n_samples {
        let (x, y, z) = (d.sample_point(&mut rng), d.sample_point(&mut rng), d.sample_point(&mut rng));
        let (gxy, gxz, gyz) = (geodesic(d, x, y)?, geodesic(d, x, z)?, geodesic(d, y, z)?);
        let (a, b, c) = (gxy.length, gxz.length, gyz.length);
        if a < degenerate || b < degenerate || c < degenerate {
            skipped += 1;
            continue;
        }
        // Comparison triangle x̄ = 0, ȳ = (a, 0), z̄ above the axis.
        let zx = ((a * a + b * b - c * c) / (2.0 * a)).clamp(-b, b);
        let zbar = Point::new(zx, math::sqrt((b * b - zx * zx).max(0.0)));
        let ybar = Point::new(a, 0.0);
        for _ in 0..4 {
            let (t, s) = (rng.gen_range(0.0..=1.0), rng.gen_range(0.0..=1.0));
            let pairs = [
                (gxy.point_at(t)?, gxz.point_at(s)?, ybar * t, zbar * s),
                (gxy.point_at(t)?, gyz.point_at(s)?, ybar * t, ybar.lerp(zbar, s)),
                (gxz.point_at(t)?, gyz.point_at(s)?, zbar * t, ybar.lerp(zbar, s)),
            ];
            for (p, q, pb, qb) in pairs {
                let m = pb.dist(qb) - geodesic(d, p, q)?.length;
                thin.offer(m, || alloc::format!("triangle {} {} {}", pt(x), pt(y), pt(z)));
            }
        }
    }

    let mut convex = Worst::new();
    let mut ratio: f64 = 1.0;
    let mut below_one = Worst::new();
    let grid = 8;
    for _ in 0..n_samples {
        let (x1, y1, x2, y2) = (d.sample_point(&mut rng), d.sample_point(&mut rng), d.sample_point(&mut rng), d.sample_point(&mut rng));
        let (g1, g2) = (geodesic(d, x1, y1)?, geodesic(d, x2, y2)?);
        let mut f = Vec::with_capacity(grid + 1);
        for j in 0..=grid {
            let t = j as f64 / grid as f64;
            f.push(geodesic(d, g1.point_at(t)?, g2.point_at(t)?)?.length);
        }
        for j in 1..grid {
            let t = j as f64 / grid as f64;
            let chord = (1.0 - t) * f[0] + t * f[grid];
            convex.offer(chord - f[j], || alloc::format!("pair {}→{}, {}→{}", pt(x1), pt(y1), pt(x2), pt(y2)));
            convex.offer(f[j - 1] - 2.0 * f[j] + f[j + 1], || alloc::format!("pair {}→{}, {}→{}", pt(x1), pt(y1), pt(x2), pt(y2)));
        }
        let e = x1.dist(y1);
        if e > degenerate {
            let r = g1.length * g1.length / (e * e);
            ratio = ratio.max(r);
            below_one.offer(r - 1.0, || alloc::format!("pair {} {}", pt(x1), pt(y1)));
        }
    }

    let checks = alloc::vec![
        thin.report("thin-triangles", CAT0_TOLERANCE).with("skipped", skipped as f64),
        convex.report("distance-convexity", CAT0_TOLERANCE),
        below_one.report("norm-equivalence", 1e-12).with("C", ratio),
    ];
    let pass = checks.iter().all(|c| c.pass);
    Ok(AuditReport { checks, norm_ratio: ratio, pass })
}

fn same_waypoints(a: &GeodesicPath, b: &GeodesicPath, tol: f64) -> bool {
    a.waypoints.len() == b.waypoints.len() && a.waypoints.iter().zip(&b.waypoints).all(|(p, q)| p.dist(*q) <= tol)
}

/// Funnel against visibility-graph oracle on random pairs.
pub fn oracle_equivalence(d: &Domain, pairs: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let oracle = VisibilityOracle::new(d);
    let mut worst = Worst::new();
    let mut mismatched = 0usize;
    for _ in 0..pairs {
        let (x, y) = (d.sample_point(&mut rng), d.sample_point(&mut rng));
        let (a, b) = (geodesic(d, x, y)?, oracle.geodesic(x, y)?);
        let rel = (a.length - b.length).abs() / (1.0 + b.length);
        worst.offer(-rel, || alloc::format!("{} {}", pt(x), pt(y)));
        if !same_waypoints(&a, &b, 1e-9 * (1.0 + d.diameter())) {
            mismatched += 1;
            worst.offer(f64::NEG_INFINITY, || alloc::format!("waypoints differ for {} {}", pt(x), pt(y)));
        }
    }
    Ok(worst.report("oracle-equivalence", 1e-9).with("waypoint_mismatches", mismatched as f64))
}

/// Central differences of `Ψ` in each argument against `−2·→xy` and `−2·→yx`.
pub fn psi_gradient_check(d: &Domain, pairs: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = 1e-6 * (1.0 + d.diameter());
    let clearance = 1e3 * step;
    let mut worst = Worst::new();
    let mut done = 0;
    while done < pairs {
        let (x, y) = (d.sample_point(&mut rng), d.sample_point(&mut rng));
        if d.nearest_boundary(x).distance < clearance || d.nearest_boundary(y).distance < clearance {
            continue;
        }
        done += 1;
        let fd = |f: &dyn Fn(Point) -> Result<f64>, at: Point| -> Result<Vec2> {
            let ex = Vec2::new(step, 0.0);
            let ey = Vec2::new(0.0, step);
            Ok(Vec2::new((f(at + ex)? - f(at - ex)?) / (2.0 * step), (f(at + ey)? - f(at - ey)?) / (2.0 * step)))
        };
        let gx = fd(&|p| psi(d, p, y), x)?;
        let gy = fd(&|q| psi(d, x, q), y)?;
        let ex = log_map(d, x, y)? * -2.0;
        let ey = log_map(d, y, x)? * -2.0;
        let rel = (gx - ex).norm() / ex.norm().max(1e-3) + (gy - ey).norm() / ey.norm().max(1e-3);
        worst.offer(-rel, || alloc::format!("{} {}", pt(x), pt(y)));
    }
    Ok(worst.report("psi-gradient", 1e-5))
}

fn rotate(v: Vec2, theta: f64) -> Vec2 {
    let (c, s) = (math::cos(theta), math::sin(theta));
    Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

/// `Ψ(γ¹_t, γ²_t) ≥ Ψ(γ¹_0, γ²_0) + t⟨∇Ψ, (γ̇¹_0, γ̇²_0)⟩ + 2∫₀ᵗ (t−s)|γ̇¹_s − R(−θ_s) γ̇²_s|² ds`
/// on sampled geodesic pairs, the integral by the trapezoid rule with
/// the given step.
///
/// `R(−θ)` carries the arrival frame at `γ²_s` back to the departure frame at
/// `γ¹_s`, so velocities transported along the geodesic cancel.
pub fn strong_convexity_check(d: &Domain, pairs: usize, step: f64, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = Worst::new();
    let n = math::ceil(1.0 / step) as usize;
    for _ in 0..pairs {
        let (x1, y1, x2, y2) = (d.sample_point(&mut rng), d.sample_point(&mut rng), d.sample_point(&mut rng), d.sample_point(&mut rng));
        let (g1, g2) = (geodesic(d, x1, y1)?, geodesic(d, x2, y2)?);
        let base = psi(d, x1, x2)?;
        let slope = -2.0 * (log_map(d, x1, x2)?.dot(g1.initial_velocity()) + log_map(d, x2, x1)?.dot(g2.initial_velocity()));
        let mut integrand = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let s = j as f64 / n as f64;
            let (p, q) = (g1.point_at(s)?, g2.point_at(s)?);
            let theta = rotation_angle(d, p, q)?;
            integrand.push((g1.velocity_at(s) - rotate(g2.velocity_at(s), -theta)).norm_sq());
        }
        for &t in &[0.25, 0.5, 1.0] {
            let m = (t * n as f64) as usize;
            let mut integral = 0.0;
            for j in 0..m {
                let (s0, s1) = (j as f64 / n as f64, (j + 1) as f64 / n as f64);
                integral += 0.5 * ((t - s0) * integrand[j] + (t - s1) * integrand[j + 1]) * (s1 - s0);
            }
            let lhs = psi(d, g1.point_at(t)?, g2.point_at(t)?)?;
            let rhs = base + slope * t + 2.0 * integral;
            worst.offer(lhs - rhs, || alloc::format!("pair {}→{}, {}→{} at t = {t}", pt(x1), pt(y1), pt(x2), pt(y2)));
        }
    }
    Ok(worst.report("strong-gamma-convexity", 1e-4))
}

/// Symmetry of `Ψ`, reversal of waypoints, and bends only at reflex vertices
/// turning around the exterior.
pub fn geodesic_structure_check(d: &Domain, pairs: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps = 1e-6 * d.diameter();
    let mut worst = Worst::new();
    for _ in 0..pairs {
        let (x, y) = (d.sample_point(&mut rng), d.sample_point(&mut rng));
        let (a, b) = (geodesic(d, x, y)?, geodesic(d, y, x)?);
        let at = || alloc::format!("{} {}", pt(x), pt(y));
        worst.offer(-(a.length - b.length).abs() / (1.0 + a.length), at);
        if !same_waypoints(&a, &b.reversed(), 1e-9 * (1.0 + d.diameter())) {
            worst.offer(f64::NEG_INFINITY, || alloc::format!("reversal differs for {} {}", pt(x), pt(y)));
        }
        for w in a.waypoints.windows(3) {
            let reflex = d.vertex_at(w[1]).is_some_and(|v| d.is_reflex(v));
            let inner = ((w[2] - w[1]).normalized().unwrap_or(Vec2::ZERO) - (w[1] - w[0]).normalized().unwrap_or(Vec2::ZERO)).normalized();
            let outside = inner.is_some_and(|u| !d.is_inside(w[1] + u * eps));
            if !(reflex && outside) {
                worst.offer(f64::NEG_INFINITY, || alloc::format!("bend at {} for {} {}", pt(w[1]), pt(x), pt(y)));
            }
        }
    }
    Ok(worst.report("geodesic-structure", 1e-12))
}

/// Fitted `C` in `|θ(x, y)| ≤ C |x − y|` over pairs with both points at least
/// `clearance` away from every reflex vertex.
pub fn rotation_bound(d: &Domain, pairs: usize, clearance: f64, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reflex: Vec<Point> = d.reflex_vertices().map(|v| d.vertices()[v]).collect();
    let far = |p: Point| reflex.iter().all(|v| v.dist(p) >= clearance);
    let mut c: f64 = 0.0;
    let mut done = 0;
    while done < pairs {
        let (x, y) = (d.sample_point(&mut rng), d.sample_point(&mut rng));
        if !far(x) || !far(y) || x == y {
            continue;
        }
        done += 1;
        c = c.max(rotation_angle(d, x, y)?.abs() / x.dist(y));
    }
    Ok(c)
}

/// `|→xy − (y − x)| / |y − x|²` along `y = x + r u` for shrinking `r`.
pub fn log_map_expansion(d: &Domain, x: Point, u: Vec2, radii: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        let y = x + u * r;
        if !d.is_inside(y) {
            break;
        }
        let e = y - x;
        out.push((log_map(d, x, y)? - e).norm() / e.norm_sq());
    }
    Ok(out)
}

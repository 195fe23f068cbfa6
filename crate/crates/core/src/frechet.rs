//! Fréchet means (barycenters) of finite measures on the closed domain.
//!
//! `Q(x) = Σ wᵢ Ψ(x, yᵢ)` is strongly convex along geodesics, so a descent
//! method with a first-order certificate suffices. The certificate is the
//! steepest feasible descent slope of `Q`: at interior points this is
//! `|∇Q|`, at edges and convex vertices the norm of the gradient projected
//! onto the tangent cone, and at reflex vertices (where `Q` is not
//! differentiable) the one-sided slope computed from intrinsic angles.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::domain::{Domain, TangentArc};
use crate::error::{Error, Result};
use crate::geodesic::{geodesic, log_map, psi};
use crate::math;
use crate::vec2::{Point, Vec2};

/// Iteration cap of the descent loop.
pub const MAX_ITERATIONS: usize = 100_000;

/// Default certification tolerance, relative to `1 + diameter`.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// Finite measure with positive weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<(Point, f64)>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<(Point, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidArgument("measure has no atoms".into()));
        }
        if atoms.iter().any(|(p, w)| !p.is_finite() || !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument("weights must be positive and points finite".into()));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(alloc::format!("weights sum to {total}, not 1")));
        }
        Ok(DiscreteMeasure { atoms })
    }

    pub fn dirac(p: Point) -> Self {
        DiscreteMeasure { atoms: alloc::vec![(p, 1.0)] }
    }

    /// Equal-weight measure on `points`.
    pub fn uniform(points: &[Point]) -> Result<Self> {
        let w = 1.0 / points.len() as f64;
        let mut atoms: Vec<(Point, f64)> = points.iter().map(|&p| (p, w)).collect();
        // Absorb the rounding of 1/n into the last weight.
        let rest: f64 = atoms[..atoms.len().saturating_sub(1)].iter().map(|a| a.1).sum();
        if let Some(last) = atoms.last_mut() {
            last.1 = 1.0 - rest;
        }
        DiscreteMeasure::new(atoms)
    }

    /// Builds a measure from unnormalized atoms, merging equal points.
    pub(crate) fn from_merged(atoms: Vec<(Point, f64)>) -> Self {
        let mut merged: Vec<(Point, f64)> = Vec::with_capacity(atoms.len());
        for (p, w) in atoms {
            match merged.iter_mut().find(|(q, _)| *q == p) {
                Some(slot) => slot.1 += w,
                None => merged.push((p, w)),
            }
        }
        DiscreteMeasure { atoms: merged }
    }

    pub fn atoms(&self) -> &[(Point, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn euclidean_mean(&self) -> Point {
        self.atoms.iter().fold(Vec2::ZERO, |acc, (p, w)| acc + *p * *w)
    }

    pub fn validate(&self, d: &Domain) -> Result<()> {
        self.atoms.iter().try_for_each(|(p, _)| d.require_inside(*p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanCertificate {
    pub mean: Point,
    /// Steepest feasible descent slope of `Q` at the mean.
    pub gradient_norm: f64,
    pub iterations: usize,
    /// `Q(mean)`.
    pub objective: f64,
}

/// `Q(x) = Σ wᵢ Ψ(x, yᵢ)`.
pub fn objective(d: &Domain, x: Point, mu: &DiscreteMeasure) -> Result<f64> {
    mu.atoms.iter().map(|(y, w)| Ok(w * psi(d, x, *y)?)).sum()
}

/// Euclidean gradient `-2 Σ wᵢ →xyᵢ` of `Q`.
pub fn frechet_gradient(d: &Domain, x: Point, mu: &DiscreteMeasure) -> Result<Vec2> {
    let mut g = Vec2::ZERO;
    for (y, w) in &mu.atoms {
        g += log_map(d, x, *y)? * (-2.0 * w);
    }
    Ok(g)
}

/// Value, steepest feasible descent slope and direction of `Q` at `x`.
#[derive(Debug, Clone, Copy)]
struct Probe {
    value: f64,
    slope: f64,
    direction: Vec2,
    /// Hessian of `Q` where it is twice differentiable along every geodesic.
    hessian: Option<[[f64; 2]; 2]>,
}

fn probe(d: &Domain, x: Point, mu: &DiscreteMeasure) -> Result<Probe> {
    let arc = d.tangent_arc(x)?;
    let mut value = 0.0;
    // (arc coordinate, 2 w L) per atom not at x.
    let mut terms: Vec<(f64, f64)> = Vec::with_capacity(mu.len());
    let mut hess = Some([[0.0; 2]; 2]);
    for (y, w) in &mu.atoms {
        let g = geodesic(d, x, *y)?;
        value += w * g.length * g.length;
        // Ψ = (|x - v| + rest)² with v the first waypoint after x.
        match (g.start_direction(), hess.as_mut()) {
            (Some(u), Some(hm)) => {
                let r = g.waypoints[1].dist(x);
                let c = 2.0 * w * g.length / r;
                let m = [[u.x * u.x, u.x * u.y], [u.x * u.y, u.y * u.y]];
                for i in 0..2 {
                    for j in 0..2 {
                        let id = if i == j { 1.0 } else { 0.0 };
                        hm[i][j] += 2.0 * w * m[i][j] + c * (id - m[i][j]);
                    }
                }
            }
            (None, Some(hm)) => {
                hm[0][0] += 2.0 * w;
                hm[1][1] += 2.0 * w;
            }
            _ => {}
        }
        if g.start_direction().is_none() && g.length > 0.0 {
            hess = None;
        }
        if let Some(u) = g.start_direction() {
            let c = arc.coordinate(u);
            // Start directions are feasible; rounding can push them just
            // past either end of the arc.
            let c = if arc.is_full() || c <= arc.span { c } else if c - arc.span < 2.0 * PI - c { arc.span } else { 0.0 };
            terms.push((c, 2.0 * w * g.length));
        }
    }
    let (slope, direction) = steepest_descent(&arc, &terms);
    let hessian = if arc.is_full() { hess } else { None };
    Ok(Probe { value, slope, direction, hessian })
}

/// Minimizes the one-sided directional derivative
/// `D(φ) = -Σ cᵢ cos(angle(φ, φᵢ))` over the arc and returns `(-min D, argmin)`.
fn steepest_descent(arc: &TangentArc, terms: &[(f64, f64)]) -> (f64, Vec2) {
    if terms.is_empty() {
        return (0.0, Vec2::ZERO);
    }
    let deriv = |phi: f64| -> f64 { -terms.iter().map(|&(p, c)| c * math::cos(arc.intrinsic_angle(phi, p))).sum::<f64>() };
    if arc.is_full() {
        let g = terms.iter().fold(Vec2::ZERO, |acc, &(p, c)| acc + arc.direction(p) * c);
        return match g.normalized() {
            Some(u) => (g.norm(), u),
            None => (0.0, Vec2::ZERO),
        };
    }
    let mut breaks: Vec<f64> = alloc::vec![0.0, arc.span];
    for &(p, _) in terms {
        for b in [p - PI, p + PI] {
            if b > 0.0 && b < arc.span {
                breaks.push(b);
            }
        }
    }
    breaks.sort_by(|a, b| a.total_cmp(b));
    let mut candidates = breaks.clone();
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi - lo <= 0.0 {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let (mut a, mut b) = (0.0, 0.0);
        for &(p, c) in terms {
            if (mid - p).abs() < PI {
                a += c * math::cos(p);
                b += c * math::sin(p);
            }
        }
        let mut star = math::atan2(b, a);
        if star < 0.0 {
            star += 2.0 * PI;
        }
        if star > lo && star < hi {
            candidates.push(star);
        }
    }
    let mut best = (f64::INFINITY, 0.0);
    for phi in candidates {
        let v = deriv(phi);
        if v < best.0 {
            best = (v, phi);
        }
    }
    if best.0 >= 0.0 {
        (0.0, Vec2::ZERO)
    } else {
        (-best.0, arc.direction(best.1))
    }
}

/// Steepest feasible descent slope of `Q` at `x`; zero exactly at the mean.
pub fn first_order_residual(d: &Domain, x: Point, mu: &DiscreteMeasure) -> Result<f64> {
    Ok(probe(d, x, mu)?.slope)
}

/// Fréchet mean with certificate `gradient_norm ≤ tol`.
pub fn frechet_mean(d: &Domain, mu: &DiscreteMeasure, tol: f64) -> Result<MeanCertificate> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    mu.validate(d)?;
    if let [(y, _)] = mu.atoms() {
        return Ok(MeanCertificate { mean: *y, gradient_norm: 0.0, iterations: 0, objective: 0.0 });
    }

    let mut x = d.project(mu.euclidean_mean());
    let mut cur = probe(d, x, mu)?;
    if cur.slope <= tol {
        return Ok(MeanCertificate { mean: x, gradient_norm: cur.slope, iterations: 1, objective: cur.value });
    }
    // Minimizers at reflex vertices are non-smooth points of `Q`; descent only
    // approaches them, so test them directly.
    for v in d.reflex_vertices() {
        let pv = d.vertices()[v];
        let pr = probe(d, pv, mu)?;
        if pr.slope <= tol {
            return Ok(MeanCertificate { mean: pv, gradient_norm: pr.slope, iterations: 1, objective: pr.value });
        }
        if pr.value < cur.value {
            x = pv;
            cur = pr;
        }
    }

    const ARMIJO: f64 = 1e-4;
    for it in 1..=MAX_ITERATIONS {
        if cur.slope <= tol {
            return Ok(MeanCertificate { mean: x, gradient_norm: cur.slope, iterations: it, objective: cur.value });
        }
        let mut accepted = None;
        // Newton first: near reflex vertices `Q` is badly conditioned.
        if let Some(hm) = cur.hessian {
            let det = hm[0][0] * hm[1][1] - hm[0][1] * hm[1][0];
            if det > 0.0 && hm[0][0] > 0.0 {
                let g = cur.direction * cur.slope;
                let step = Vec2::new((hm[1][1] * g.x - hm[0][1] * g.y) / det, (hm[0][0] * g.y - hm[1][0] * g.x) / det);
                let cand = d.project(x + step);
                if cand != x && step.is_finite() {
                    let next = probe(d, cand, mu)?;
                    if next.value < cur.value || next.slope < 0.5 * cur.slope {
                        accepted = Some((cand, next));
                    }
                }
            }
        }
        // Step ½ is exact in flat regions (Hessian 2I); shrink otherwise.
        let mut alpha = 0.5;
        for _ in 0..64 {
            if accepted.is_some() {
                break;
            }
            let cand = d.project(x + cur.direction * (alpha * cur.slope));
            if cand != x {
                let next = probe(d, cand, mu)?;
                let moved = cand.dist(x);
                if next.value <= cur.value - ARMIJO * cur.slope * moved || next.slope < 0.999 * cur.slope {
                    accepted = Some((cand, next));
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((cand, next)) => {
                x = cand;
                cur = next;
            }
            None => {
                return Err(Error::Convergence { iterations: it, residual: cur.slope, best: x });
            }
        }
    }
    Err(Error::Convergence { iterations: MAX_ITERATIONS, residual: cur.slope, best: x })
}

/// Outcome of a Jensen inequality check `ψ(mean) ≤ Σ wᵢ ψ(yᵢ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JensenReport {
    pub at_mean: f64,
    pub expectation: f64,
    /// `expectation - at_mean`; non-negative when the inequality holds.
    pub margin: f64,
    pub pass: bool,
}

/// Checks Jensen's inequality for a Γ-convex test function `psi_fn`.
pub fn jensen_check<F>(d: &Domain, mu: &DiscreteMeasure, psi_fn: F, tol: f64) -> Result<JensenReport>
where
    F: Fn(Point) -> Result<f64>,
{
    let cert = frechet_mean(d, mu, DEFAULT_TOLERANCE * (1.0 + d.diameter()))?;
    let at_mean = psi_fn(cert.mean)?;
    let mut expectation = 0.0;
    for (y, w) in mu.atoms() {
        expectation += w * psi_fn(*y)?;
    }
    let margin = expectation - at_mean;
    Ok(JensenReport { at_mean, expectation, margin, pass: margin >= -tol })
}

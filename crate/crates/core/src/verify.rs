//! Executable checks of Γ-martingale and reflected BSDE properties on lattice
//! solutions.
//!
//! Test functions are `ψ_o = Ψ(o, ·)`, which are special Γ-convex on the whole
//! domain, and linear functions restricted to convex subregions.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bsde::{conditional_tail_sum, solve_bsde, z_distance, BsdeOptions, Generator, PicardInit};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::frechet::{first_order_residual, frechet_mean, DiscreteMeasure};
use crate::geodesic::{geodesic, log_map, psi};
use crate::lattice::{Lattice, NodeField, NodeId};
use crate::math;
use crate::scheme::{NodeCtx, SchemeResult};
use crate::vec2::{Point, Vec2};

/// Default allowed `c` in the margin tolerance `c·h^{3/2}`.
pub const DEFAULT_MARGIN_CONSTANT: f64 = 1.0;

#[derive(Debug, Clone)]
pub enum TestFunction {
    PsiO { center: Point },
    /// `x ↦ direction·x`, only used at nodes whose values stay in `region`.
    Linear { direction: Vec2, region: Domain },
}

impl TestFunction {
    pub fn psi_o(center: Point) -> Self {
        TestFunction::PsiO { center }
    }

    pub fn linear(direction: Vec2, region: Domain) -> Result<Self> {
        if !region.is_convex() {
            return Err(Error::InvalidArgument(alloc::format!("region {} is not convex", region.name())));
        }
        Ok(TestFunction::Linear { direction, region })
    }

    pub fn value(&self, d: &Domain, x: Point) -> Result<f64> {
        match self {
            TestFunction::PsiO { center } => psi(d, *center, x),
            TestFunction::Linear { direction, .. } => Ok(direction.dot(x)),
        }
    }

    pub fn gradient(&self, d: &Domain, x: Point) -> Result<Vec2> {
        match self {
            TestFunction::PsiO { center } => Ok(log_map(d, x, *center)? * -2.0),
            TestFunction::Linear { direction, .. } => Ok(*direction),
        }
    }

    fn applies(&self, x: Point) -> bool {
        match self {
            TestFunction::PsiO { .. } => true,
            TestFunction::Linear { region, .. } => region.is_inside(x),
        }
    }

    pub fn label(&self) -> String {
        match self {
            TestFunction::PsiO { center } => alloc::format!("psi_o({}, {})", center.x, center.y),
            TestFunction::Linear { direction, region } => alloc::format!("linear({}, {}) on {}", direction.x, direction.y, region.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub pass: bool,
    /// Worst signed margin; negative values beyond `tolerance` fail.
    pub margin: f64,
    pub location: String,
    pub tolerance: f64,
    /// Named auxiliary numbers (fitted constants, counts, ratios).
    pub details: Vec<(String, f64)>,
}

impl CheckReport {
    pub fn new(name: &str, margin: f64, tolerance: f64, location: String) -> Self {
        CheckReport { name: name.to_string(), pass: margin >= -tolerance, margin, location, tolerance, details: Vec::new() }
    }

    pub fn with(mut self, key: &str, v: f64) -> Self {
        self.details.push((key.to_string(), v));
        self
    }

    pub fn detail(&self, key: &str) -> Option<f64> {
        self.details.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

/// `n × n` grid of centers over the bounding box, kept where inside.
pub fn center_grid(d: &Domain, n: usize) -> Vec<Point> {
    let (lo, hi) = d.bounding_box();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let q = Point::new(
                lo.x + (hi.x - lo.x) * (i as f64 + 0.5) / n as f64,
                lo.y + (hi.y - lo.y) * (j as f64 + 0.5) / n as f64,
            );
            out.push(d.project(q));
        }
    }
    out
}

fn loc(id: NodeId) -> String {
    alloc::format!("node ({}, {})", id.slice, id.index)
}

/// Discrete submartingale test
/// `E[ψ(Y_next)] − ψ(Y) + ∇ψ(Y)·F h ≥ −c h^{3/2}` at every node.
pub fn submartingale_check(d: &Domain, l: &Lattice, res: &SchemeResult, functions: &[TestFunction], c_allowed: f64) -> Result<CheckReport> {
    if !res.y.matches(l) {
        return Err(Error::LatticeMismatch("scheme result does not match the lattice".into()));
    }
    let h = l.h();
    let mut worst = (f64::INFINITY, NodeId::ROOT, 0usize);
    for i in 0..l.n_steps() {
        for id in l.nodes(i) {
            let y = res.y[id];
            let brs = l.branches(id)?;
            for (fi, f) in functions.iter().enumerate() {
                if !f.applies(y) || !brs.iter().all(|b| f.applies(res.y[b.target])) {
                    continue;
                }
                let mut e = 0.0;
                for b in &brs {
                    e += b.prob * f.value(d, res.y[b.target])?;
                }
                let m = e - f.value(d, y)? + f.gradient(d, y)?.dot(res.drift[id]) * h;
                if m < worst.0 {
                    worst = (m, id, fi);
                }
            }
        }
    }
    let scale = math::powf(h, 1.5);
    let min = if worst.0.is_finite() { worst.0 } else { 0.0 };
    let fitted = (-min).max(0.0) / scale;
    let where_ = match functions.get(worst.2) {
        Some(f) if worst.0.is_finite() => alloc::format!("{} with {}", loc(worst.1), f.label()),
        _ => String::new(),
    };
    Ok(CheckReport::new("submartingale", min, c_allowed * scale, where_).with("c", fitted).with("h", h))
}

fn slice_expectation(l: &Lattice, i: usize, mut f: impl FnMut(NodeId) -> Result<f64>) -> Result<f64> {
    let mut s = 0.0;
    for id in l.nodes(i) {
        s += l.weight(id) * f(id)?;
    }
    Ok(s)
}

/// Perturbation of size `eps` in a node-dependent direction, projected back.
pub fn perturb_terminal(d: &Domain, base: Point, ctx: &NodeCtx, eps: f64) -> Point {
    let phase = ctx.w[0] + 2.0 * ctx.w[1];
    d.project(base + Vec2::new(math::cos(phase), math::sin(phase)) * eps)
}

/// `sup_i E[Ψ(Y_i, Y'_i)] / E[Ψ(ξ, ξ')]` between two solutions.
pub fn stability_ratio(d: &Domain, l: &Lattice, a: &SchemeResult, b: &SchemeResult) -> Result<f64> {
    let n = l.n_steps();
    let denom = slice_expectation(l, n, |id| psi(d, a.y[id], b.y[id]))?;
    let mut num: f64 = 0.0;
    for i in 0..=n {
        num = num.max(slice_expectation(l, i, |id| psi(d, a.y[id], b.y[id]))?);
    }
    Ok(if denom > 0.0 { num / denom } else if num == 0.0 { 0.0 } else { f64::INFINITY })
}

/// Solves with `g` and with perturbed terminals at each scale; passes when
/// every ratio stays below `ratio_bound`.
pub fn stability_check<G, S>(d: &Domain, l: &Lattice, g: &G, solve: S, scales: &[f64], ratio_bound: f64) -> Result<CheckReport>
where
    G: Fn(&NodeCtx) -> Point,
    S: Fn(&dyn Fn(&NodeCtx) -> Point) -> Result<SchemeResult>,
{
    if scales.iter().any(|s| !(*s >= 0.0)) {
        return Err(Error::InvalidArgument("perturbation scales must be non-negative".into()));
    }
    let base = solve(g)?;
    let mut worst = (0.0f64, 0.0f64);
    let mut ratios = Vec::with_capacity(scales.len());
    for &eps in scales {
        let ge = |c: &NodeCtx| perturb_terminal(d, g(c), c, eps);
        let other = solve(&ge)?;
        let r = stability_ratio(d, l, &base, &other)?;
        ratios.push((eps, r));
        if r > worst.0 {
            worst = (r, eps);
        }
    }
    let mut rep = CheckReport::new("stability", ratio_bound - worst.0, 0.0, alloc::format!("eps = {}", worst.1)).with("max_ratio", worst.0);
    for (eps, r) in ratios {
        rep = rep.with(&alloc::format!("ratio@{eps}"), r);
    }
    Ok(rep)
}

/// Fits `C` in `E∫|Z − Z'|² ≤ C (A + √A)` with
/// `A = E[Ψ(ξ, ξ')] + E∫|f(Y', Z') − f'(Y', Z')|²`.
pub fn zdiff_stability_check<Ga, Gb>(
    d: &Domain,
    l: &Lattice,
    a: (&SchemeResult, &Ga),
    b: (&SchemeResult, &Gb),
    c_allowed: f64,
) -> Result<CheckReport>
where
    Ga: Generator + ?Sized,
    Gb: Generator + ?Sized,
{
    let (ra, fa) = a;
    let (rb, fb) = b;
    let n = l.n_steps();
    let zsq = ra.z.map(|id, za| {
        let zb = rb.z[id];
        if id.slice == n {
            return 0.0;
        }
        let mut s = 0.0;
        for r in 0..2 {
            for c in 0..l.d_prime() {
                s += (za[r][c] - zb[r][c]) * (za[r][c] - zb[r][c]);
            }
        }
        s
    });
    let mut gap = NodeField::filled(l, 0.0);
    for i in 0..n {
        for id in l.nodes(i) {
            let ctx = NodeCtx::new(l, id);
            let (y, z) = (rb.y[id], rb.z[id]);
            gap.set(id, (fa.eval(&ctx, y, &z)? - fb.eval(&ctx, y, &z)?).norm_sq());
        }
    }
    let lhs = conditional_tail_sum(l, &zsq)?[NodeId::ROOT];
    let terminal = slice_expectation(l, n, |id| psi(d, ra.y[id], rb.y[id]))?;
    let rhs = terminal + conditional_tail_sum(l, &gap)?[NodeId::ROOT];
    let fitted = if rhs > 0.0 {
        lhs / (rhs + math::sqrt(rhs))
    } else if lhs <= 1e-20 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(CheckReport::new("zdiff-stability", c_allowed - fitted, 0.0, String::new())
        .with("lhs", lhs)
        .with("rhs", rhs)
        .with("c", fitted))
}

/// Runs the Picard loop from `n_inits` initial fields and compares the
/// results pairwise with the first.
pub fn uniqueness_probe<E, G, Gen>(d: &Domain, l: &Lattice, g: &G, gen: &Gen, n_inits: usize, opts: &BsdeOptions, exec: &E) -> Result<CheckReport>
where
    E: Executor,
    G: Fn(&NodeCtx) -> Point,
    Gen: Generator + ?Sized,
{
    if n_inits < 2 {
        return Err(Error::InvalidArgument("need at least two initializations".into()));
    }
    let inits = [0.0, 1.0, -1.0, 0.5, -0.5, 2.0, -2.0];
    let mut sols = Vec::with_capacity(n_inits);
    for k in 0..n_inits {
        let init = if k == 0 { PicardInit::Zero } else { PicardInit::Constant(inits[k % inits.len()] * (1 + k / inits.len()) as f64) };
        let o = BsdeOptions { init, ..opts.clone() };
        sols.push(solve_bsde(d, l, g, gen, &o, exec)?);
    }
    let (mut ypsi, mut zd): (f64, f64) = (0.0, 0.0);
    for s in &sols[1..] {
        for (id, y) in sols[0].scheme.y.iter() {
            ypsi = ypsi.max(psi(d, *y, s.scheme.y[id])?);
        }
        zd = zd.max(z_distance(&sols[0].scheme.z, &s.scheme.z));
    }
    let margin = (1e-8 - ypsi).min(1e-6 - zd);
    let mut rep = CheckReport::new("uniqueness", margin, 0.0, String::new()).with("y_psi", ypsi).with("z_dist", zd);
    for (k, s) in sols.iter().enumerate() {
        rep = rep.with(&alloc::format!("iterations[{k}]"), s.picard_trace.len() as f64);
    }
    Ok(rep)
}

/// Flat-off and direction of the compensator: every increment above `k_tol`
/// sits within the projection band of the boundary and points into the
/// normal cone at the nearest boundary point, up to `angle_tol`.
pub fn flat_off_check(d: &Domain, l: &Lattice, res: &SchemeResult, k_tol: f64, angle_tol: f64) -> Result<CheckReport> {
    let mut worst = (0.0f64, NodeId::ROOT);
    let (mut charged, mut off_band, mut bad_dir, mut at_reflex) = (0usize, 0usize, 0usize, 0usize);
    for i in 0..l.n_steps() {
        for id in l.nodes(i) {
            let k = res.k_inc[id];
            if k.norm() <= k_tol {
                continue;
            }
            charged += 1;
            let y = res.y[id];
            let foot = d.nearest_boundary(y);
            let angle = if foot.distance > d.projection_band() {
                off_band += 1;
                f64::INFINITY
            } else {
                let a = d.normal_cone(foot.point)?.angle_to(k);
                if a > angle_tol {
                    bad_dir += 1;
                    if d.vertex_at(foot.point).is_some_and(|v| d.is_reflex(v)) {
                        at_reflex += 1;
                    }
                }
                a
            };
            if angle > worst.0 {
                worst = (angle, id);
            }
        }
    }
    let location = if charged > 0 { alloc::format!("{} at Y = ({}, {})", loc(worst.1), res.y[worst.1].x, res.y[worst.1].y) } else { String::new() };
    Ok(CheckReport::new("flat-off", angle_tol - worst.0, 0.0, location)
        .with("charged", charged as f64)
        .with("outside_band", off_band as f64)
        .with("misdirected", bad_dir as f64)
        .with("misdirected_at_reflex_vertex", at_reflex as f64)
        .with("worst_angle", worst.0))
}

/// Boundary points to probe: vertices and `per_edge` interior points per edge.
pub fn boundary_samples(d: &Domain, per_edge: usize) -> Vec<Point> {
    let mut out = Vec::new();
    for i in 0..d.vertex_count() {
        let (a, b) = d.edge(i);
        out.push(a);
        for j in 1..=per_edge {
            out.push(a.lerp(b, j as f64 / (per_edge + 1) as f64));
        }
    }
    out
}

/// `∇ψ_o(x)·u ≥ 0` for boundary points `x` and normal-cone generators `u`.
pub fn special_convexity_check(d: &Domain, centers: &[Point], per_edge: usize) -> Result<CheckReport> {
    let tol = 1e-12 * (1.0 + d.diameter() * d.diameter());
    let mut worst = (f64::INFINITY, String::new());
    for x in boundary_samples(d, per_edge) {
        let cone = d.normal_cone(x)?;
        for o in centers {
            let grad = log_map(d, x, *o)? * -2.0;
            for u in &cone.generators {
                let v = grad.dot(*u);
                if v < worst.0 {
                    worst = (v, alloc::format!("x = ({}, {}), o = ({}, {})", x.x, x.y, o.x, o.y));
                }
            }
        }
    }
    let m = if worst.0.is_finite() { worst.0 } else { 0.0 };
    Ok(CheckReport::new("special-convexity", m, tol, worst.1))
}

/// Second differences of `ψ_o ∘ γ` on a uniform grid along sampled geodesics.
pub fn gamma_convexity_check(d: &Domain, centers: &[Point], n_geodesics: usize, grid: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = 1e-9 * (1.0 + d.diameter() * d.diameter());
    let grid = grid.max(2);
    let mut worst = (f64::INFINITY, String::new());
    for _ in 0..n_geodesics {
        let (x, y) = (d.sample_point(&mut rng), d.sample_point(&mut rng));
        let path = geodesic(d, x, y)?;
        let pts: Vec<Point> = (0..=grid).map(|j| path.point_at(j as f64 / grid as f64)).collect::<Result<_>>()?;
        for o in centers {
            let vals: Vec<f64> = pts.iter().map(|p| psi(d, *o, *p)).collect::<Result<_>>()?;
            for w in vals.windows(3) {
                let s = w[0] - 2.0 * w[1] + w[2];
                if s < worst.0 {
                    worst = (s, alloc::format!("x = ({}, {}), y = ({}, {}), o = ({}, {})", x.x, x.y, y.x, y.y, o.x, o.y));
                }
            }
        }
    }
    let m = if worst.0.is_finite() { worst.0 } else { 0.0 };
    Ok(CheckReport::new("gamma-convexity", m, tol, worst.1))
}

fn random_measure<R: rand::Rng>(d: &Domain, rng: &mut R, atoms: usize) -> Result<DiscreteMeasure> {
    let raw: Vec<f64> = (0..atoms).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    DiscreteMeasure::new(raw.iter().map(|w| (d.sample_point(rng), w / total)).collect())
}

fn coupled<R: rand::Rng>(d: &Domain, rng: &mut R, mu: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    DiscreteMeasure::new(mu.atoms().iter().map(|(_, w)| (d.sample_point(rng), *w)).collect())
}

fn fmt_measure(mu: &DiscreteMeasure) -> String {
    let parts: Vec<String> = mu.atoms().iter().map(|(p, w)| alloc::format!("{w}@({}, {})", p.x, p.y)).collect();
    parts.join(" + ")
}

/// Solves `n` random measures (2 to 6 atoms) and re-evaluates each
/// certificate independently at the returned mean.
pub fn frechet_certificate_check(d: &Domain, n: usize, tol: f64, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = (0.0f64, String::new());
    let mut mismatch: f64 = 0.0;
    for _ in 0..n {
        let k = 2 + (rand::Rng::gen_range(&mut rng, 0..5usize));
        let mu = random_measure(d, &mut rng, k)?;
        let cert = frechet_mean(d, &mu, tol)?;
        let again = first_order_residual(d, cert.mean, &mu)?;
        mismatch = mismatch.max((again - cert.gradient_norm).abs());
        if again > worst.0 {
            worst = (again, fmt_measure(&mu));
        }
    }
    Ok(CheckReport::new("frechet-certificate", tol - worst.0, 0.0, worst.1).with("max_residual", worst.0).with("recheck_mismatch", mismatch))
}

/// Jensen `ψ_o(mean) ≤ Σ wᵢ ψ_o(yᵢ)` on `n` random (measure, center) pairs.
pub fn jensen_sweep(d: &Domain, n: usize, tol: f64, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean_tol = 1e-12 * (1.0 + d.diameter());
    let mut worst = (f64::INFINITY, String::new());
    for _ in 0..n {
        let k = 1 + rand::Rng::gen_range(&mut rng, 0..6usize);
        let mu = random_measure(d, &mut rng, k)?;
        let o = d.sample_point(&mut rng);
        let q = frechet_mean(d, &mu, mean_tol)?.mean;
        let mut e = 0.0;
        for (y, w) in mu.atoms() {
            e += w * psi(d, o, *y)?;
        }
        let m = e - psi(d, o, q)?;
        if m < worst.0 {
            worst = (m, alloc::format!("o = ({}, {}), mu = {}", o.x, o.y, fmt_measure(&mu)));
        }
    }
    let m = if worst.0.is_finite() { worst.0 } else { 0.0 };
    Ok(CheckReport::new("jensen", m, tol, worst.1))
}

/// `Ψ(mean μ, mean μ') ≤ Σ wᵢ Ψ(yᵢ, yᵢ')` for `n` coupled random measures.
pub fn mean_contraction_check(d: &Domain, n: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean_tol = 1e-12 * (1.0 + d.diameter());
    let tol = 1e-9 * (1.0 + d.diameter() * d.diameter());
    let mut worst = (f64::INFINITY, String::new());
    for _ in 0..n {
        let k = 2 + rand::Rng::gen_range(&mut rng, 0..5usize);
        let mu = random_measure(d, &mut rng, k)?;
        let nu = coupled(d, &mut rng, &mu)?;
        let (q1, q2) = (frechet_mean(d, &mu, mean_tol)?.mean, frechet_mean(d, &nu, mean_tol)?.mean);
        let mut e = 0.0;
        for ((y1, w), (y2, _)) in mu.atoms().iter().zip(nu.atoms()) {
            e += w * psi(d, *y1, *y2)?;
        }
        let m = e - psi(d, q1, q2)?;
        if m < worst.0 {
            worst = (m, fmt_measure(&mu));
        }
    }
    let m = if worst.0.is_finite() { worst.0 } else { 0.0 };
    Ok(CheckReport::new("mean-contraction", m, tol, worst.1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bsde::FnGenerator;
    use crate::exec::Sequential;
    use crate::fixtures::{all, lshape, p, square};
    use crate::lattice::build_lattice;
    use crate::scheme::{solve_exogenous, SchemeOptions, ZMatrix};

    fn zero(_: &NodeCtx) -> Vec2 {
        Vec2::ZERO
    }

    fn two_arm(c: &NodeCtx) -> Point {
        let u = 1.0 + libm::tanh(2.0 * c.w[0]);
        let (a, b) = (u.min(1.0), (u - 1.0).max(0.0));
        p(1.9 - a - 0.6 * b, 0.3 + 0.6 * a + b)
    }

    #[test]
    fn constant_solution_has_zero_margins() {
        let ls = lshape();
        let l = build_lattice(1, 3, 1.0).unwrap();
        let r = solve_exogenous(&ls, &l, &|_: &NodeCtx| p(0.4, 0.4), &zero, &SchemeOptions::default(), &Sequential).unwrap();
        let fs: Vec<_> = center_grid(&ls, 4).into_iter().map(TestFunction::psi_o).collect();
        let rep = submartingale_check(&ls, &l, &r, &fs, 1.0).unwrap();
        assert_eq!(rep.margin, 0.0);
        assert!(rep.pass);
    }

    #[test]
    fn convex_conditional_expectation_satisfies_jensen() {
        let sq = square();
        let l = build_lattice(2, 4, 1.0).unwrap();
        let g = |c: &NodeCtx| p(0.5 + 0.4 * libm::tanh(c.w[0]), 0.5 + 0.3 * libm::tanh(c.w[1] - c.w[0]));
        let r = solve_exogenous(&sq, &l, &g, &zero, &SchemeOptions::default(), &Sequential).unwrap();
        let mut fs: Vec<_> = center_grid(&sq, 3).into_iter().map(TestFunction::psi_o).collect();
        fs.push(TestFunction::linear(p(1.0, -2.0), sq.clone()).unwrap());
        let rep = submartingale_check(&sq, &l, &r, &fs, 0.0).unwrap();
        assert!(rep.margin >= -1e-15, "{rep:?}");
        assert!(TestFunction::linear(p(1.0, 0.0), lshape()).is_err());
    }

    #[test]
    fn two_arm_scenario_is_a_submartingale() {
        let ls = lshape();
        let l = build_lattice(1, 5, 1.0).unwrap();
        let r = solve_exogenous(&ls, &l, &two_arm, &zero, &SchemeOptions::default(), &Sequential).unwrap();
        let fs: Vec<_> = center_grid(&ls, 4).into_iter().map(TestFunction::psi_o).collect();
        let rep = submartingale_check(&ls, &l, &r, &fs, DEFAULT_MARGIN_CONSTANT).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn stability_ratios() {
        let sq = square();
        let l = build_lattice(1, 4, 1.0).unwrap();
        let g = |c: &NodeCtx| p(0.5 + 0.3 * libm::tanh(c.w[0]), 0.5);
        let solve = |t: &dyn Fn(&NodeCtx) -> Point| solve_exogenous(&sq, &l, &t, &zero, &SchemeOptions::default(), &Sequential);
        let rep = stability_check(&sq, &l, &g, solve, &[0.0, 0.2, 0.1, 0.05], 1.0 + 1e-10).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.detail("ratio@0"), Some(0.0));
    }

    #[test]
    fn zdiff_identical_and_shifted() {
        let sq = square();
        let l = build_lattice(1, 4, 1.0).unwrap();
        let g = |c: &NodeCtx| p(0.5 + 0.2 * libm::tanh(c.w[0]), 0.5);
        let fa = FnGenerator::new(|_: &NodeCtx, _: Point, _: &ZMatrix| Vec2::ZERO);
        let a = solve_exogenous(&sq, &l, &g, &zero, &SchemeOptions::default(), &Sequential).unwrap();
        let rep = zdiff_stability_check(&sq, &l, (&a, &fa), (&a, &fa), 1.0).unwrap();
        assert_eq!(rep.detail("lhs"), Some(0.0));
        assert!(rep.pass);
        let delta = p(0.01, 0.0);
        let fb = FnGenerator::new(move |_: &NodeCtx, _: Point, _: &ZMatrix| delta);
        let b = solve_exogenous(&sq, &l, &g, &|_: &NodeCtx| delta, &SchemeOptions::default(), &Sequential).unwrap();
        let rep = zdiff_stability_check(&sq, &l, (&a, &fa), (&b, &fb), 1.0).unwrap();
        assert!(rep.detail("lhs").unwrap() <= 1e-24, "{rep:?}");
    }

    #[test]
    fn uniqueness_for_simple_generators() {
        let ls = lshape();
        let l = build_lattice(1, 3, 1.0).unwrap();
        let gen = FnGenerator::new(|_: &NodeCtx, _: Point, _: &ZMatrix| Vec2::ZERO);
        let rep = uniqueness_probe(&ls, &l, &two_arm, &gen, 3, &BsdeOptions::default(), &Sequential).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.detail("y_psi"), Some(0.0));
    }

    #[test]
    fn flat_off_on_convex_and_free_solutions() {
        let sq = square();
        let l = build_lattice(1, 5, 1.0).unwrap();
        let drift = |_: &NodeCtx| p(0.8, 0.0);
        let g = |c: &NodeCtx| p(0.9 + 0.1 * libm::tanh(c.w[0]), 0.5);
        let r = solve_exogenous(&sq, &l, &g, &drift, &SchemeOptions::default(), &Sequential).unwrap();
        let rep = flat_off_check(&sq, &l, &r, 1e-10, 1e-2).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.detail("charged").unwrap() > 0.0);
    }

    #[test]
    fn frechet_sweeps() {
        for d in all() {
            let tol = 1e-8 * (1.0 + d.diameter());
            let rep = frechet_certificate_check(&d, 20, tol, 1).unwrap();
            assert!(rep.pass && rep.detail("recheck_mismatch").unwrap() < 1e-12, "{}: {rep:?}", d.name());
            assert!(jensen_sweep(&d, 20, 1e-10, 2).unwrap().pass, "{}", d.name());
            assert!(mean_contraction_check(&d, 20, 3).unwrap().pass, "{}", d.name());
        }
    }

    #[test]
    fn psi_o_are_special_gamma_convex() {
        for d in all() {
            let cs = center_grid(&d, 3);
            let rep = special_convexity_check(&d, &cs, 3).unwrap();
            assert!(rep.pass, "{}: {rep:?}", d.name());
            let rep = gamma_convexity_check(&d, &cs, 20, 32, 5).unwrap();
            assert!(rep.pass, "{}: {rep:?}", d.name());
        }
    }
}

//! Backward recursion on the lattice: conditional barycenter of the next
//! slice, then reflected drift transport over one step.

use alloc::vec::Vec;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::frechet::frechet_mean;
use crate::geodesic::psi;
use crate::lattice::{conditional_measure, Lattice, NodeField, NodeId};
use crate::transport::{default_substeps, reflect_transport};
use crate::vec2::{Point, Vec2};

/// `Z` at a node: row `r` is the `r`-th coordinate of `Y`, column `c` the
/// `c`-th noise; unused columns are zero.
pub type ZMatrix = [[f64; 2]; 2];

/// Largest Picard iteration count per window.
pub const MAX_FIXED_POINT_ITERATIONS: usize = 500;
/// Stopping threshold on the sup-node distance between Picard iterates.
pub const FIXED_POINT_TOLERANCE: f64 = 1e-12;

/// What data functions see of a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeCtx {
    pub id: NodeId,
    pub t: f64,
    /// Value of the driving walk; unused coordinates are zero.
    pub w: [f64; 2],
}

impl NodeCtx {
    pub fn new(l: &Lattice, id: NodeId) -> Self {
        NodeCtx { id, t: l.time(id.slice), w: l.state(id) }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SchemeOptions {
    /// Certificate tolerance for conditional barycenters; `None` picks
    /// `1e-12 × (1 + diameter)`.
    pub mean_tolerance: Option<f64>,
    /// Transport substeps; `None` uses [`default_substeps`].
    pub substeps: Option<usize>,
}

impl Default for SchemeOptions {
    fn default() -> Self {
        SchemeOptions { mean_tolerance: None, substeps: None }
    }
}

impl SchemeOptions {
    pub(crate) fn tolerance(&self, d: &Domain) -> f64 {
        self.mean_tolerance.unwrap_or(1e-12 * (1.0 + d.diameter()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SliceDiagnostics {
    pub max_gradient_norm: f64,
    pub max_mean_iterations: usize,
    pub max_substeps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeResult {
    pub y: NodeField<Point>,
    pub y_tilde: NodeField<Point>,
    pub z: NodeField<ZMatrix>,
    /// Compensator increment charged at the earlier node of each step.
    pub k_inc: NodeField<Vec2>,
    /// Drift used at each node.
    pub drift: NodeField<Vec2>,
    /// Indexed by slice; the terminal slice carries defaults.
    pub diagnostics: Vec<SliceDiagnostics>,
}

impl SchemeResult {
    pub fn root(&self) -> Point {
        self.y[NodeId::ROOT]
    }
}

struct NodeOut {
    y: Point,
    y_tilde: Point,
    z: ZMatrix,
    k: Vec2,
    drift: Vec2,
    grad: f64,
    iters: usize,
    substeps: usize,
}

/// Backward sweep over slices `lo..hi` given `Y` on slice `hi`. `drift` sees
/// the node and its barycenter `ỹ`.
pub(crate) fn sweep<E, F>(
    d: &Domain,
    l: &Lattice,
    out: &mut SchemeResult,
    lo: usize,
    hi: usize,
    drift: &F,
    opts: &SchemeOptions,
    exec: &E,
) -> Result<()>
where
    E: Executor,
    F: Fn(&NodeCtx, Point) -> Result<Vec2> + Sync,
{
    let tol = opts.tolerance(d);
    let h = l.h();
    for i in (lo..hi).rev() {
        let next = &out.y;
        let results: Vec<Result<NodeOut>> = exec.map(l.slice_len(i), |j| {
            let id = NodeId::new(i, j);
            let ctx = NodeCtx::new(l, id);
            let run = || -> Result<NodeOut> {
                let mu = conditional_measure(l, id, next, i + 1)?;
                let cert = frechet_mean(d, &mu, tol)?;
                let f = drift(&ctx, cert.mean)?;
                if !f.is_finite() {
                    return Err(Error::Eval(alloc::format!("non-finite drift {f:?}")));
                }
                let substeps = opts.substeps.unwrap_or_else(|| default_substeps(d, f, h));
                let tr = reflect_transport(d, cert.mean, f, h, substeps, false)?;
                let mut mean = Vec2::ZERO;
                let mut z = [[0.0; 2]; 2];
                for b in l.branches(id)? {
                    let yn = next[b.target];
                    mean += yn * b.prob;
                    for c in 0..l.d_prime() {
                        z[0][c] += b.prob * yn.x * b.dw[c];
                        z[1][c] += b.prob * yn.y * b.dw[c];
                    }
                }
                for row in z.iter_mut() {
                    for v in row.iter_mut() {
                        *v /= h;
                    }
                }
                Ok(NodeOut {
                    y: tr.endpoint,
                    y_tilde: cert.mean,
                    z,
                    k: mean - tr.endpoint + f * h,
                    drift: f,
                    grad: cert.gradient_norm,
                    iters: cert.iterations,
                    substeps,
                })
            };
            run().map_err(|e| e.at(id))
        });
        let mut diag = SliceDiagnostics::default();
        let mut ys = Vec::with_capacity(results.len());
        for (j, r) in results.into_iter().enumerate() {
            let o = r?;
            let id = NodeId::new(i, j);
            ys.push(o.y);
            out.y_tilde.set(id, o.y_tilde);
            out.z.set(id, o.z);
            out.k_inc.set(id, o.k);
            out.drift.set(id, o.drift);
            diag.max_gradient_norm = diag.max_gradient_norm.max(o.grad);
            diag.max_mean_iterations = diag.max_mean_iterations.max(o.iters);
            diag.max_substeps = diag.max_substeps.max(o.substeps);
        }
        *out.y.slice_mut(i) = ys;
        out.diagnostics[i] = diag;
    }
    Ok(())
}

fn terminal_result<G>(d: &Domain, l: &Lattice, g: &G) -> Result<SchemeResult>
where
    G: Fn(&NodeCtx) -> Point,
{
    let n = l.n_steps();
    let mut y = NodeField::filled(l, Point::ZERO);
    for id in l.nodes(n) {
        let v = g(&NodeCtx::new(l, id));
        if !v.is_finite() {
            return Err(Error::Eval(alloc::format!("non-finite terminal value {v:?}")).at(id));
        }
        d.require_inside(v).map_err(|e| e.at(id))?;
        y.set(id, v);
    }
    Ok(SchemeResult {
        y_tilde: y.clone(),
        y,
        z: NodeField::filled(l, [[0.0; 2]; 2]),
        k_inc: NodeField::filled(l, Vec2::ZERO),
        drift: NodeField::filled(l, Vec2::ZERO),
        diagnostics: alloc::vec![SliceDiagnostics::default(); n + 1],
    })
}

/// Scheme for a drift that depends on the node only.
pub fn solve_exogenous<E, G, F>(d: &Domain, l: &Lattice, g: &G, drift: &F, opts: &SchemeOptions, exec: &E) -> Result<SchemeResult>
where
    E: Executor,
    G: Fn(&NodeCtx) -> Point,
    F: Fn(&NodeCtx) -> Vec2 + Sync,
{
    let mut out = terminal_result(d, l, g)?;
    sweep(d, l, &mut out, 0, l.n_steps(), &|c: &NodeCtx, _| Ok(drift(c)), opts, exec)?;
    Ok(out)
}

/// Convergence record of the `y` fixed point.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FixedPointReport {
    /// Window boundaries as slice indices, latest first.
    pub windows: Vec<(usize, usize)>,
    /// Sup-node distances between consecutive iterates, per window.
    pub gaps: Vec<Vec<f64>>,
}

impl FixedPointReport {
    /// Ratios of consecutive gaps, per window; a ratio is zero once a gap is.
    pub fn ratios(&self) -> Vec<Vec<f64>> {
        self.gaps.iter().map(|g| gap_ratios(g)).collect()
    }

    pub fn iterations(&self) -> usize {
        self.gaps.iter().map(Vec::len).max().unwrap_or(0)
    }
}

pub(crate) fn gap_ratios(g: &[f64]) -> Vec<f64> {
    g.windows(2).map(|w| if w[1] == 0.0 { 0.0 } else { w[1] / w[0] }).collect()
}

/// Scheme for a drift `f(node, y)`, by Picard iteration over `Y` fields on
/// time windows of length `eta` (whole horizon when `None`).
///
/// The first iterate evaluates `f` at each node's own barycenter; each
/// further iterate freezes `y` at the previous iterate.
pub fn solve_state_dependent<E, G, F>(
    d: &Domain,
    l: &Lattice,
    g: &G,
    f: &F,
    eta: Option<f64>,
    opts: &SchemeOptions,
    exec: &E,
) -> Result<(SchemeResult, FixedPointReport)>
where
    E: Executor,
    G: Fn(&NodeCtx) -> Point,
    F: Fn(&NodeCtx, Point) -> Vec2 + Sync,
{
    solve_state_dependent_fallible(d, l, g, &|c: &NodeCtx, y| Ok(f(c, y)), eta, opts, exec)
}

/// [`solve_state_dependent`] for a drift whose evaluation can fail.
pub fn solve_state_dependent_fallible<E, G, F>(
    d: &Domain,
    l: &Lattice,
    g: &G,
    f: &F,
    eta: Option<f64>,
    opts: &SchemeOptions,
    exec: &E,
) -> Result<(SchemeResult, FixedPointReport)>
where
    E: Executor,
    G: Fn(&NodeCtx) -> Point,
    F: Fn(&NodeCtx, Point) -> Result<Vec2> + Sync,
{
    let n = l.n_steps();
    let per = match eta {
        None => n,
        Some(e) if e > 0.0 && e.is_finite() => ((e / l.h()) as usize).clamp(1, n),
        Some(e) => return Err(Error::InvalidArgument(alloc::format!("window length must be positive, got {e}"))),
    };
    let mut out = terminal_result(d, l, g)?;
    let mut report = FixedPointReport::default();
    let mut hi = n;
    while hi > 0 {
        let lo = hi.saturating_sub(per);
        sweep(d, l, &mut out, lo, hi, &|c: &NodeCtx, yt| f(c, yt), opts, exec)?;
        let mut gaps = Vec::new();
        loop {
            let prev = out.y.clone();
            let frozen = |c: &NodeCtx, _: Point| f(c, prev[c.id]);
            sweep(d, l, &mut out, lo, hi, &frozen, opts, exec)?;
            let mut gap: f64 = 0.0;
            for i in lo..hi {
                for (a, b) in out.y.slice(i).iter().zip(prev.slice(i)) {
                    gap = gap.max(a.dist(*b));
                }
            }
            gaps.push(gap);
            if gap <= FIXED_POINT_TOLERANCE {
                break;
            }
            if gaps.len() >= MAX_FIXED_POINT_ITERATIONS {
                return Err(Error::Convergence { iterations: gaps.len(), residual: gap, best: out.root() });
            }
        }
        report.windows.push((lo, hi));
        report.gaps.push(gaps);
        hi = lo;
    }
    Ok((out, report))
}

/// Linear (d′ = 1) or bilinear (d′ = 2) interpolation of slice `i` of a field
/// in the walk value.
pub fn interpolate_slice(l: &Lattice, field: &NodeField<Point>, i: usize, w: [f64; 2]) -> Point {
    let s = l.sqrt_h();
    let m = i as f64;
    // Node coordinate along one axis: offset = 2j - i.
    let locate = |x: f64| -> (usize, f64) {
        let u = ((x / s + m) / 2.0).clamp(0.0, m);
        let j = (u as usize).min(i.saturating_sub(1));
        if i == 0 {
            (0, 0.0)
        } else {
            (j, u - j as f64)
        }
    };
    let width = i + 1;
    let (jx, fx) = locate(w[0]);
    if l.d_prime() == 1 {
        let a = field.slice(i)[jx];
        if i == 0 {
            return a;
        }
        let b = field.slice(i)[jx + 1];
        return a.lerp(b, fx);
    }
    let (jy, fy) = locate(w[1]);
    let at = |a: usize, b: usize| field.slice(i)[a * width + b];
    if i == 0 {
        return at(0, 0);
    }
    let lo = at(jx, jy).lerp(at(jx, jy + 1), fy);
    let hi = at(jx + 1, jy).lerp(at(jx + 1, jy + 1), fy);
    lo.lerp(hi, fx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementRow {
    pub coarse_k: u32,
    pub fine_k: u32,
    /// Sup over coarse nodes of the distance to the interpolated fine field
    /// at the same time.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementTable {
    pub rows: Vec<RefinementRow>,
    pub decreasing: bool,
}

/// Solves on each lattice of `k_list` and compares consecutive refinements.
#[allow(clippy::too_many_arguments)]
pub fn refine_and_compare<E, G, F>(
    d: &Domain,
    d_prime: usize,
    horizon: f64,
    g: &G,
    drift: &F,
    k_list: &[u32],
    opts: &SchemeOptions,
    exec: &E,
) -> Result<RefinementTable>
where
    E: Executor,
    G: Fn(&NodeCtx) -> Point,
    F: Fn(&NodeCtx) -> Vec2 + Sync,
{
    if k_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("refinement exponents must increase".into()));
    }
    let mut solved = Vec::with_capacity(k_list.len());
    for &k in k_list {
        let l = crate::lattice::build_lattice(d_prime, k, horizon)?;
        let r = solve_exogenous(d, &l, g, drift, opts, exec)?;
        solved.push((l, r));
    }
    let mut rows = Vec::new();
    for pair in solved.windows(2) {
        let ((lc, rc), (lf, rf)) = (&pair[0], &pair[1]);
        let stride = lf.n_steps() / lc.n_steps();
        let mut dist: f64 = 0.0;
        for i in 0..=lc.n_steps() {
            for id in lc.nodes(i) {
                let q = interpolate_slice(lf, &rf.y, i * stride, lc.state(id));
                dist = dist.max(q.dist(rc.y[id]));
            }
        }
        rows.push(RefinementRow { coarse_k: lc.exponent(), fine_k: lf.exponent(), distance: dist });
    }
    let decreasing = rows.windows(2).all(|w| w[1].distance < w[0].distance);
    Ok(RefinementTable { rows, decreasing })
}

/// Per slice, the largest `Ψ(Y(a), Y(b)) / |w(a) − w(b)|²` over neighbouring
/// nodes of the slice.
pub fn lipschitz_profile(d: &Domain, l: &Lattice, y: &NodeField<Point>) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(l.n_steps() + 1);
    for i in 0..=l.n_steps() {
        let mut best: f64 = 0.0;
        let width = i + 1;
        for id in l.nodes(i) {
            let mut nbrs = Vec::with_capacity(2);
            if l.d_prime() == 1 {
                if id.index + 1 < width {
                    nbrs.push(id.index + 1);
                }
            } else {
                let (a, b) = (id.index / width, id.index % width);
                if a + 1 < width {
                    nbrs.push(id.index + width);
                }
                if b + 1 < width {
                    nbrs.push(id.index + 1);
                }
            }
            for j in nbrs {
                let other = NodeId::new(i, j);
                let (wa, wb) = (l.state(id), l.state(other));
                let dw2 = (wa[0] - wb[0]) * (wa[0] - wb[0]) + (wa[1] - wb[1]) * (wa[1] - wb[1]);
                best = best.max(psi(d, y[id], y[other])? / dw2);
            }
        }
        out.push(best);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::fixtures::{lshape, p, square};
    use crate::lattice::{build_lattice, node_expectation};
    use crate::math;

    fn zero(_: &NodeCtx) -> Vec2 {
        Vec2::ZERO
    }

    // Polyline (1.9, 0.3) -> (0.9, 0.9) -> (0.3, 1.9), two equal legs.
    fn two_arm(c: &NodeCtx) -> Point {
        let u = 1.0 + libm::tanh(2.0 * c.w[0]);
        let (a, b) = (u.min(1.0), (u - 1.0).max(0.0));
        p(1.9 - a - 0.6 * b, 0.3 + 0.6 * a + b)
    }

    #[test]
    fn constant_terminal_is_stationary() {
        for d in [square(), lshape()] {
            let l = build_lattice(1, 4, 1.0).unwrap();
            let c = p(0.5, 0.25);
            let r = solve_exogenous(&d, &l, &|_: &NodeCtx| c, &zero, &SchemeOptions::default(), &Sequential).unwrap();
            for (id, y) in r.y.iter() {
                assert_eq!(*y, c);
                assert_eq!(r.k_inc[id], Vec2::ZERO);
                assert_eq!(r.z[id], [[0.0; 2]; 2]);
            }
        }
    }

    #[test]
    fn convex_reduction_to_conditional_expectation() {
        let sq = square();
        for dp in 1..=2 {
            let l = build_lattice(dp, 5, 1.0).unwrap();
            let g = |c: &NodeCtx| p(0.5 + 0.3 * libm::tanh(c.w[0]), 0.5 + 0.2 * math::sin(c.w[1] + c.w[0]));
            let r = solve_exogenous(&sq, &l, &g, &zero, &SchemeOptions::default(), &Sequential).unwrap();
            let mut e = NodeField::from_fn(&l, |id| g(&NodeCtx::new(&l, id)));
            for i in (0..l.n_steps()).rev() {
                for id in l.nodes(i) {
                    let v = node_expectation(&l, id, &e).unwrap();
                    e.set(id, v);
                }
            }
            for (id, y) in r.y.iter() {
                assert!(y.dist(e[id]) <= 1e-8, "{id:?}");
                assert!(r.k_inc[id].norm() <= 1e-10);
            }
            if dp == 1 {
                for i in 0..l.n_steps() {
                    for id in l.nodes(i) {
                        let up = r.y[NodeId::new(i + 1, id.index + 1)];
                        let dn = r.y[NodeId::new(i + 1, id.index)];
                        let fd = (up - dn) * (0.5 / l.sqrt_h());
                        let z = r.z[id];
                        assert!((z[0][0] - fd.x).abs() <= 1e-12 && (z[1][0] - fd.y).abs() <= 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn root_barycenter_of_step_terminal() {
        let ls = lshape();
        let l = build_lattice(1, 6, 1.0).unwrap();
        let g = |c: &NodeCtx| if c.w[0] > 0.0 { p(1.9, 0.5) } else { p(0.5, 1.9) };
        let r = solve_exogenous(&ls, &l, &g, &zero, &SchemeOptions::default(), &Sequential).unwrap();
        // Terminal law: P(W_T > 0) for the symmetric walk with an even step count.
        let up: f64 = l.nodes(64).filter(|id| l.state(*id)[0] > 0.0).map(|id| l.weight(id)).sum();
        let (a, b) = (p(1.9, 0.5), p(0.5, 1.9));
        let mut best = (f64::INFINITY, Point::ZERO);
        let steps = 400;
        for ix in 0..=steps {
            for iy in 0..=steps {
                let q = p(2.0 * ix as f64 / steps as f64, 2.0 * iy as f64 / steps as f64);
                if !ls.is_inside(q) {
                    continue;
                }
                let v = up * psi(&ls, q, a).unwrap() + (1.0 - up) * psi(&ls, q, b).unwrap();
                if v < best.0 {
                    best = (v, q);
                }
            }
        }
        // Refine the grid optimum locally.
        let mut h = 2.0 / steps as f64;
        let mut c = best.1;
        for _ in 0..30 {
            for dx in -2..=2 {
                for dy in -2..=2 {
                    let q = c + p(dx as f64 * h, dy as f64 * h);
                    if ls.is_inside(q) {
                        let v = up * psi(&ls, q, a).unwrap() + (1.0 - up) * psi(&ls, q, b).unwrap();
                        if v < best.0 {
                            best = (v, q);
                        }
                    }
                }
            }
            c = best.1;
            h *= 0.5;
        }
        assert!(r.root().dist(best.1) <= 1e-4, "{:?} vs {:?}", r.root(), best.1);
    }

    #[test]
    fn node_identities_hold() {
        let ls = lshape();
        let l = build_lattice(1, 5, 1.0).unwrap();
        let drift = |c: &NodeCtx| p(0.4 * math::cos(c.w[0]), -0.3);
        let r = solve_exogenous(&ls, &l, &two_arm, &drift, &SchemeOptions::default(), &Sequential).unwrap();
        for i in 0..l.n_steps() {
            for id in l.nodes(i) {
                let e = node_expectation(&l, id, &r.y).unwrap();
                let bal = e - r.y[id] + r.drift[id] * l.h() - r.k_inc[id];
                assert!(bal.norm() <= 1e-10);
                assert!(ls.is_inside(r.y[id]));
                let mut zc = [[0.0; 2]; 2];
                for b in l.branches(id).unwrap() {
                    let dy = r.y[b.target] - e;
                    zc[0][0] += b.prob * dy.x * b.dw[0] / l.h();
                    zc[1][0] += b.prob * dy.y * b.dw[0] / l.h();
                }
                assert!((zc[0][0] - r.z[id][0][0]).abs() <= 1e-10 && (zc[1][0] - r.z[id][1][0]).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn y_independent_drift_needs_one_iteration() {
        let ls = lshape();
        let l = build_lattice(1, 4, 1.0).unwrap();
        let drift = |c: &NodeCtx| p(0.2, 0.1 * c.w[0]);
        let ex = solve_exogenous(&ls, &l, &two_arm, &drift, &SchemeOptions::default(), &Sequential).unwrap();
        let (sd, rep) =
            solve_state_dependent(&ls, &l, &two_arm, &|c: &NodeCtx, _| drift(c), None, &SchemeOptions::default(), &Sequential).unwrap();
        assert_eq!(rep.iterations(), 1);
        assert_eq!(ex.y, sd.y);
    }

    #[test]
    fn stationary_centre_is_fixed_point() {
        let sq = square();
        let l = build_lattice(1, 4, 1.0).unwrap();
        let c = p(0.3, 0.6);
        let f = |_: &NodeCtx, y: Point| (y - c) * -2.0;
        let (r, _) = solve_state_dependent(&sq, &l, &|_: &NodeCtx| c, &f, None, &SchemeOptions::default(), &Sequential).unwrap();
        assert!(r.y.iter().all(|(_, y)| *y == c));
    }

    #[test]
    fn mean_reverting_drift_contracts() {
        let ls = lshape();
        let l = build_lattice(1, 5, 1.0).unwrap();
        let c = p(0.5, 0.5);
        let f = |_: &NodeCtx, y: Point| (c - y) * 0.5;
        let (r, rep) = solve_state_dependent(&ls, &l, &two_arm, &f, None, &SchemeOptions::default(), &Sequential).unwrap();
        let ratios = &rep.ratios()[0];
        assert!(!ratios.is_empty());
        assert!(ratios.iter().all(|q| *q < 1.0), "{ratios:?}");
        assert!(r.y.iter().all(|(_, y)| ls.is_inside(*y)));
        let (w, rep2) = solve_state_dependent(&ls, &l, &two_arm, &f, Some(0.25), &SchemeOptions::default(), &Sequential).unwrap();
        assert_eq!(rep2.windows.len(), 4);
        assert!(w.root().dist(r.root()) <= 1e-9);
    }

    #[test]
    fn refinement_of_affine_terminal_in_convex_domain() {
        let sq = square();
        let g = |c: &NodeCtx| p(0.5 + 0.05 * c.w[0], 0.5 - 0.03 * c.w[0]);
        let t = refine_and_compare(&sq, 1, 1.0, &g, &zero, &[3, 4, 5], &SchemeOptions::default(), &Sequential).unwrap();
        assert!(t.rows.iter().all(|r| r.distance <= 1e-12), "{t:?}");
        let t = refine_and_compare(&sq, 1, 1.0, &|_: &NodeCtx| p(0.2, 0.2), &zero, &[2, 3], &SchemeOptions::default(), &Sequential).unwrap();
        assert_eq!(t.rows[0].distance, 0.0);
    }

    #[test]
    fn lipschitz_profile_stays_bounded() {
        let ls = lshape();
        let l = build_lattice(1, 5, 1.0).unwrap();
        let r = solve_exogenous(&ls, &l, &two_arm, &zero, &SchemeOptions::default(), &Sequential).unwrap();
        let prof = lipschitz_profile(&ls, &l, &r.y).unwrap();
        let terminal = prof[l.n_steps()];
        assert!(prof.iter().all(|v| *v <= 2.0 * terminal + 1e-12), "{prof:?}");
    }
}

//! Reflected BSDE with a generator `f(t, y, z)`: Picard iteration over the
//! `Z` field, each step a state-dependent scheme solve with `z` frozen at the
//! previous iterate.

use alloc::vec::Vec;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::lattice::{Lattice, NodeField};
use crate::scheme::{gap_ratios, solve_state_dependent_fallible, NodeCtx, SchemeOptions, SchemeResult, ZMatrix};
use crate::vec2::{Point, Vec2};

/// Stopping threshold on the Picard gap.
pub const PICARD_TOLERANCE: f64 = 1e-10;
/// Iteration cap of the Picard loop.
pub const MAX_PICARD_ITERATIONS: usize = 200;
/// Consecutive non-contracting iterations tolerated before giving up.
pub const NON_CONTRACTING_RUN: usize = 5;

pub trait Generator: Sync {
    fn eval(&self, ctx: &NodeCtx, y: Point, z: &ZMatrix) -> Result<Vec2>;

    /// Declared Lipschitz constant in `y`.
    fn lipschitz_y(&self) -> f64 {
        0.0
    }

    /// Declared Lipschitz constant in `z`.
    fn lipschitz_z(&self) -> f64 {
        0.0
    }

    /// Declared bound on `|f(·, 0, 0)|`.
    fn bound_at_zero(&self) -> f64 {
        0.0
    }
}

/// Generator from a closure and its declared constants.
#[derive(Clone, Copy)]
pub struct FnGenerator<F> {
    pub f: F,
    pub lipschitz_y: f64,
    pub lipschitz_z: f64,
    pub bound_at_zero: f64,
}

impl<F> FnGenerator<F>
where
    F: Fn(&NodeCtx, Point, &ZMatrix) -> Vec2 + Sync,
{
    pub fn new(f: F) -> Self {
        FnGenerator { f, lipschitz_y: 0.0, lipschitz_z: 0.0, bound_at_zero: 0.0 }
    }
}

impl<F> Generator for FnGenerator<F>
where
    F: Fn(&NodeCtx, Point, &ZMatrix) -> Vec2 + Sync,
{
    fn eval(&self, ctx: &NodeCtx, y: Point, z: &ZMatrix) -> Result<Vec2> {
        Ok((self.f)(ctx, y, z))
    }
    fn lipschitz_y(&self) -> f64 {
        self.lipschitz_y
    }
    fn lipschitz_z(&self) -> f64 {
        self.lipschitz_z
    }
    fn bound_at_zero(&self) -> f64 {
        self.bound_at_zero
    }
}

/// Evaluates the generator, rejecting non-finite output.
pub fn evaluate_generator<G: Generator + ?Sized>(gen: &G, ctx: &NodeCtx, y: Point, z: &ZMatrix) -> Result<Vec2> {
    let v = gen.eval(ctx, y, z)?;
    if !v.is_finite() {
        return Err(Error::Eval(alloc::format!("generator is not finite at t = {}, y = ({}, {})", ctx.t, y.x, y.y)));
    }
    Ok(v)
}

/// Starting `Z` field of the Picard loop.
#[derive(Debug, Clone, PartialEq)]
pub enum PicardInit {
    Zero,
    /// Every used entry set to the value.
    Constant(f64),
    Field(NodeField<ZMatrix>),
}

#[derive(Debug, Clone)]
pub struct BsdeOptions {
    pub init: PicardInit,
    /// Window length of the inner `y` fixed point.
    pub eta: Option<f64>,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub scheme: SchemeOptions,
}

impl Default for BsdeOptions {
    fn default() -> Self {
        BsdeOptions {
            init: PicardInit::Zero,
            eta: None,
            tolerance: PICARD_TOLERANCE,
            max_iterations: MAX_PICARD_ITERATIONS,
            scheme: SchemeOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BsdeSolution {
    pub scheme: SchemeResult,
    /// `‖Zᵏ⁺¹ − Zᵏ‖` for `k ≥ 1`.
    pub picard_trace: Vec<f64>,
    pub bmo_diagnostic: f64,
    /// Inner `y` fixed-point iterations per Picard step.
    pub inner_iterations: Vec<usize>,
}

impl BsdeSolution {
    pub fn ratios(&self) -> Vec<f64> {
        gap_ratios(&self.picard_trace)
    }
}

/// Conditional expectation of `Σ_{s ≥ node} v(s) h` at every node, by a
/// backward sweep. Terminal nodes carry zero.
pub fn conditional_tail_sum(l: &Lattice, v: &NodeField<f64>) -> Result<NodeField<f64>> {
    let mut acc = NodeField::filled(l, 0.0);
    for i in (0..l.n_steps()).rev() {
        for id in l.nodes(i) {
            let mut e = 0.0;
            for b in l.branches(id)? {
                e += b.prob * acc[b.target];
            }
            acc.set(id, v[id] * l.h() + e);
        }
    }
    Ok(acc)
}

fn z_norm_sq(l: &Lattice, z: &ZMatrix) -> f64 {
    let mut s = 0.0;
    for row in z {
        for v in row.iter().take(l.d_prime()) {
            s += v * v;
        }
    }
    s
}

/// Largest conditional `E[Σ_{s ≥ node} |Z_s|² h]` over nodes.
pub fn bmo_diagnostic(l: &Lattice, z: &NodeField<ZMatrix>) -> Result<f64> {
    if !z.matches(l) {
        return Err(Error::LatticeMismatch("Z field does not match the lattice".into()));
    }
    let sq = z.map(|id, v| if id.slice < l.n_steps() { z_norm_sq(l, v) } else { 0.0 });
    let tail = conditional_tail_sum(l, &sq)?;
    Ok(tail.iter().map(|(_, v)| *v).fold(0.0, f64::max))
}

/// Picard distance: square root of the BMO-type norm of `a − b`.
pub fn picard_gap(l: &Lattice, a: &NodeField<ZMatrix>, b: &NodeField<ZMatrix>) -> Result<f64> {
    let diff = a.map(|id, x| {
        let y = b[id];
        let mut m = [[0.0; 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                m[r][c] = x[r][c] - y[r][c];
            }
        }
        m
    });
    Ok(libm::sqrt(bmo_diagnostic(l, &diff)?))
}

fn initial_field(l: &Lattice, init: &PicardInit) -> Result<NodeField<ZMatrix>> {
    match init {
        PicardInit::Zero => Ok(NodeField::filled(l, [[0.0; 2]; 2])),
        PicardInit::Constant(c) => {
            let mut m = [[0.0; 2]; 2];
            for row in m.iter_mut() {
                for v in row.iter_mut().take(l.d_prime()) {
                    *v = *c;
                }
            }
            Ok(NodeField::filled(l, m))
        }
        PicardInit::Field(f) => {
            if f.matches(l) {
                Ok(f.clone())
            } else {
                Err(Error::LatticeMismatch("initial Z field does not match the lattice".into()))
            }
        }
    }
}

/// Solves the reflected BSDE on the lattice.
pub fn solve_bsde<E, G, Gen>(d: &Domain, l: &Lattice, g: &G, gen: &Gen, opts: &BsdeOptions, exec: &E) -> Result<BsdeSolution>
where
    E: Executor,
    G: Fn(&NodeCtx) -> Point,
    Gen: Generator + ?Sized,
{
    let mut v = initial_field(l, &opts.init)?;
    let mut prev: Option<NodeField<ZMatrix>> = None;
    let mut trace = Vec::new();
    let mut inner = Vec::new();
    let mut run = 0usize;
    loop {
        let frozen = &v;
        let drift = |c: &NodeCtx, y: Point| evaluate_generator(gen, c, y, &frozen[c.id]);
        let (res, fp) = solve_state_dependent_fallible(d, l, g, &drift, opts.eta, &opts.scheme, exec)?;
        inner.push(fp.iterations());
        if let Some(p) = prev.as_ref() {
            let gap = picard_gap(l, &res.z, p)?;
            trace.push(gap);
            if gap <= opts.tolerance {
                let bmo = bmo_diagnostic(l, &res.z)?;
                return Ok(BsdeSolution { scheme: res, picard_trace: trace, bmo_diagnostic: bmo, inner_iterations: inner });
            }
            let n = trace.len();
            if n >= 2 && trace[n - 1] >= trace[n - 2] {
                run += 1;
            } else {
                run = 0;
            }
            if run >= NON_CONTRACTING_RUN {
                return Err(Error::ContractionFailure { ratios: gap_ratios(&trace) });
            }
            if n >= opts.max_iterations {
                return Err(Error::Convergence { iterations: n, residual: gap, best: res.root() });
            }
        }
        v = res.z.clone();
        prev = Some(res.z);
    }
}

/// Largest per-node defect of `Y = E[Y_next] + f(Y, Z) h − K_inc`.
pub fn bsde_residual<G: Generator + ?Sized>(l: &Lattice, sol: &SchemeResult, gen: &G) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..l.n_steps() {
        for id in l.nodes(i) {
            let ctx = NodeCtx::new(l, id);
            let mut e = Vec2::ZERO;
            for b in l.branches(id)? {
                e += sol.y[b.target] * b.prob;
            }
            let f = evaluate_generator(gen, &ctx, sol.y[id], &sol.z[id])?;
            worst = worst.max((e + f * l.h() - sol.k_inc[id] - sol.y[id]).norm());
        }
    }
    Ok(worst)
}

/// Sup-node distance between two `Z` fields, entrywise.
pub fn z_distance(a: &NodeField<ZMatrix>, b: &NodeField<ZMatrix>) -> f64 {
    let mut worst: f64 = 0.0;
    for (id, x) in a.iter() {
        let y: &ZMatrix = &b[id];
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((x[r][c] - y[r][c]).abs());
            }
        }
    }
    worst
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::fixtures::{lshape, p, square};
    use crate::geodesic::psi;
    use crate::lattice::build_lattice;
    use crate::scheme::{solve_exogenous, solve_state_dependent};

    fn two_arm(c: &NodeCtx) -> Point {
        let u = 1.0 + libm::tanh(2.0 * c.w[0]);
        let (a, b) = (u.min(1.0), (u - 1.0).max(0.0));
        p(1.9 - a - 0.6 * b, 0.3 + 0.6 * a + b)
    }

    fn clip(v: f64, lo: f64, hi: f64) -> f64 {
        v.max(lo).min(hi)
    }

    #[test]
    fn z_independent_generator_needs_one_step() {
        let ls = lshape();
        let l = build_lattice(1, 4, 1.0).unwrap();
        let c = p(0.5, 0.5);
        let gen = FnGenerator::new(|_: &NodeCtx, y: Point, _: &ZMatrix| (c - y) * 0.5);
        let sol = solve_bsde(&ls, &l, &two_arm, &gen, &BsdeOptions::default(), &Sequential).unwrap();
        assert_eq!(sol.picard_trace, alloc::vec![0.0]);
        let (sd, _) = solve_state_dependent(&ls, &l, &two_arm, &|_: &NodeCtx, y: Point| (c - y) * 0.5, None, &SchemeOptions::default(), &Sequential).unwrap();
        assert_eq!(sol.scheme.y, sd.y);
    }

    #[test]
    fn zero_generator_in_convex_domain() {
        let sq = square();
        let l = build_lattice(1, 5, 1.0).unwrap();
        let g = |c: &NodeCtx| p(0.5 + 0.3 * libm::tanh(c.w[0]), 0.5);
        let gen = FnGenerator::new(|_: &NodeCtx, _: Point, _: &ZMatrix| Vec2::ZERO);
        let sol = solve_bsde(&sq, &l, &g, &gen, &BsdeOptions::default(), &Sequential).unwrap();
        let ex = solve_exogenous(&sq, &l, &g, &|_: &NodeCtx| Vec2::ZERO, &SchemeOptions::default(), &Sequential).unwrap();
        assert_eq!(sol.scheme.y, ex.y);
        assert!(sol.scheme.k_inc.iter().all(|(_, k)| k.norm() <= 1e-12));
    }

    #[test]
    fn z_dependent_generator_contracts_and_is_unique() {
        let ls = lshape();
        let l = build_lattice(1, 5, 1.0).unwrap();
        let mut gen = FnGenerator::new(|_: &NodeCtx, _: Point, z: &ZMatrix| p(0.2 * clip(z[0][0], -1.0, 1.0), 0.0));
        gen.lipschitz_z = 0.2;
        let a = solve_bsde(&ls, &l, &two_arm, &gen, &BsdeOptions::default(), &Sequential).unwrap();
        let opts = BsdeOptions { init: PicardInit::Constant(1.0), ..BsdeOptions::default() };
        let b = solve_bsde(&ls, &l, &two_arm, &gen, &opts, &Sequential).unwrap();
        assert!(z_distance(&a.scheme.z, &b.scheme.z) <= 1e-8);
        for (id, y) in a.scheme.y.iter() {
            assert!(psi(&ls, *y, b.scheme.y[id]).unwrap() <= 1e-8);
        }
        assert!(a.ratios().iter().skip(1).all(|r| *r < 0.95), "{:?}", a.picard_trace);
        assert!(bsde_residual(&l, &a.scheme, &gen).unwrap() <= 1e-10);
        assert!(a.bmo_diagnostic.is_finite());
    }

    #[test]
    fn bmo_of_constant_field() {
        let l = build_lattice(1, 3, 2.0).unwrap();
        assert_eq!(bmo_diagnostic(&l, &NodeField::filled(&l, [[0.0; 2]; 2])).unwrap(), 0.0);
        let z = NodeField::filled(&l, [[0.3, 0.0], [0.4, 0.0]]);
        assert!((bmo_diagnostic(&l, &z).unwrap() - 0.25 * 2.0).abs() < 1e-14);
        let l2 = build_lattice(2, 2, 1.0).unwrap();
        assert!(bmo_diagnostic(&l, &NodeField::filled(&l2, [[0.0; 2]; 2])).is_err());
    }

    #[test]
    fn failing_generator_reports_node() {
        let ls = lshape();
        let l = build_lattice(1, 2, 1.0).unwrap();
        let gen = FnGenerator::new(|c: &NodeCtx, _: Point, _: &ZMatrix| p(1.0 / (c.t - 0.5), 0.0));
        let err = solve_bsde(&ls, &l, &two_arm, &gen, &BsdeOptions::default(), &Sequential).unwrap_err();
        assert!(matches!(err, Error::AtNode { .. }));
    }
}

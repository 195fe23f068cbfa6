//! Check suites run by `verify` and `audit-cat0`.

use gamma_bsde_core::audit::{cat0_audit, geodesic_structure_check, oracle_equivalence, psi_gradient_check, strong_convexity_check};
use gamma_bsde_core::bsde::{bsde_residual, solve_bsde, BsdeOptions, BsdeSolution};
use gamma_bsde_core::lattice::Lattice;
use gamma_bsde_core::scheme::{NodeCtx, SchemeResult};
use gamma_bsde_core::transport::{default_substeps, skorokhod_lipschitz_check};
use gamma_bsde_core::verify::{
    center_grid, flat_off_check, frechet_certificate_check, gamma_convexity_check, jensen_sweep, mean_contraction_check,
    perturb_terminal, special_convexity_check, stability_check, submartingale_check, uniqueness_probe,
    zdiff_stability_check, DEFAULT_MARGIN_CONSTANT,
};
use gamma_bsde_core::{build_lattice, CheckReport, Domain, Point, Vec2};

use crate::error::CliError;
use crate::exec::Parallel;
use crate::formats::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Geometry,
    Frechet,
    Scheme,
    Bsde,
    All,
}

impl Suite {
    pub fn needs_scenario(self) -> bool {
        matches!(self, Suite::Scheme | Suite::Bsde | Suite::All)
    }
}

/// Sample sizes of the sampled checks.
#[derive(Debug, Clone, Copy)]
pub struct Sizes {
    pub oracle_pairs: usize,
    pub cat0_samples: usize,
    pub gradient_pairs: usize,
    pub convexity_pairs: usize,
    pub frechet_measures: usize,
    pub transport_pairs: usize,
}

impl Default for Sizes {
    fn default() -> Self {
        Sizes { oracle_pairs: 200, cat0_samples: 500, gradient_pairs: 200, convexity_pairs: 100, frechet_measures: 100, transport_pairs: 500 }
    }
}

/// Perturbation scales of the stability check.
pub const STABILITY_SCALES: [f64; 4] = [0.2, 0.1, 0.05, 0.025];
/// Bound on the stability ratio table.
pub const STABILITY_BOUND: f64 = 10.0;
/// Allowed constant in the `Z`-difference estimate.
pub const ZDIFF_BOUND: f64 = 10.0;
/// Allowed Picard gap ratio after the second iterate.
pub const PICARD_RATIO_BOUND: f64 = 0.95;

/// Tags each report with the suite that produced it.
pub struct Tagged {
    pub suite: &'static str,
    pub report: CheckReport,
}

pub fn geometry(d: &Domain, seed: u64, sizes: &Sizes) -> Result<Vec<CheckReport>, CliError> {
    let mut out = vec![oracle_equivalence(d, sizes.oracle_pairs, seed)?];
    let cat0 = cat0_audit(d, sizes.cat0_samples, seed.wrapping_add(1))?;
    out.extend(cat0.checks);
    out.push(psi_gradient_check(d, sizes.gradient_pairs, seed.wrapping_add(2))?);
    out.push(strong_convexity_check(d, sizes.convexity_pairs, 1e-3, seed.wrapping_add(3))?);
    out.push(geodesic_structure_check(d, sizes.oracle_pairs, seed.wrapping_add(4))?);
    let centers = center_grid(d, 4);
    out.push(special_convexity_check(d, &centers, 3)?);
    out.push(gamma_convexity_check(d, &centers, 20, 32, seed.wrapping_add(5))?);
    Ok(out)
}

pub fn frechet(d: &Domain, seed: u64, sizes: &Sizes) -> Result<Vec<CheckReport>, CliError> {
    let tol = 1e-8 * (1.0 + d.diameter());
    Ok(vec![
        frechet_certificate_check(d, sizes.frechet_measures, tol, seed.wrapping_add(10))?,
        jensen_sweep(d, sizes.frechet_measures, 1e-10, seed.wrapping_add(11))?,
        mean_contraction_check(d, sizes.frechet_measures, seed.wrapping_add(12))?,
    ])
}

/// Everything a lattice-based suite needs.
pub struct Problem<'a> {
    pub domain: &'a Domain,
    pub scenario: &'a Scenario,
    pub lattice: Lattice,
    pub exec: &'a Parallel,
}

impl<'a> Problem<'a> {
    pub fn new(domain: &'a Domain, scenario: &'a Scenario, k: u32, exec: &'a Parallel) -> Result<Self, CliError> {
        let lattice = build_lattice(scenario.d_prime, k, scenario.horizon)?;
        scenario.check_terminal(&lattice)?;
        Ok(Problem { domain, scenario, lattice, exec })
    }

    pub fn options(&self) -> BsdeOptions {
        BsdeOptions { eta: self.scenario.eta, ..BsdeOptions::default() }
    }

    pub fn terminal(&self) -> impl Fn(&NodeCtx) -> Point + '_ {
        move |c: &NodeCtx| self.scenario.terminal_at(self.domain, c)
    }

    pub fn solve(&self) -> Result<BsdeSolution, CliError> {
        Ok(solve_bsde(self.domain, &self.lattice, &self.terminal(), &self.scenario.generator, &self.options(), self.exec)?)
    }

    pub fn solve_with(&self, g: &dyn Fn(&NodeCtx) -> Point) -> gamma_bsde_core::Result<SchemeResult> {
        solve_bsde(self.domain, &self.lattice, &g, &self.scenario.generator, &self.options(), self.exec).map(|s| s.scheme)
    }
}

pub fn scheme(p: &Problem, sol: &BsdeSolution, seed: u64, sizes: &Sizes) -> Result<Vec<CheckReport>, CliError> {
    let (d, l) = (p.domain, &p.lattice);
    let mut out = Vec::new();

    let drift_bound = sol.scheme.drift.iter().map(|(_, v)| v.norm()).fold(1.0, f64::max);
    let substeps = default_substeps(d, Vec2::new(drift_bound, 0.0), l.h());
    let lip = skorokhod_lipschitz_check(d, sizes.transport_pairs, l.h(), substeps, drift_bound, seed.wrapping_add(20))?;
    out.push(
        CheckReport::new(
            "transport-lipschitz",
            if lip.fitted_c1.is_finite() { 1.0 + lip.slack - lip.speed_ratio } else { f64::NEG_INFINITY },
            0.0,
            format!("y = ({}, {}), y' = ({}, {})", lip.worst_pair.0.x, lip.worst_pair.0.y, lip.worst_pair.1.x, lip.worst_pair.1.y),
        )
            .with("c1", lip.fitted_c1)
            .with("speed_ratio", lip.speed_ratio),
    );

    let functions: Vec<_> = center_grid(d, 4).into_iter().map(gamma_bsde_core::TestFunction::psi_o).collect();
    out.push(submartingale_check(d, l, &sol.scheme, &functions, DEFAULT_MARGIN_CONSTANT)?);
    out.push(flat_off_check(d, l, &sol.scheme, 1e-10, 1e-2)?);

    let g = p.terminal();
    let solve = |t: &dyn Fn(&NodeCtx) -> Point| p.solve_with(t);
    out.push(stability_check(d, l, &g, solve, &STABILITY_SCALES, STABILITY_BOUND)?);
    Ok(out)
}

pub fn bsde(p: &Problem, sol: &BsdeSolution) -> Result<Vec<CheckReport>, CliError> {
    let (d, l) = (p.domain, &p.lattice);
    let mut out = Vec::new();
    let ratios = sol.ratios();
    let worst = ratios.iter().skip(1).copied().fold(0.0, f64::max);
    let mut rep = CheckReport::new("picard-contraction", PICARD_RATIO_BOUND - worst, 0.0, String::new())
        .with("iterations", sol.picard_trace.len() as f64)
        .with("bmo", sol.bmo_diagnostic);
    for (i, r) in ratios.iter().enumerate() {
        rep = rep.with(&format!("ratio[{}]", i + 1), *r);
    }
    out.push(rep);

    let res = bsde_residual(l, &sol.scheme, &p.scenario.generator)?;
    out.push(CheckReport::new("bsde-identity", 1e-10 - res, 0.0, String::new()).with("residual", res));

    let g = p.terminal();
    out.push(uniqueness_probe(d, l, &g, &p.scenario.generator, 3, &p.options(), p.exec)?);

    let eps = STABILITY_SCALES[STABILITY_SCALES.len() - 1];
    let ge = |c: &NodeCtx| perturb_terminal(d, g(c), c, eps);
    let other = p.solve_with(&ge)?;
    let gen = &p.scenario.generator;
    out.push(zdiff_stability_check(d, l, (&sol.scheme, gen), (&other, gen), ZDIFF_BOUND)?);
    Ok(out)
}

/// Runs `suite`; lattice suites solve the scenario once and share it.
pub fn run(suite: Suite, d: &Domain, problem: Option<&Problem>, seed: u64, sizes: &Sizes) -> Result<Vec<Tagged>, CliError> {
    let mut out = Vec::new();
    let tag = |suite: &'static str, v: Vec<CheckReport>, out: &mut Vec<Tagged>| out.extend(v.into_iter().map(|report| Tagged { suite, report }));
    if matches!(suite, Suite::Geometry | Suite::All) {
        tag("geometry", geometry(d, seed, sizes)?, &mut out);
    }
    if matches!(suite, Suite::Frechet | Suite::All) {
        tag("frechet", frechet(d, seed, sizes)?, &mut out);
    }
    if suite.needs_scenario() {
        let p = problem.ok_or_else(|| CliError::Input("this suite needs --scenario".into()))?;
        let sol = p.solve()?;
        if matches!(suite, Suite::Scheme | Suite::All) {
            tag("scheme", scheme(p, &sol, seed, sizes)?, &mut out);
        }
        if matches!(suite, Suite::Bsde | Suite::All) {
            tag("bsde", bsde(p, &sol)?, &mut out);
        }
    }
    Ok(out)
}

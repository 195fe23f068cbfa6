//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use gamma_bsde_core::audit::cat0_audit;
use gamma_bsde_core::bsde::bsde_residual;
use gamma_bsde_core::frechet::{frechet_mean, DEFAULT_TOLERANCE};
use gamma_bsde_core::lattice::{Lattice, NodeId};
use gamma_bsde_core::scheme::SchemeResult;
use gamma_bsde_core::{geodesic, psi, CheckReport, Domain, Error, Point};

use crate::error::CliError;
use crate::exec::{resolve_threads, Parallel};
use crate::formats::{k_csv, load_domain, load_measure, load_scenario, parse_point, write_atomic, y_csv, z_csv};
use crate::report::{num, report_json, reports_json, table};
use crate::suites::{self, Problem, Sizes, Suite, Tagged};
use crate::svg::{render, Stroke};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "gamma-bsde", version, about = "Γ-martingales and reflected BSDEs in planar polygons")]
pub struct Cli {
    /// Worker threads (0 = all cores); GB_THREADS overrides.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Shortest path between two points.
    Geodesic {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long, value_parser = parse_point)]
        from: Point,
        #[arg(long, value_parser = parse_point)]
        to: Point,
        /// Render the domain and path to this file.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Fréchet mean of a finite measure.
    Frechet {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        measure: PathBuf,
        /// Certificate tolerance; defaults to 1e-8 (1 + diameter).
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Solve a scenario on the dyadic lattice.
    Solve(RunConfig),
    /// Run check suites.
    Verify {
        #[command(flatten)]
        config: RunConfig,
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
    },
    /// CAT(0) certification by sampling.
    #[command(name = "audit-cat0")]
    AuditCat0 {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    #[arg(long)]
    pub domain: PathBuf,
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Dyadic exponent: the lattice has 2^k steps.
    #[arg(long, default_value_t = 6)]
    pub k: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write an SVG picture.
    #[arg(long)]
    pub svg: bool,
}

/// Runs the command line and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_INPUT
                }
            };
        }
    };
    match dispatch(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INPUT
        }
    }
}

fn executor(flag: Option<usize>) -> Result<Parallel, CliError> {
    let n = resolve_threads(flag).map_err(CliError::Input)?;
    Parallel::new(n).map_err(|e| CliError::Input(format!("thread pool: {e}")))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::Io { path: PathBuf::from("<stdout>"), source: e })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn pt(p: Point) -> Value {
    json!([num(p.x), num(p.y)])
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    match cli.command {
        Command::Geodesic { domain, from, to, svg } => {
            let d = load_domain(&domain)?;
            let path = geodesic(&d, from, to)?;
            let v = json!({
                "domain": d.name(),
                "from": pt(from),
                "to": pt(to),
                "waypoints": path.waypoints.iter().map(|p| pt(*p)).collect::<Vec<_>>(),
                "length": num(path.length),
                "psi": num(psi(&d, from, to)?),
                "theta": num(path.rotation_angle()),
            });
            if let Some(file) = svg {
                let s = render(&d, &[Stroke { points: path.waypoints.clone(), color: "#c0392b" }]);
                write_atomic(&file, s.as_bytes())?;
            }
            emit(out, &pretty(&v))?;
            Ok(EXIT_OK)
        }
        Command::Frechet { domain, measure, tol } => {
            let d = load_domain(&domain)?;
            let mu = load_measure(&measure)?;
            let tol = tol.unwrap_or(DEFAULT_TOLERANCE * (1.0 + d.diameter()));
            if !(tol > 0.0) {
                return Err(CliError::Input("--tol must be positive".into()));
            }
            let c = frechet_mean(&d, &mu, tol)?;
            let v = json!({
                "mean": pt(c.mean),
                "gradient_norm": num(c.gradient_norm),
                "iterations": c.iterations,
                "objective": num(c.objective),
                "tolerance": num(tol),
            });
            emit(out, &pretty(&v))?;
            Ok(EXIT_OK)
        }
        Command::Solve(cfg) => solve(&cfg, cli.threads, out),
        Command::Verify { config, suite } => verify(&config, suite, cli.threads, out, err),
        Command::AuditCat0 { domain, samples, seed } => {
            let d = load_domain(&domain)?;
            let r = cat0_audit(&d, samples, seed)?;
            let checks: Vec<Value> = r.checks.iter().map(|c| report_json("geometry", c)).collect();
            let v = json!({
                "domain": d.name(),
                "samples": samples,
                "seed": seed,
                "norm_ratio": num(r.norm_ratio),
                "pass": r.pass,
                "checks": checks,
            });
            emit(out, &pretty(&v))?;
            Ok(if r.pass { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
    }
}

fn load_problem_inputs(cfg: &RunConfig, required: bool) -> Result<(Domain, Option<crate::formats::Scenario>), CliError> {
    let d = load_domain(&cfg.domain)?;
    let s = match &cfg.scenario {
        Some(p) => Some(load_scenario(p)?),
        None if required => return Err(CliError::Input("--scenario is required".into())),
        None => None,
    };
    Ok((d, s))
}

fn solve(cfg: &RunConfig, threads: Option<usize>, out: &mut dyn Write) -> Result<i32, CliError> {
    let (d, scenario) = load_problem_inputs(cfg, true)?;
    let mut scenario = scenario.expect("required above");
    let exec = executor(threads)?;
    let l = gamma_bsde_core::build_lattice(scenario.d_prime, cfg.k, scenario.horizon)?;
    scenario.generator.measure_bound(&l)?;
    let p = Problem::new(&d, &scenario, cfg.k, &exec)?;
    let sol = p.solve()?;
    let res = &sol.scheme;
    let l = &p.lattice;
    let residual = bsde_residual(l, res, &scenario.generator)?;
    let diag = res.diagnostics.iter().fold((0.0f64, 0usize, 0usize), |a, s| {
        (a.0.max(s.max_gradient_norm), a.1.max(s.max_mean_iterations), a.2.max(s.max_substeps))
    });
    let k_total: f64 = res.k_inc.iter().map(|(id, k)| l.weight(id) * k.norm()).sum();
    let v = json!({
        "domain": d.name(),
        "scenario": scenario.name,
        "k": cfg.k,
        "d_prime": l.d_prime(),
        "T": num(l.horizon()),
        "h": num(l.h()),
        "nodes": l.node_count(),
        "root": pt(res.root()),
        "picard_trace": sol.picard_trace.iter().map(|g| num(*g)).collect::<Vec<_>>(),
        "picard_ratios": sol.ratios().iter().map(|g| num(*g)).collect::<Vec<_>>(),
        "inner_iterations": sol.inner_iterations,
        "bmo": num(sol.bmo_diagnostic),
        "generator_bound_at_zero": num(gamma_bsde_core::Generator::bound_at_zero(&scenario.generator)),
        "bsde_residual": num(residual),
        "max_certificate": num(diag.0),
        "max_mean_iterations": diag.1,
        "max_substeps": diag.2,
        "expected_total_reflection": num(k_total),
    });
    let text = pretty(&v);
    if let Some(dir) = &cfg.out {
        write_atomic(&dir.join("Y.csv"), y_csv(l, &res.y).as_bytes())?;
        write_atomic(&dir.join("Z.csv"), z_csv(l, res).as_bytes())?;
        write_atomic(&dir.join("K.csv"), k_csv(l, &res.k_inc).as_bytes())?;
        write_atomic(&dir.join("diagnostics.json"), text.as_bytes())?;
        if cfg.svg {
            let strokes = trajectories(l, res, cfg.seed, 8);
            write_atomic(&dir.join("trajectories.svg"), render(&d, &strokes).as_bytes())?;
        }
    } else if cfg.svg {
        return Err(CliError::Input("--svg needs --out".into()));
    }
    emit(out, &text)?;
    Ok(EXIT_OK)
}

/// `Y` along `n` lattice paths sampled with the seed.
pub fn trajectories(l: &Lattice, res: &SchemeResult, seed: u64, n: usize) -> Vec<Stroke> {
    const COLORS: [&str; 4] = ["#c0392b", "#2471a3", "#1e8449", "#7d3c98"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|j| {
            let mut id = NodeId::ROOT;
            let mut pts = vec![res.y[id]];
            while id.slice < l.n_steps() {
                let brs = l.branches(id).expect("nodes of the lattice have branches");
                id = brs[rng.gen_range(0..brs.len())].target;
                pts.push(res.y[id]);
            }
            Stroke { points: pts, color: COLORS[j % COLORS.len()] }
        })
        .collect()
}

/// Numerical breakdowns inside a suite are reported as failed checks.
fn as_failure(e: &CliError) -> Option<CheckReport> {
    let CliError::Core(e) = e else { return None };
    match e.root() {
        Error::Convergence { .. } | Error::ContractionFailure { .. } | Error::StepTooLarge { .. } => {
            Some(CheckReport::new("solver", f64::NEG_INFINITY, 0.0, e.to_string()))
        }
        _ => None,
    }
}

fn verify(cfg: &RunConfig, suite: Suite, threads: Option<usize>, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let (d, scenario) = load_problem_inputs(cfg, suite.needs_scenario() && suite != Suite::All)?;
    let exec = executor(threads)?;
    let problem = match &scenario {
        Some(s) => Some(Problem::new(&d, s, cfg.k, &exec)?),
        None => None,
    };
    let effective = if suite == Suite::All && problem.is_none() { None } else { Some(suite) };
    let reports = match effective {
        Some(s) => run_suite(s, &d, problem.as_ref(), cfg.seed)?,
        None => {
            let mut r = run_suite(Suite::Geometry, &d, None, cfg.seed)?;
            r.extend(run_suite(Suite::Frechet, &d, None, cfg.seed)?);
            r
        }
    };
    let json = reports_json(&reports);
    let text = table(&reports);
    if let Some(dir) = &cfg.out {
        write_atomic(&dir.join("report.json"), json.as_bytes())?;
        write_atomic(&dir.join("report.txt"), text.as_bytes())?;
    }
    emit(out, &json)?;
    let _ = err.write_all(text.as_bytes());
    Ok(if reports.iter().all(|t| t.report.pass) { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn run_suite(suite: Suite, d: &Domain, p: Option<&Problem>, seed: u64) -> Result<Vec<Tagged>, CliError> {
    match suites::run(suite, d, p, seed, &Sizes::default()) {
        Ok(r) => Ok(r),
        Err(e) => match as_failure(&e) {
            Some(report) => Ok(vec![Tagged { suite: "solver", report }]),
            None => Err(e),
        },
    }
}

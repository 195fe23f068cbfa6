//! File formats: domain, measure and scenario JSON, node-field CSV, and
//! atomic output.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use gamma_bsde_core::frechet::DiscreteMeasure;
use gamma_bsde_core::lattice::{Lattice, NodeField};
use gamma_bsde_core::scheme::{NodeCtx, SchemeResult};
use gamma_bsde_core::{Domain, Point, Vec2};

use crate::error::CliError;
use crate::expr::{Env, Expr, Role};
use crate::generator::ExprGenerator;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainFile {
    pub name: String,
    pub vertices: Vec<[f64; 2]>,
}

impl DomainFile {
    pub fn build(&self) -> Result<Domain, gamma_bsde_core::Error> {
        Domain::new(self.name.clone(), self.vertices.iter().map(|v| Point::new(v[0], v[1])).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub p: [f64; 2],
    pub w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lipschitz {
    #[serde(default)]
    pub y: f64,
    #[serde(default)]
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: Option<String>,
    pub terminal: String,
    #[serde(default = "zero_expr")]
    pub generator: String,
    #[serde(default)]
    pub lipschitz: Option<Lipschitz>,
    #[serde(default = "one")]
    pub d_prime: usize,
    #[serde(rename = "T", default = "unit")]
    pub horizon: f64,
    /// Window length of the inner fixed point.
    #[serde(default)]
    pub eta: Option<f64>,
}

fn zero_expr() -> String {
    "0".into()
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

/// A parsed scenario: terminal and generator expressions bound to a domain.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub terminal: Expr,
    pub generator: ExprGenerator,
    pub d_prime: usize,
    pub horizon: f64,
    pub eta: Option<f64>,
}

impl Scenario {
    pub fn from_file(f: &ScenarioFile) -> Result<Scenario, CliError> {
        if !(1..=2).contains(&f.d_prime) {
            return Err(CliError::Input(format!("d_prime must be 1 or 2, got {}", f.d_prime)));
        }
        if !(f.horizon > 0.0 && f.horizon.is_finite()) {
            return Err(CliError::Input(format!("T must be positive, got {}", f.horizon)));
        }
        if f.eta.is_some_and(|e| !(e > 0.0)) {
            return Err(CliError::Input("eta must be positive".into()));
        }
        let terminal = Expr::parse(&f.terminal, Role::Terminal, f.d_prime).map_err(|e| CliError::Expr { field: "terminal", source: e })?;
        let g = Expr::parse(&f.generator, Role::Generator, f.d_prime).map_err(|e| CliError::Expr { field: "generator", source: e })?;
        let lip = f.lipschitz.unwrap_or(Lipschitz { y: 0.0, z: 0.0 });
        Ok(Scenario {
            name: f.name.clone().unwrap_or_else(|| "scenario".into()),
            terminal,
            generator: ExprGenerator::new(g, lip.y, lip.z),
            d_prime: f.d_prime,
            horizon: f.horizon,
            eta: f.eta,
        })
    }

    /// Terminal value at a node, projected into the domain. Evaluation
    /// errors are reported at the first offending node by [`check_terminal`].
    pub fn terminal_at(&self, d: &Domain, ctx: &NodeCtx) -> Point {
        match self.terminal.eval_point(&Env::at(ctx)) {
            Ok(p) => d.project(p),
            Err(_) => Point::new(f64::NAN, f64::NAN),
        }
    }

    pub fn check_terminal(&self, l: &Lattice) -> Result<(), CliError> {
        let n = l.n_steps();
        for id in l.nodes(n) {
            let ctx = NodeCtx::new(l, id);
            self.terminal.eval_point(&Env::at(&ctx)).map_err(|e| CliError::Input(format!("terminal at w = {:?}: {e}", ctx.w)))?;
        }
        Ok(())
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Json { path: path.to_path_buf(), source: e })
}

pub fn load_domain(path: &Path) -> Result<Domain, CliError> {
    let f: DomainFile = parse_json(path)?;
    f.build().map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn load_measure(path: &Path) -> Result<DiscreteMeasure, CliError> {
    let atoms: Vec<Atom> = parse_json(path)?;
    DiscreteMeasure::new(atoms.iter().map(|a| (Point::new(a.p[0], a.p[1]), a.w)).collect())
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let f: ScenarioFile = parse_json(path)?;
    Scenario::from_file(&f).map_err(|e| match e {
        CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
        CliError::Expr { field, source } => CliError::Input(format!("{}: {field}: {source}", path.display())),
        e => e,
    })
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        // Keep the sign of negative zero out of diffs.
        return "0".into();
    }
    format!("{v:?}")
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io { path: path.to_path_buf(), source: e };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Node field as CSV: `slice`, the lattice offsets, then the value columns.
pub fn field_csv<V>(l: &Lattice, field: &NodeField<V>, columns: &[String], values: impl Fn(&V) -> Vec<f64>) -> String {
    let mut out = String::from("slice");
    for c in 0..l.d_prime() {
        let _ = write!(out, ",o{}", c + 1);
    }
    for c in columns {
        let _ = write!(out, ",{c}");
    }
    out.push('\n');
    for (id, v) in field.iter() {
        let _ = write!(out, "{}", id.slice);
        let o = l.offset(id);
        for x in o.iter().take(l.d_prime()) {
            let _ = write!(out, ",{x}");
        }
        for x in values(v) {
            let _ = write!(out, ",{}", fmt_f64(x));
        }
        out.push('\n');
    }
    out
}

pub fn y_csv(l: &Lattice, y: &NodeField<Point>) -> String {
    field_csv(l, y, &["y1".into(), "y2".into()], |p| vec![p.x, p.y])
}

pub fn z_csv(l: &Lattice, res: &SchemeResult) -> String {
    let dp = l.d_prime();
    let cols: Vec<String> = (1..=2).flat_map(|r| (1..=dp).map(move |c| format!("z{r}{c}"))).collect();
    field_csv(l, &res.z, &cols, |z| (0..2).flat_map(|r| (0..dp).map(move |c| z[r][c])).collect())
}

pub fn k_csv(l: &Lattice, k: &NodeField<Vec2>) -> String {
    field_csv(l, k, &["k1".into(), "k2".into()], |v| vec![v.x, v.y])
}

/// Parses `X,Y`.
pub fn parse_point(s: &str) -> Result<Point, String> {
    let mut it = s.split(',');
    let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
        return Err(format!("expected X,Y, got `{s}`"));
    };
    let x: f64 = a.trim().parse().map_err(|_| format!("bad coordinate `{a}`"))?;
    let y: f64 = b.trim().parse().map_err(|_| format!("bad coordinate `{b}`"))?;
    if !(x.is_finite() && y.is_finite()) {
        return Err(format!("non-finite point `{s}`"));
    }
    Ok(Point::new(x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use gamma_bsde_core::build_lattice;

    #[test]
    fn float_format_roundtrips() {
        for v in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, std::f64::consts::SQRT_2, 5e-324] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(-0.0), "0");
        assert_eq!(fmt_f64(1.0), "1.0");
    }

    #[test]
    fn points() {
        assert_eq!(parse_point("0.5, -1").unwrap(), Point::new(0.5, -1.0));
        assert!(parse_point("1").is_err());
        assert!(parse_point("1,2,3").is_err());
        assert!(parse_point("a,2").is_err());
    }

    #[test]
    fn csv_layout() {
        let l = build_lattice(2, 1, 1.0).unwrap();
        let y = NodeField::from_fn(&l, |id| Point::new(id.slice as f64, 0.5));
        let s = y_csv(&l, &y);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "slice,o1,o2,y1,y2");
        assert_eq!(lines[1], "0,0,0,0,0.5");
        assert_eq!(lines.len(), 1 + l.node_count());
    }

    #[test]
    fn scenario_validation() {
        let f: ScenarioFile = serde_json::from_str(r#"{"terminal": "(w1, 0)", "generator": "(y1, z11)", "d_prime": 1, "T": 1}"#).unwrap();
        let s = Scenario::from_file(&f).unwrap();
        assert!(s.generator.expr().uses_z());
        let bad: ScenarioFile = serde_json::from_str(r#"{"terminal": "(y1, 0)"}"#).unwrap();
        assert!(matches!(Scenario::from_file(&bad), Err(CliError::Expr { field: "terminal", .. })));
        assert!(serde_json::from_str::<ScenarioFile>(r#"{"terminal": "0", "extra": 1}"#).is_err());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/out.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}

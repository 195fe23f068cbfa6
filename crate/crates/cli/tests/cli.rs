use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(name: &str) -> String {
    root().join("fixtures").join(name).to_string_lossy().into_owned()
}

fn run(args: &[&str], threads: Option<&str>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_gamma-bsde"));
    c.args(args);
    match threads {
        Some(t) => c.env("GB_THREADS", t),
        None => c.env_remove("GB_THREADS"),
    };
    c.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn geodesic_in_square() {
    let o = run(&["geodesic", "--domain", &fixture("square.json"), "--from", "0,0", "--to", "1,1"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let len = v["length"].as_f64().unwrap();
    assert!((len - std::f64::consts::SQRT_2).abs() < 1e-15);
    assert!(stdout(&o).contains("1.41421356"));
    assert_eq!(v["waypoints"].as_array().unwrap().len(), 2);
}

#[test]
fn geodesic_svg_is_standalone() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("g.svg");
    let o = run(
        &["geodesic", "--domain", &fixture("lshape.json"), "--from", "1.9,0.5", "--to", "0.5,1.9", "--svg", svg.to_str().unwrap()],
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["psi"].as_f64().unwrap() - 4.24).abs() < 1e-12);
    assert_eq!(v["waypoints"][1], serde_json::json!([1.0, 1.0]));
    let text = fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 2.0 2.0\""));
    assert!(text.contains("<polyline") && text.trim_end().ends_with("</svg>"));
}

#[test]
fn missing_domain_names_the_path() {
    let o = run(&["geodesic", "--domain", "no/such/domain.json", "--from", "0,0", "--to", "1,1"], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no/such/domain.json"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["frobnicate"], None).status.code(), Some(1));
    let o = run(&["geodesic", "--domain", &fixture("square.json"), "--from", "0", "--to", "1,1"], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("X,Y"));
    assert_eq!(run(&["--help"], None).status.code(), Some(0));
}

#[test]
fn exterior_points_are_input_errors() {
    let o = run(&["geodesic", "--domain", &fixture("lshape.json"), "--from", "1.5,1.5", "--to", "0,0"], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("outside"));
}

#[test]
fn frechet_two_arm() {
    let o = run(&["frechet", "--domain", &fixture("lshape.json"), "--measure", &fixture("measure_two_arm.json")], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["mean"], serde_json::json!([1.0, 1.0]));
    assert!(v["gradient_norm"].as_f64().unwrap() <= 1e-8);
    assert!((v["objective"].as_f64().unwrap() - 1.06).abs() < 1e-12);
}

#[test]
fn bad_scenario_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s.json");
    fs::write(&s, r#"{"terminal": "(w1,\n  0.5 *)", "d_prime": 1, "T": 1}"#).unwrap();
    let o = run(&["solve", "--domain", &fixture("square.json"), "--scenario", s.to_str().unwrap(), "--k", "3"], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2, column 8"), "{}", stderr(&o));
}

#[test]
fn lattice_capacity_is_an_input_error() {
    let o = run(
        &["solve", "--domain", &fixture("lshape.json"), "--scenario", &fixture("scenarios/lshape_two_arm.json"), "--k", "40"],
        None,
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn solve_outputs_do_not_depend_on_threads() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |dir: &Path| {
        vec![
            "solve".to_string(),
            "--domain".into(),
            fixture("square.json"),
            "--scenario".into(),
            fixture("scenarios/square_wall.json"),
            "--k".into(),
            "4".into(),
            "--svg".into(),
            "--out".into(),
            dir.to_string_lossy().into_owned(),
        ]
    };
    let oa = run(&args(a.path()).iter().map(String::as_str).collect::<Vec<_>>(), Some("1"));
    let ob = run(&args(b.path()).iter().map(String::as_str).collect::<Vec<_>>(), Some("4"));
    assert_eq!(oa.status.code(), Some(0), "{}", stderr(&oa));
    assert_eq!(oa.stdout, ob.stdout);
    for f in ["Y.csv", "Z.csv", "K.csv", "diagnostics.json", "trajectories.svg"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let z = fs::read_to_string(a.path().join("Z.csv")).unwrap();
    assert!(z.starts_with("slice,o1,o2,z11,z12,z21,z22\n"));
    let k = fs::read_to_string(a.path().join("K.csv")).unwrap();
    assert!(k.lines().skip(1).any(|l| !l.ends_with(",0,0")), "the wall drift should charge K");
}

#[test]
fn verify_geometry_suite() {
    let o = run(&["verify", "--suite", "geometry", "--domain", &fixture("lshape.json"), "--k", "6"], None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let arr = v.as_array().unwrap();
    assert!(arr.len() >= 5);
    assert!(arr.iter().all(|r| r["pass"] == serde_json::json!(true)));
    assert!(stderr(&o).contains("0 failed"));
}

#[test]
fn verify_lattice_suite_needs_scenario() {
    let o = run(&["verify", "--suite", "bsde", "--domain", &fixture("lshape.json")], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--scenario"));
}

#[test]
fn verify_reports_failures_with_status_two() {
    // The reflex corner of the L-shape charges the compensator at the vertex
    // itself, which the flat-off check flags.
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "verify",
            "--suite",
            "scheme",
            "--domain",
            &fixture("lshape.json"),
            "--scenario",
            &fixture("scenarios/lshape_two_arm.json"),
            "--k",
            "5",
            "--out",
            dir.path().to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let flat = v.as_array().unwrap().iter().find(|r| r["name"] == "flat-off").unwrap();
    assert_eq!(flat["pass"], serde_json::json!(false));
    assert!(flat["details"]["misdirected_at_reflex_vertex"].as_f64().unwrap() > 0.0);
}

#[test]
fn audit_cat0_passes_on_fixtures() {
    for f in ["square.json", "ushape.json", "spiral.json"] {
        let o = run(&["audit-cat0", "--domain", &fixture(f), "--samples", "100", "--seed", "3"], None);
        assert_eq!(o.status.code(), Some(0), "{f}: {}", stderr(&o));
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert!(v["norm_ratio"].as_f64().unwrap() >= 1.0);
    }
}

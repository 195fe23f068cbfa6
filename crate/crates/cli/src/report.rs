//! JSON and plain-text rendering of check reports.

use std::fmt::Write as _;

use serde_json::{json, Map, Value};

use gamma_bsde_core::CheckReport;

use crate::suites::Tagged;

/// JSON number, or a string for non-finite values.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(if v == 0.0 { 0.0 } else { v })
    } else if v.is_nan() {
        json!("nan")
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub fn report_json(suite: &str, r: &CheckReport) -> Value {
    let mut details = Map::new();
    for (k, v) in &r.details {
        details.insert(k.clone(), num(*v));
    }
    json!({
        "suite": suite,
        "name": r.name,
        "pass": r.pass,
        "margin": num(r.margin),
        "tolerance": num(r.tolerance),
        "location": r.location,
        "details": details,
    })
}

pub fn reports_json(reports: &[Tagged]) -> String {
    let arr: Vec<Value> = reports.iter().map(|t| report_json(t.suite, &t.report)).collect();
    let mut s = serde_json::to_string_pretty(&arr).expect("reports serialize");
    s.push('\n');
    s
}

/// Fixed-width table, one row per check.
pub fn table(reports: &[Tagged]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<9} {:<22} {:<5} {:>13} {:>11}  location", "suite", "check", "", "margin", "tolerance");
    for t in reports {
        let r = &t.report;
        let _ = writeln!(
            s,
            "{:<9} {:<22} {:<5} {:>13.4e} {:>11.2e}  {}",
            t.suite,
            r.name,
            if r.pass { "PASS" } else { "FAIL" },
            r.margin + 0.0,
            r.tolerance,
            r.location
        );
    }
    let failed = reports.iter().filter(|t| !t.report.pass).count();
    let _ = writeln!(s, "{} checks, {} failed", reports.len(), failed);
    s
}

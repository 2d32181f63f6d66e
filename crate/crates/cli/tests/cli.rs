use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const LATTICE: &str = r#"{"families":[{"kind":"lattice","scale":6.283185307179586,"shift":0.0,"side":"positive","mult":1,"shift_derivative":0.0}],"kernel_dim":0}"#;
const SU2: &str =
    r#"{"rank":1,"positive_roots":[[1.0]],"x":[1.0],"s":0.25,"cartan_mode":"consistent-2r"}"#;
const FINITE: &str = r#"{"families":[{"kind":"explicit","values":[{"eigenvalue":2.0,"mult":1},{"eigenvalue":3.0,"mult":1}]}]}"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specreg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn gamma_prints_both_routes() {
    let out = run(&["gamma"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let g = 0.577_215_664_901_532_9;
    assert!((v["integral"].as_f64().unwrap() - g).abs() < 1e-10);
    assert!((v["series"].as_f64().unwrap() - g).abs() < 1e-10);
    assert!(v["difference"].as_f64().unwrap().abs() < 1e-10);
}

#[test]
fn bridge_on_riemann_lattice() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "lattice.json", LATTICE);
    let out = run(&["bridge", "--input", s(&input)]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&out);
    assert!(v["discrepancy"].as_f64().unwrap() < 1e-6);
    assert_eq!(v["passed"], Value::Bool(true));
}

#[test]
fn orbit_is_strongly_minimal() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "su2.json", SU2);
    let out = run(&["orbit", "--input", s(&input)]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&out);
    assert_eq!(v["strongly_minimal"], Value::Bool(true));
    assert_eq!(v["heat_minimal"], Value::Bool(true));
    assert_eq!(v["zeta_minimal"], Value::Bool(true));
}

#[test]
fn detreg_finite_spectrum() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "finite.json", FINITE);
    let out = run(&["detreg", "--input", s(&input), "--eps", "1e-3,1e-4"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&out);
    let big = v["report"]["log_Det_reg"].as_f64().unwrap();
    assert!((big - 6f64.ln()).abs() < 1e-8);
    assert_eq!(v["report"]["eps_grid"].as_array().unwrap().len(), 2);
    assert_eq!(v["expansion"]["source"], Value::String("analytic".into()));
}

#[test]
fn csv_output_and_summary() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "lattice.json", LATTICE);
    let output = dir.path().join("curve.csv");
    let out = run(&[
        "detreg",
        "--input",
        s(&input),
        "--format",
        "csv",
        "--eps",
        "0.1,0.01",
        "--output",
        s(&output),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("log Det_reg"));
    let text = fs::read_to_string(&output).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "eps,log_det_eps");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1.0000000000000001e-1,"));
}

#[test]
fn floats_carry_seventeen_digits() {
    let out = run(&["gamma"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().find(|l| l.contains("\"integral\"")).unwrap();
    let number = line.split(':').nth(1).unwrap().trim().trim_end_matches(',');
    let mantissa = number.split('e').next().unwrap().replace(['-', '.'], "");
    assert_eq!(mantissa.len(), 17, "{number}");
}

#[test]
fn zeta_reports_poles() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "lattice.json", LATTICE);
    let out = run(&["zeta", "--input", s(&input), "--s=-1,0,0.5,2"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&out);
    let poles: Vec<f64> = v["poles"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p.as_f64().unwrap())
        .collect();
    assert_eq!(poles, vec![-1.0, 0.5]);
    let values = v["values"].as_array().unwrap();
    assert_eq!(values.len(), 2);
    assert_eq!(values[0]["value"].as_f64().unwrap(), -0.5);
    let z2 = std::f64::consts::PI.powi(4) / 90.0 / (2.0 * std::f64::consts::PI).powi(4);
    assert!((values[1]["value"].as_f64().unwrap() - z2).abs() < 1e-12);
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "su2.json", SU2);
    let a = run(&["orbit", "--input", s(&input)]);
    let b = run(&["orbit", "--input", s(&input)]);
    assert_eq!(a.stdout, b.stdout);
    let input = write(&dir, "lattice.json", LATTICE);
    let a = run(&["zeta", "--input", s(&input), "--format", "csv"]);
    let b = run(&["zeta", "--input", s(&input), "--format", "csv"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn malformed_json_reports_position() {
    let dir = TempDir::new().unwrap();
    let input = write(
        &dir,
        "bad.json",
        "{\n  \"families\": [\n    {\"kind\": \"lattice\", \"shift\": 0.0,}\n  ]\n}\n",
    );
    let out = run(&["detreg", "--input", s(&input)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.json:3:"), "{err}");
}

#[test]
fn schema_violations_are_input_errors() {
    let dir = TempDir::new().unwrap();
    let unknown = write(&dir, "unknown.json", r#"{"families":[],"kernal_dim":1}"#);
    assert_eq!(
        run(&["bridge", "--input", s(&unknown)]).status.code(),
        Some(2)
    );
    let negative = write(
        &dir,
        "neg.json",
        r#"{"families":[{"kind":"lattice","scale":-1.0,"shift":0.0,"side":"full","mult":1}]}"#,
    );
    assert_eq!(
        run(&["bridge", "--input", s(&negative)]).status.code(),
        Some(2)
    );
    let orbit = write(
        &dir,
        "orbit.json",
        r#"{"rank":2,"positive_roots":[[1.0]],"x":[1.0,0.0],"s":0.1}"#,
    );
    assert_eq!(run(&["orbit", "--input", s(&orbit)]).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(
        run(&["zeta", "--input", s(&missing)]).status.code(),
        Some(2)
    );
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["detreg"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["gamma", "--format", "xml"]).status.code(), Some(2));
    assert_eq!(run(&["gamma", "--abs-tol", "-1"]).status.code(), Some(2));
}

#[test]
fn verification_failure_exits_one() {
    assert_eq!(run(&["gamma", "--abs-tol", "1e-18"]).status.code(), Some(1));
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "lattice.json", LATTICE);
    let out = run(&["bridge", "--input", s(&input), "--abs-tol", "1e-20"]);
    assert_eq!(out.status.code(), Some(1));
    // The report is still written.
    assert!(json(&out)["discrepancy"].is_number());
}

#[test]
fn orbit_curve_on_custom_grid() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "su2.json", SU2);
    let out = run(&[
        "orbit",
        "--input",
        s(&input),
        "--format",
        "csv",
        "--eps",
        "0.1,0.01,0.001",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "eps,tr_H_eps");
    assert_eq!(rows.len(), 4);
    for row in &rows[1..] {
        let tr: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert!(tr.abs() <= 1e-12);
    }
}

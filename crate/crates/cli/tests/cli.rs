use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn slitlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slitlab")).args(args).output().expect("binary runs")
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn harmonic_basis_passes_with_five_polynomials() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("basis");
    let cfg = write_config(tmp.path(), r#"{"experiment": "harmonic-basis", "degree": 4}"#);
    let res = slitlab(&["harmonic-basis", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stdout));
    let rep = report(&out);
    assert_eq!(rep["schema_version"], 1);
    assert_eq!(rep["metrics"]["basis_size"], 5);
    assert!(rep["checks"].as_array().unwrap().iter().all(|c| c["verdict"] == "PASS"));
    assert_eq!(rep["config"]["degree"], 4);
    let table = std::fs::read_to_string(out.join("basis.csv")).unwrap();
    assert!(table.starts_with("index,seed,mu,m,coefficient,closed_form,abs_diff\n"));
}

#[test]
fn malformed_json_is_a_config_error_without_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("never");
    let cfg = write_config(tmp.path(), r#"{"experiment": "signorini", "grid": {"n": 65,}"#);
    let res = slitlab(&["signorini", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn out_of_range_parameters_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("never");
    for text in [
        r#"{"scales": {"rho": 0.7}}"#,
        r#"{"alpha": 1.5}"#,
        r#"{"grid": {"n": 64}}"#,
        r#"{"experiment": "barrier"}"#,
        r#"{"unknown_key": 1}"#,
    ] {
        let cfg = write_config(tmp.path(), text);
        let res = slitlab(&["signorini", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(res.status.code(), Some(2), "{text}");
    }
    let res = slitlab(&["signorini", "--grid-n", "100", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn config_file_overrides_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("geo");
    let cfg = write_config(tmp.path(), r#"{"seed": 5}"#);
    let res = slitlab(&["geometry-check", "--config", &cfg, "--seed", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0));
    assert_eq!(report(&out)["config"]["seed"], 5);
    let res = slitlab(&["geometry-check", "--seed", "3", "--grid-n", "33", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0));
    let rep = report(&out);
    assert_eq!(rep["config"]["seed"], 3);
    assert_eq!(rep["config"]["grid"]["n"], 33);
}

#[test]
fn signorini_model_data_at_257() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sig");
    let res = slitlab(&["signorini", "--grid-n", "257", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stdout));
    let rep = report(&out);
    let exponent = rep["metrics"]["growth_exponent"].as_f64().unwrap();
    assert!((exponent - 1.5).abs() <= 0.05, "{exponent}");
    let x0 = rep["metrics"]["free_boundary_point"][0].as_f64().unwrap();
    assert!(x0.abs() <= 2.0 * 2.0 / 256.0);
    let artifacts: Vec<&str> = rep["artifacts"].as_array().unwrap().iter().map(|a| a.as_str().unwrap()).collect();
    assert_eq!(artifacts, ["growth.csv", "free_boundary.csv", "report.json"]);
}

#[test]
fn failing_checks_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fail");
    // the innermost dyadic scale falls below the grid resolution
    let res = slitlab(&["flatness", "--grid-n", "17", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1), "{}", String::from_utf8_lossy(&res.stdout));
    let rep = report(&out);
    assert!(rep["checks"].as_array().unwrap().iter().any(|c| c["name"] == "module_error" && c["verdict"] == "FAIL"));
}

#[test]
fn repeated_runs_write_identical_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let res = slitlab(&["geometry-check", "--seed", "11", "--out", dir.to_str().unwrap()]);
        assert_eq!(res.status.code(), Some(0));
    }
    let read = |d: &Path| std::fs::read(d.join("identities.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn writes_fields_on_request() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fields");
    let cfg = write_config(tmp.path(), r#"{"write_fields": true, "grid": {"n": 129}}"#);
    let res = slitlab(&["signorini", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0));
    let stored = slitlab::pdesolve::read_binary(&out.join("u.bin")).unwrap();
    assert_eq!(stored.npts, 129);
    assert!(out.join("u.bin.json").exists());
}

//! One line per acceptance criterion; exits non-zero if any criterion fails.

use std::path::Path;
use std::process::ExitCode;

use serde_json::{json, Value};
use slitlab::experiment::{parse_config, run, RunReport, Verdict};

struct Outcome {
    pass: bool,
    detail: String,
}

fn execute(out: &Path, mut config: Value) -> RunReport {
    config["out_dir"] = json!(out);
    let cfg = parse_config(&config.to_string()).expect("acceptance configuration is valid");
    run(&cfg).expect("experiment writes its report")
}

fn graph(n: usize, terms: Value) -> Value {
    json!({ "n": n, "g": { "kind": "poly", "terms": terms }, "k": 6, "alpha": 0.5 })
}

/// Passes when no check of any run failed; the detail lists failures, or the
/// named checks when everything passed.
fn judge(runs: &[&RunReport], shown: &[&str]) -> Outcome {
    let failed: Vec<String> = runs
        .iter()
        .flat_map(|r| r.checks.iter().filter(|c| c.verdict == Verdict::Fail).map(move |c| format!("{}/{}: {}", r.experiment, c.name, c.detail)))
        .collect();
    if !failed.is_empty() {
        return Outcome { pass: false, detail: failed.join("; ") };
    }
    let detail = runs
        .iter()
        .flat_map(|r| r.checks.iter().filter(|c| shown.contains(&c.name.as_str())).map(|c| c.detail.clone()))
        .collect::<Vec<_>>()
        .join("; ");
    Outcome { pass: true, detail }
}

fn harmonic_algebra(dir: &Path) -> Outcome {
    let rep = execute(&dir.join("c1"), json!({ "experiment": "harmonic-basis", "degree": 4 }));
    judge(&[&rep], &["closed_form", "round_trip", "runtime"])
}

fn solver_order(dir: &Path) -> Outcome {
    let flat = execute(&dir.join("c2-flat"), json!({ "experiment": "laplace-convergence", "grid": { "n": 129 } }));
    let tilted = execute(
        &dir.join("c2-tilted"),
        json!({
            "experiment": "laplace-convergence",
            "geometry": graph(2, json!([{ "exp": [1], "coeff": 0.3 }])),
            "grid": { "n": 129 },
        }),
    );
    judge(&[&flat, &tilted], &["second_order"])
}

fn regularization(dir: &Path) -> Outcome {
    let rep = execute(&dir.join("c3"), json!({ "experiment": "regularize", "alpha": 0.25, "delta": 0.1 }));
    judge(&[&rep], &["delta_linearity", "flat_exact"])
}

fn barrier(dir: &Path) -> Outcome {
    let rep = execute(&dir.join("c4"), json!({ "experiment": "barrier", "alpha": 0.25, "delta": 0.1 }));
    judge(&[&rep], &["flat_floor", "curved_positive"])
}

fn optimal_regularity(dir: &Path) -> Outcome {
    let rep = execute(&dir.join("c5"), json!({ "experiment": "signorini", "grid": { "n": 513 } }));
    judge(&[&rep], &["free_boundary_location", "growth_exponent"])
}

fn harnack_gain(dir: &Path) -> Outcome {
    let tilted = execute(&dir.join("c6-tilted"), json!({ "experiment": "harnack-gain", "tilt": 0.3, "refine": false }));
    let curved = execute(
        &dir.join("c6-curved"),
        json!({
            "experiment": "harnack-gain",
            "geometry": graph(2, json!([{ "exp": [2], "coeff": 0.05 }])),
            "refine": true,
        }),
    );
    judge(&[&tilted, &curved], &["by_u_rate_161", "gain_161", "gain_321", "gain_stability"])
}

fn bootstrap(dir: &Path) -> Outcome {
    let rep = execute(&dir.join("c7"), json!({ "experiment": "bootstrap" }));
    judge(&[&rep], &["slope_match_65", "slope_match_129", "refinement"])
}

fn flatness(dir: &Path) -> Outcome {
    let rep = execute(&dir.join("c8"), json!({ "experiment": "flatness" }));
    judge(&[&rep], &["planted_bounded", "k0_constraint"])
}

fn small_configs() -> Vec<Value> {
    vec![
        json!({ "experiment": "geometry-check", "samples": 16 }),
        json!({ "experiment": "harmonic-basis", "degree": 3 }),
        json!({ "experiment": "regularize", "samples": 16, "scales": { "levels": [2, 3, 4] } }),
        json!({ "experiment": "barrier", "samples": 16 }),
        json!({ "experiment": "laplace-convergence", "grid": { "n": 33 } }),
        json!({ "experiment": "harnack-gain", "geometry": graph(1, json!([])), "grid": { "n": 257 }, "refine": false }),
        json!({ "experiment": "signorini", "grid": { "n": 129 } }),
        json!({ "experiment": "bootstrap", "grid": { "n": 33 }, "refine": false }),
        json!({ "experiment": "flatness", "samples": 64 }),
    ]
}

fn determinism(dir: &Path) -> Outcome {
    let mut mismatched = Vec::new();
    let mut tables = 0;
    for (i, cfg) in small_configs().into_iter().enumerate() {
        let (a, b) = (dir.join(format!("c9-{i}-a")), dir.join(format!("c9-{i}-b")));
        let first = execute(&a, cfg.clone());
        let second = execute(&b, cfg);
        let csvs: Vec<&String> = first.artifacts.iter().filter(|f| f.ends_with(".csv")).collect();
        if csvs.is_empty() || second.artifacts != first.artifacts {
            mismatched.push(format!("{}: artifacts {:?} vs {:?}", first.experiment, first.artifacts, second.artifacts));
        }
        for name in csvs {
            tables += 1;
            if std::fs::read(a.join(name)).ok() != std::fs::read(b.join(name)).ok() {
                mismatched.push(format!("{}/{name}", first.experiment));
            }
        }
    }
    if mismatched.is_empty() {
        Outcome { pass: true, detail: format!("{tables} tables identical across two runs of all nine experiments") }
    } else {
        Outcome { pass: false, detail: format!("differing outputs: {}", mismatched.join(", ")) }
    }
}

type Criterion = fn(&Path) -> Outcome;

fn main() -> ExitCode {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let criteria: [(&str, Criterion); 9] = [
        ("harmonic slit algebra", harmonic_algebra),
        ("solver order", solver_order),
        ("regularization bounds", regularization),
        ("barrier", barrier),
        ("optimal regularity", optimal_regularity),
        ("boundary Harnack gain", harnack_gain),
        ("bootstrap", bootstrap),
        ("improvement of flatness", flatness),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (title, criterion)) in criteria.iter().enumerate() {
        let started = std::time::Instant::now();
        let outcome = criterion(tmp.path());
        failures += usize::from(!outcome.pass);
        println!(
            "criterion {}: {} {title} ({:.1} s): {}",
            i + 1,
            if outcome.pass { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64(),
            outcome.detail
        );
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn loxo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loxo")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path).unwrap().lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

const CIRCLE_INIT: &str = r#"{"x":[0.5,0.0],"U":[0.0,1.0],"A":[-2.0,0.0]}"#;

#[test]
fn circle_on_flat_metric_closes() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("circle.csv");
    let svg = dir.path().join("circle.svg");
    let length = std::f64::consts::PI.to_string();
    let out = loxo(&[
        "integrate",
        "circle",
        "--metric",
        "flat",
        "--init",
        CIRCLE_INIT,
        "--length",
        &length,
        "--out",
        csv.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = json(&out);
    assert_eq!(summary["termination"]["reason"], "max-length");
    assert!(summary["max_res"].as_f64().unwrap() < 1e-7);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("s,x1,x2,U1,U2,A1,A2,J1,J2,kappa,res_unit,res_orthoA,res_orthoJ,res_null\n"));
    let rows = csv_rows(&csv);
    let last = rows.last().unwrap();
    let (x, y): (f64, f64) = (last[1].parse().unwrap(), last[2].parse().unwrap());
    assert!((x - 0.5).hypot(y) < 1e-7);
    assert!(last[7].is_empty() && last[9].is_empty() && last[13].is_empty());
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<polyline"));
}

#[test]
fn loxodrome_without_jerk_aborts() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("lox.csv");
    let out = loxo(&[
        "integrate",
        "loxodrome",
        "--metric",
        "flat",
        "--init",
        r#"{"x":[0,0],"U":[1,0],"A":[0,1],"J":[0,0],"kappa":0.5}"#,
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out)["termination"]["reason"], "degenerate-jerk");
    assert_eq!(csv_rows(&csv).len(), 1);
}

#[test]
fn missing_metric_is_a_config_error() {
    let out = loxo(&["integrate", "circle", "--init", CIRCLE_INIT]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("metric"));
    let out = loxo(&["integrate", "circle", "--metric", r#"{"K":1}"#, "--init", CIRCLE_INIT]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kind"));
}

#[test]
fn unconstrained_init_is_rejected() {
    let out = loxo(&["integrate", "circle", "--metric", "flat", "--init", r#"{"x":[0,0],"U":[1,0.2],"A":[0,1]}"#]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    // unit for the sphere metric, whose factor at x is 40/21
    let init = r#"{"x":[0.2,0.1],"U":[0.315,0.42],"A":[-0.8,0.6],"J":[0.4,-0.3],"kappa":0.3}"#;
    let run = |name: &str| {
        let csv = dir.path().join(name);
        let out = loxo(&[
            "integrate",
            "loxodrome",
            "--metric",
            r#"{"kind":"sphere","K":1}"#,
            "--rho",
            "constant-curvature",
            "--init",
            init,
            "--scheme",
            "rk45",
            "--step",
            "0.01",
            "--length",
            "2",
            "--seed",
            "9",
            "--out",
            csv.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        (std::fs::read(&csv).unwrap(), out.stdout)
    };
    let (csv_a, json_a) = run("a.csv");
    let (csv_b, json_b) = run("b.csv");
    assert_eq!(csv_a, csv_b);
    assert_eq!(json_a, json_b);

    let summary_path = dir.path().join("summary.json");
    std::fs::write(&summary_path, &json_a).unwrap();
    let replay_csv = dir.path().join("replay.csv");
    let out = loxo(&["replay", summary_path.to_str().unwrap(), "--out", replay_csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read(&replay_csv).unwrap(), csv_a);
    assert_eq!(out.stdout, json_a);
}

#[test]
fn lox_flat_limits_and_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("lox.csv");
    let svg = dir.path().join("lox.svg");
    let out = loxo(&[
        "lox-flat",
        "--p=-1,0.5",
        "--q=1,-0.25",
        "--beta",
        "1",
        "--theta-min=-40",
        "--theta-max",
        "40",
        "--samples",
        "801",
        "--out",
        csv.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&csv);
    assert_eq!(rows.len(), 801);
    let z = |r: &Vec<String>| (r[1].parse::<f64>().unwrap(), r[2].parse::<f64>().unwrap());
    let (a, b) = (z(&rows[0]), z(rows.last().unwrap()));
    assert!((a.0 + 1.0).hypot(a.1 - 0.5) < 1e-6);
    assert!((b.0 - 1.0).hypot(b.1 + 0.25) < 1e-6);
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<polyline"));

    let out = loxo(&["lox-flat", "--p=0.3,0", "--q=0,1", "--beta", "2", "--theta-min", "0.7", "--samples", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().count(), 2);
    let theta: f64 = text.lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
    assert_eq!(theta, 0.7);

    let out = loxo(&["lox-flat", "--p=0,0", "--q=1,0", "--beta", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn classify_examples() {
    let out = loxo(&["classify", "--F", "1"]);
    assert_eq!(json(&out)["kind"], "circular");
    let out = loxo(&["classify", "--lambda", "1"]);
    assert_eq!(json(&out)["kind"], "radial");
    let out = loxo(&["classify", "--lambda", "1", "--F", "1"]);
    let v = json(&out);
    assert_eq!(v["kind"], "loxodromic");
    assert!((v["beta"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let out = loxo(&["classify"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_suites() {
    let out = loxo(&["verify", "transforms", "--seed", "42"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out);
    assert_eq!(report["passed"], true);
    for c in report["checks"].as_array().unwrap() {
        assert!(c["observed"].as_f64().unwrap() <= c["tolerance"].as_f64().unwrap());
        assert!(!c["anchor"].as_str().unwrap().is_empty());
    }

    let out = loxo(&["verify", "flat-model", "--seed", "42"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    let names: Vec<&str> = report["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"loxodrome-discriminant"));

    let out = loxo(&["verify", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
}

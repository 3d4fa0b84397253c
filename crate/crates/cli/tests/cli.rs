use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_nested-growth"));
    c.env_remove("NESTED_GROWTH_OUTPUT_DIR");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn cdf_value(args: &[&str]) -> f64 {
    let o = run(args);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let row = text.lines().nth(1).expect("one data row");
    row.split(',').nth(1).unwrap().parse().unwrap()
}

#[test]
fn cdf_examples() {
    assert!((cdf_value(&["cdf", "--law", "exp1", "--at", "1"]) - 0.6321206).abs() < 1e-7);
    assert!((cdf_value(&["cdf", "--law", "thm3", "--d", "1", "--k", "2", "--at", "1"]) - 0.2834687).abs() < 1e-7);
    assert!((cdf_value(&["cdf", "--law", "distance", "--d", "1", "--at", "1"]) - 0.9109).abs() < 1e-4);
    assert!((cdf_value(&["cdf", "--law", "hypoexponential", "--rates", "1,2", "--at", "1"]) - 0.39958).abs() < 1e-5);
}

#[test]
fn cdf_grid_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cdf.csv");
    let o = run(&[
        "cdf", "--law", "thm4", "--d", "2", "--l", "2", "--from", "0", "--to", "3", "--points", "31", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&path).unwrap();
    let values: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), 31);
    assert_eq!(values[0], 0.0);
    assert!(values.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn cdf_missing_parameters_is_usage_error() {
    let o = run(&["cdf", "--law", "thm3", "--at", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["cdf", "--law", "hypoexponential", "--rates", "inf", "--at", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

fn classify_json(args: &[&str]) -> Value {
    let mut full = vec!["classify"];
    full.extend_from_slice(args);
    let o = run(&full);
    assert!(o.status.success(), "{}", stderr(&o));
    serde_json::from_str(&stdout(&o)).unwrap()
}

#[test]
fn classify_examples() {
    let v = classify_json(&["--d", "1", "--k", "3", "--a=-3,-3,-3", "--b", "1", "--c", "1,1,1"]);
    assert_eq!(v["kind"], "theorem1");
    assert_eq!(v["law"]["kind"], "hypoexponential");
    assert_eq!(v["law"]["rates"], serde_json::json!([1.0, 1.0, 1.0]));
    assert_eq!(v["scale_exponent"], "2");

    let v = classify_json(&["--d", "1", "--k", "2", "--a=-1/2,1/2", "--b", "1"]);
    assert_eq!(v["kind"], "theorem2");
    assert_eq!(v["law"]["kind"], "exp1");
    assert_eq!(v["scale_exponent"], "-1/2");

    let v = classify_json(&["--d", "1", "--k", "2", "--a=-2/3,-2/3", "--b", "0"]);
    assert_eq!(v["kind"], "theorem3");
    assert_eq!(v["law"]["exponent"], 3);
    assert!((v["law"]["coefficient"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(v["scale"], "beta_2");

    let v = classify_json(&["--d", "1", "--k", "3", "--a=-4/5,0,1", "--b", "0"]);
    assert_eq!(v["kind"], "theorem4");
    assert_eq!(v["l"], 2);
    assert_eq!(v["scale_exponent"], "-1/15");
}

#[test]
fn classify_edge_cases() {
    let o = run(&["classify", "--d", "1", "--k", "2", "--a", "1//2,1", "--b", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let v = classify_json(&["--d", "1", "--k", "2", "--a=0,-1", "--b", "0"]);
    assert_eq!(v["kind"], "unclassified");
    assert!(v["law"].is_null());
    let v = classify_json(&["--d", "1", "--k", "2", "--a=-1,0", "--b", "1"]);
    assert_eq!(v["kind"], "boundary");
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path
}

const SMALL: &str = r#"{
    "model": {"d": 1, "L": 100, "alpha": 1, "mu": [0.001, 0.01], "K": 2},
    "family": {"a": ["-3/2", "-1"], "b": "0"},
    "run": {"replicates": 20, "master_seed": 3},
    "targets": [{"kind": "sigma1_exact"}]
}"#;

#[test]
fn simulate_writes_rows_and_meta() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let o = run(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--replicates",
        "25",
        "--out",
        out.to_str().unwrap(),
        "--events",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("replicates.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("replicate_index,sigma_1,sigma_2,sigma2_1,D_1_2"));
    assert_eq!(lines.count(), 25);
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(out.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["replicates"], 25);
    assert_eq!(meta["config"]["run"]["replicates"], 25);
    assert_eq!(meta["master_seed"], 3);
    assert!(meta["generator"].as_str().unwrap().contains("ChaCha8"));
    let events = std::fs::read_to_string(out.join("events.csv")).unwrap();
    let accepted: u64 = csv
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            f[5].parse::<u64>().unwrap() + f[7].parse::<u64>().unwrap()
        })
        .sum();
    assert_eq!(events.lines().count() as u64 - 1, accepted);
}

#[test]
fn simulate_output_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let mut texts = Vec::new();
    for (name, workers) in [("a", "1"), ("b", "2")] {
        let out = dir.path().join(name);
        let o = run(&["simulate", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--workers", workers]);
        assert!(o.status.success(), "{}", stderr(&o));
        texts.push(std::fs::read(out.join("replicates.csv")).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let env_dir = dir.path().join("from-env");
    let o = bin()
        .args(["simulate", "--config", config.to_str().unwrap()])
        .env("NESTED_GROWTH_OUTPUT_DIR", &env_dir)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(env_dir.join("replicates.csv").exists());
}

#[test]
fn bad_configs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = write_config(dir.path(), &SMALL.replace("\"mu\": [0.001, 0.01], ", ""));
    let o = run(&["simulate", "--config", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("mu"), "{}", stderr(&o));

    let unknown = write_config(dir.path(), &SMALL.replace("\"replicates\"", "\"replicate\""));
    let o = run(&["simulate", "--config", unknown.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("replicate") && err.contains("line"), "{err}");

    let o = run(&["simulate", "--config", dir.path().join("nope.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn guard_exhaustion_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let body = SMALL.replace(
        "\"master_seed\": 3",
        "\"master_seed\": 3, \"guards\": {\"max_events\": 1, \"max_time\": 1000000}",
    );
    let config = write_config(dir.path(), &body);
    let o = run(&["simulate", "--config", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("generated"));
}

#[test]
fn validate_passes_exact_law() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &SMALL.replace("\"replicates\": 20", "\"replicates\": 400"));
    let out = dir.path().join("v");
    let o = run(&["validate", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["targets"][0]["sample_size"], 400);
    let samples = std::fs::read_to_string(out.join("samples.csv")).unwrap();
    assert!(samples.lines().next().unwrap().ends_with("rescaled_sigma1_exact"));
    assert_eq!(samples.lines().count(), 401);
    assert!(out.join("meta.json").exists());
}

#[test]
fn validate_mismatched_law_exits_1() {
    // many-ball regime sample checked against Exp(1)
    let body = r#"{
        "model": {"d": 1, "L": 1000000, "alpha": 1, "mu": [0.0001, 0.0001], "K": 2},
        "family": {"a": ["-2/3", "-2/3"], "b": "0"},
        "law": {"kind": "exp1"},
        "run": {"replicates": 300, "master_seed": 5},
        "targets": [{"kind": "sigma_k_law"}]
    }"#;
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), body);
    let out = dir.path().join("v");
    let o = run(&["validate", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}{}", stdout(&o), stderr(&o));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report["targets"][0]["ks"].as_f64().unwrap() > 0.3);
    assert!(out.join("samples.csv").exists());
}

#[test]
fn validate_boundary_family_exits_2() {
    let body = r#"{
        "model": {"d": 1, "L": 100, "alpha": 1, "mu": [0.01, 0.1], "K": 2},
        "family": {"a": ["-1", "0"], "b": "1"},
        "run": {"replicates": 200, "master_seed": 5},
        "targets": [{"kind": "sigma_k_law"}]
    }"#;
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), body);
    let o = run(&["validate", "--config", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no limit law"), "{}", stderr(&o));
}

#[test]
fn validate_fast_follower_config_reports_consistently() {
    let body = r#"{
        "model": {"d": 1, "L": 10000, "alpha": 10000, "mu": [0.01, 100], "K": 2},
        "family": {"a": ["-1/2", "1/2"], "b": "1"},
        "run": {"replicates": 5000, "master_seed": 7},
        "targets": [{"kind": "sigma_k_law"}, {"kind": "distance_law", "j": 1, "k": 2}]
    }"#;
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), body);
    let out = dir.path().join("v");
    let o = run(&["validate", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["regime"]["kind"], "theorem2");
    let expected = if report["passed"] == true { 0 } else { 1 };
    assert_eq!(o.status.code(), Some(expected));
    assert_eq!(report["targets"][1]["passed"], true);
}

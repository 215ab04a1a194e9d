use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use holdout_core::harness::ExperimentConfig;
use serde_json::Value;
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn holdout(args: &[&str], config: &Path, out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_holdout"));
    cmd.args(args).arg("--config").arg(config).env_remove("HOLDOUT_SEED").env_remove("HOLDOUT_THREADS");
    if let Some(out) = out {
        cmd.arg("--out").arg(out);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &TempDir, name: &str, value: &Value) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, value.to_string()).unwrap();
    path
}

fn small_experiment(dir: &TempDir) -> PathBuf {
    let mut config: Value = serde_json::from_str(&std::fs::read_to_string(fixture("acceptance.json")).unwrap()).unwrap();
    config["replications"] = Value::from(100);
    write_config(dir, "small.json", &config)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(bytes: &[u8]) -> (csv::StringRecord, Vec<csv::StringRecord>) {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers().unwrap().clone();
    (header, r.records().map(Result::unwrap).collect())
}

#[test]
fn manifest_lists_outputs_and_echoes_the_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_experiment(&dir);
    let out = dir.path().join("out");
    let o = holdout(&["verify", "--seed", "99"], &config, Some(&out));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["command"], "verify");
    let outputs: Vec<PathBuf> = serde_json::from_value(manifest["outputs"].clone()).unwrap();
    assert_eq!(outputs, vec![out.join("report.json"), out.join("tails.csv")]);
    for p in &outputs {
        assert!(p.exists());
    }
    let echoed: ExperimentConfig = serde_json::from_value(manifest["config"].clone()).unwrap();
    assert_eq!(echoed.seed, 99);
    let again: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&echoed).unwrap()).unwrap();
    assert_eq!(echoed, again);
}

#[test]
fn seed_can_come_from_flag_or_environment() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_experiment(&dir);
    let by_flag = holdout(&["simulate", "--seed", "5"], &config, None);
    let by_env = Command::new(env!("CARGO_BIN_EXE_holdout"))
        .args(["simulate", "--config"])
        .arg(&config)
        .env("HOLDOUT_SEED", "5")
        .output()
        .unwrap();
    let default = holdout(&["simulate"], &config, None);
    assert_eq!(by_flag.status.code(), Some(0));
    assert_eq!(by_flag.stdout, by_env.stdout);
    assert_ne!(by_flag.stdout, default.stdout);
}

#[test]
fn malformed_kernel_row_is_named() {
    let o = holdout(&["diagnose"], &fixture("malformed_row.json"), None);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("row 1"), "{err}");
}

#[test]
fn missing_config_is_a_config_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_holdout")).arg("diagnose").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn single_bound_row_matches_reference() {
    let o = holdout(&["bounds"], &fixture("bounds_single.json"), None);
    assert_eq!(o.status.code(), Some(0));
    let (header, rows) = csv_rows(&o.stdout);
    assert_eq!(rows.len(), 1);
    let raw = header.iter().position(|h| h == "raw").unwrap();
    let value: f64 = rows[0][raw].parse().unwrap();
    assert!((value - 0.456_311_267_811_445_70).abs() < 1e-12, "{value}");
}

#[test]
fn zero_epsilon_rows_are_vacuous_and_grids_expand() {
    let dir = tempfile::tempdir().unwrap();
    let epsilon: Vec<f64> = (0..100).map(|i| i as f64 * 0.01).collect();
    let config = serde_json::json!({
        "bounds": ["hoeffding"],
        "query": {"m": 1000, "t_mix": 2.0},
        "grid": {"epsilon": epsilon},
    });
    let path = write_config(&dir, "grid.json", &config);
    let o = holdout(&["bounds"], &path, None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = csv_rows(&o.stdout);
    assert_eq!(rows.len(), 100);
    let eps = header.iter().position(|h| h == "epsilon").unwrap();
    let vacuous = header.iter().position(|h| h == "vacuous").unwrap();
    let zero: Vec<_> = rows.iter().filter(|r| r[eps].parse::<f64>().unwrap() == 0.0).collect();
    assert_eq!(zero.len(), 1);
    assert!(zero.iter().all(|r| &r[vacuous] == "true"));
}

#[test]
fn bounds_on_a_chain_take_its_diagnostics() {
    let o = holdout(&["bounds"], &fixture("bounds_two_state.json"), None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = csv_rows(&o.stdout);
    assert_eq!(rows.len(), 44);
    let t_mix = header.iter().position(|h| h == "t_mix").unwrap();
    assert!(rows.iter().all(|r| r[t_mix].parse::<f64>().unwrap() == 4.0));
}

#[test]
fn diagnose_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = holdout(&["diagnose"], &fixture("order2.json"), Some(&out));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let d = read_json(&out.join("diagnostics.json"));
    let q: Vec<f64> = serde_json::from_value(d["stationary"].clone()).unwrap();
    assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(d["t_mix"].as_u64().unwrap() >= 1);
    assert!(out.join("manifest.json").exists());
}

#[test]
fn noise_reports_radii_and_condition() {
    let o = holdout(&["noise"], &fixture("noise_two_state.json"), None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let n: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(n["pass"], true);
    let rows = n["tau_star"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for r in rows {
        let (a, b) = (r["tau_star"].as_f64().unwrap(), r["tau_star_bisection"].as_f64().unwrap());
        assert!((a - b).abs() <= 1e-10 * a.max(1e-300), "{a} vs {b}");
    }
}

#[test]
fn simulate_writes_one_row_per_replication() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_experiment(&dir);
    let out = dir.path().join("out");
    let o = holdout(&["simulate"], &config, Some(&out));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = csv_rows(&std::fs::read(out.join("replications.csv")).unwrap());
    assert_eq!(rows.len(), 100);
    assert_eq!(&header[0], "index");
    assert!(out.join("learning.json").exists());
}

#[test]
fn zero_threads_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_experiment(&dir);
    let o = holdout(&["simulate", "--threads", "0"], &config, None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_fields_exit_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(&dir, "bad.json", &serde_json::json!({"bounds": ["hoeffding"], "query": {}, "extra": 1}));
    let o = holdout(&["bounds"], &path, None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.json"));
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const TINY: &str = r#"{
  "seed": 3,
  "synth": { "n_wells": 120, "n_fields": 4 },
  "cluster": { "min_pts": 10, "tsne": { "perplexity": 10.0, "learning_rate": 200.0, "iters": 100, "seed": 0 } },
  "train": {
    "trainer": { "model": "gbdt", "n_rounds": 60, "depth": 3, "learning_rate": 0.2, "max_bins": 31 },
    "k": 3,
    "grid": { "depth": [2, 3], "l2_leaf": [1.0] }
  },
  "analyze": { "rfe_step": 20, "bootstrap": { "iters": 8 } }
}"#;

fn fracflow(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracflow"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(o: &Output) {
    assert!(o.status.success(), "exit {:?}: {}", o.status.code(), stderr(o));
}

fn tiny_dir() -> tempfile::TempDir {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("tiny.json"), TINY).unwrap();
    d
}

fn read_json(p: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

/// Synth and ingest into `dir`; returns the ingested table path.
fn ingested(dir: &Path) -> &'static str {
    ok(&fracflow(dir, &["--config", "tiny.json", "synth", "--out", "s"]));
    ok(&fracflow(
        dir,
        &["--config", "tiny.json", "ingest", "--sources", "s/sources", "--dicts", "s/dictionaries", "--out", "i"],
    ));
    "i/table.csv"
}

#[test]
fn invalid_rate_is_a_usage_error_naming_the_field() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("bad.json"), r#"{"synth": {"typo_rate": 1.5}}"#).unwrap();
    let o = fracflow(d.path(), &["--config", "bad.json", "synth", "--out", "s"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("typo_rate"), "{}", stderr(&o));
}

#[test]
fn unreadable_config_and_zero_jobs_exit_2() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(fracflow(d.path(), &["--config", "nope.json", "synth", "--out", "s"]).status.code(), Some(2));
    assert_eq!(fracflow(d.path(), &["--jobs", "0", "synth", "--out", "s"]).status.code(), Some(2));
    assert_eq!(fracflow(d.path(), &["frobnicate"]).status.code(), Some(2));
}

#[test]
fn missing_frac_list_exits_2() {
    let d = tiny_dir();
    std::fs::create_dir(d.path().join("empty")).unwrap();
    let o = fracflow(d.path(), &["--config", "tiny.json", "ingest", "--sources", "empty", "--out", "i"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("frac_list"), "{}", stderr(&o));
}

#[test]
fn empty_dictionaries_still_ingest() {
    let d = tiny_dir();
    ok(&fracflow(d.path(), &["--config", "tiny.json", "synth", "--out", "s"]));
    std::fs::create_dir(d.path().join("nodicts")).unwrap();
    ok(&fracflow(
        d.path(),
        &["--config", "tiny.json", "ingest", "--sources", "s/sources", "--dicts", "nodicts", "--out", "i"],
    ));
    let log = read_json(d.path().join("i/merge_log.json"));
    assert_eq!(log["schema_version"], 1);
    assert!(d.path().join("i/table.csv").is_file());
}

#[test]
fn stage_dependency_errors_exit_2() {
    let d = tiny_dir();
    let table = ingested(d.path());

    let o = fracflow(d.path(), &["--config", "tiny.json", "impute", "--input", table, "--method", "cluster_mean", "--out", "m"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    let o = fracflow(d.path(), &["--config", "tiny.json", "impute", "--input", table, "--method", "mean", "--rank", "3", "--out", "m"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    ok(&fracflow(d.path(), &["--config", "tiny.json", "impute", "--input", table, "--method", "mean", "--out", "m"]));
    std::fs::write(d.path().join("other.json"), r#"{"train": {"target": "gas_cum_3m"}}"#).unwrap();
    let o = fracflow(d.path(), &["--config", "other.json", "train", "--input", "m/completed.csv", "--out", "t"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    ok(&fracflow(d.path(), &["--config", "tiny.json", "train", "--input", "m/completed.csv", "--out", "t"]));
    // the raw synthetic table has different feature columns than the model
    let o = fracflow(d.path(), &["--config", "tiny.json", "analyze", "--model", "t/model.json", "--input", "s/synth.csv", "--out", "a"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn cluster_mean_runs_with_labels() {
    let d = tiny_dir();
    let table = ingested(d.path());
    ok(&fracflow(d.path(), &["--config", "tiny.json", "impute", "--input", table, "--method", "mean", "--out", "m"]));
    ok(&fracflow(d.path(), &["--config", "tiny.json", "cluster", "--input", "m/completed.csv", "--out", "c"]));
    ok(&fracflow(
        d.path(),
        &["--config", "tiny.json", "impute", "--input", table, "--method", "cluster_mean", "--labels", "c/clusters.csv", "--out", "cm"],
    ));
    let header = std::fs::read_to_string(d.path().join("c/clusters.csv")).unwrap();
    assert!(header.starts_with("field_id,well_id,layer_id,op_date,tsne_x,tsne_y,cluster,anomaly_score"));
}

fn digests(manifest: &Value) -> Vec<(String, String)> {
    manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| (f["path"].as_str().unwrap().to_string(), f["sha256"].as_str().unwrap().to_string()))
        .collect()
}

#[test]
fn report_is_reproducible_under_seed() {
    let d = tiny_dir();
    ok(&fracflow(d.path(), &["--config", "tiny.json", "report", "--out", "a"]));
    ok(&fracflow(d.path(), &["--config", "tiny.json", "--jobs", "1", "report", "--out", "b"]));
    let a = read_json(d.path().join("a/manifest.json"));
    let b = read_json(d.path().join("b/manifest.json"));
    assert!(!digests(&a).is_empty());
    assert_eq!(digests(&a), digests(&b));
    assert_eq!(a["seeds"], b["seeds"]);
    let summary = read_json(d.path().join("a/summary.json"));
    assert_eq!(summary["seed"], 3);

    ok(&fracflow(d.path(), &["--config", "tiny.json", "--seed", "4", "report", "--out", "c"]));
    let c = read_json(d.path().join("c/manifest.json"));
    assert_ne!(digests(&a), digests(&c));
}

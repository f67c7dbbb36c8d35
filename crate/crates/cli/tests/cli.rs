//! Black-box tests of the `rankwin` binary: exit codes, artifact layout,
//! manifest checksums, and the simulate → features → train → eval →
//! analyze chain.

use std::path::Path;
use std::process::{Command, Output};

use rankwin::simulator::ScenarioConfig;

fn rankwin(out_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rankwin"))
        .arg("--out-dir")
        .arg(out_dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

/// A scenario small enough for fast black-box runs.
fn small_config_toml() -> String {
    let mut config = ScenarioConfig::standard(1);
    config.queries_per_vertical = 2;
    config.products_per_query = 6;
    config.horizon_days = 60;
    toml::to_string(&config).expect("config serializes")
}

fn manifest(out_dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(out_dir.join("manifest.json")).expect("manifest exists");
    serde_json::from_str(&text).expect("manifest is JSON")
}

#[test]
fn pipeline_chain_runs_clean() {
    let tmp = tempfile::tempdir().unwrap();
    let config_path = tmp.path().join("scenario.toml");
    std::fs::write(&config_path, small_config_toml()).unwrap();

    let sim_dir = tmp.path().join("sim");
    let out = rankwin(
        &sim_dir,
        &["--seed", "5", "simulate", "--config", config_path.to_str().unwrap()],
    );
    assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for file in ["events.jsonl", "world.json", "labels.csv", "manifest.json"] {
        assert!(sim_dir.join(file).exists(), "missing {file}");
    }

    let feat_dir = tmp.path().join("features");
    let out = rankwin(
        &feat_dir,
        &[
            "features",
            "--log",
            sim_dir.join("events.jsonl").to_str().unwrap(),
            "--labels",
            sim_dir.join("labels.csv").to_str().unwrap(),
            "--variant",
            "ModelB",
            "--ref-date",
            "2023-02-12",
        ],
    );
    assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let train_dir = tmp.path().join("train");
    let out = rankwin(
        &train_dir,
        &[
            "--seed",
            "5",
            "train",
            "--data",
            feat_dir.join("dataset.svmlight").to_str().unwrap(),
            "--sidecar",
            feat_dir.join("features.csv").to_str().unwrap(),
            "--trees",
            "20",
            "--depth",
            "3",
            "--min-leaf",
            "2",
        ],
    );
    assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let model_path = train_dir.join("model.json");
    assert!(model_path.exists());

    let eval_dir = tmp.path().join("eval");
    let out = rankwin(
        &eval_dir,
        &[
            "eval",
            "--data",
            feat_dir.join("dataset.svmlight").to_str().unwrap(),
            "--sidecar",
            feat_dir.join("features.csv").to_str().unwrap(),
            "--model",
            model_path.to_str().unwrap(),
        ],
    );
    assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("NDCG"), "eval output: {stdout}");

    let analyze_dir = tmp.path().join("analyze");
    let out = rankwin(
        &analyze_dir,
        &["analyze", "--model", model_path.to_str().unwrap()],
    );
    assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(analyze_dir.join("adjacency.csv").exists());
}

#[test]
fn missing_input_is_usage_error_without_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("out");
    let out = rankwin(
        &out_dir,
        &[
            "features",
            "--log",
            "/nonexistent/events.jsonl",
            "--labels",
            "/nonexistent/labels.csv",
            "--variant",
            "ModelB",
            "--ref-date",
            "2023-02-12",
        ],
    );
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot read"));
    // A failed command must not leave partial outputs behind.
    assert!(!out_dir.exists() || std::fs::read_dir(&out_dir).unwrap().next().is_none());
}

#[test]
fn unknown_variant_is_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = rankwin(
        tmp.path(),
        &[
            "features",
            "--log",
            "x.jsonl",
            "--labels",
            "y.csv",
            "--variant",
            "ModelZ",
            "--ref-date",
            "2023-02-12",
        ],
    );
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown variant"));
}

#[test]
fn corrupt_log_line_is_runtime_error_under_strict() {
    let tmp = tempfile::tempdir().unwrap();
    let log = tmp.path().join("events.jsonl");
    let labels = tmp.path().join("labels.csv");
    std::fs::write(&log, "{\"not\": \"an event\"}\n").unwrap();
    std::fs::write(&labels, "query_id,vertical\nq0,Food\n").unwrap();
    let out = rankwin(
        &tmp.path().join("out"),
        &[
            "features",
            "--log",
            log.to_str().unwrap(),
            "--labels",
            labels.to_str().unwrap(),
            "--variant",
            "Baseline",
            "--ref-date",
            "2023-02-12",
            "--strict",
        ],
    );
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn same_seed_reproduces_checksums_and_seeds_differ() {
    let tmp = tempfile::tempdir().unwrap();
    let config_path = tmp.path().join("scenario.toml");
    std::fs::write(&config_path, small_config_toml()).unwrap();
    let run = |name: &str, seed: &str| {
        let dir = tmp.path().join(name);
        let out = rankwin(
            &dir,
            &["--seed", seed, "simulate", "--config", config_path.to_str().unwrap()],
        );
        assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        manifest(&dir)["outputs"].clone()
    };
    let first = run("a", "11");
    let second = run("b", "11");
    let other = run("c", "12");
    assert_eq!(first, second, "same seed must reproduce artifact checksums");
    assert_ne!(first, other, "different seeds should differ");
}

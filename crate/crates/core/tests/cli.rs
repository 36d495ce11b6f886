use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use iiot_trust::cli::{sha256_hex, RunManifest};
use iiot_trust::report::{
    ALERTS_HEADER, DIAGNOSTICS_HEADER, QOS_TRACE_HEADER, RECORDS_HEADER, SUMMARY_HEADER,
};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_iiot-trust"));
    c.env_remove("IIOT_TRUST_OUT").env("RUST_LOG", "warn");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn assets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets")
}

fn header(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

fn small_config(dir: &Path, extra: &str) -> PathBuf {
    let p = dir.join("cfg.toml");
    fs::write(
        &p,
        format!("[experiment]\nseeds = 3\nn_nodes = 50\n{extra}"),
    )
    .unwrap();
    p
}

#[test]
fn fig_a_writes_all_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "[experiment.fig_a]\nseeds = 3\n");
    let out = dir.path().join("out");
    let o = run(&[
        "experiment",
        "fig-a",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("Poor") && stdout.contains("TCA"));
    assert_eq!(header(&out.join("records.csv")), RECORDS_HEADER.join(","));
    assert_eq!(header(&out.join("summary.csv")), SUMMARY_HEADER.join(","));
    assert_eq!(
        header(&out.join("diagnostics.csv")),
        DIAGNOSTICS_HEADER.join(",")
    );
    assert_eq!(header(&out.join("alerts.csv")), ALERTS_HEADER.join(","));
    // 3 profiles x 2 modes x 3 seeds x 50 nodes
    assert_eq!(
        fs::read_to_string(out.join("records.csv"))
            .unwrap()
            .lines()
            .count(),
        1 + 900
    );
    assert_eq!(
        fs::read_to_string(out.join("summary.csv"))
            .unwrap()
            .lines()
            .count(),
        1 + 6
    );

    let manifest: RunManifest =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.config_sha256, sha256_hex(&fs::read(&cfg).unwrap()));
    assert_eq!(manifest.seeds, vec![0, 1, 2]);
    assert!(manifest.finished_unix_ms.is_some());
}

#[test]
fn simulate_writes_trace_and_honours_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let o = run(&[
        "simulate",
        "--seeds",
        "2",
        "--seed",
        "5",
        "--mode",
        "baseline",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        header(&out.join("qos_trace.csv")),
        QOS_TRACE_HEADER.join(",")
    );
    let records = fs::read_to_string(out.join("records.csv")).unwrap();
    let seeds: Vec<&str> = records
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert!(seeds.iter().all(|s| *s == "5" || *s == "6"));
    assert!(records.lines().skip(1).all(|l| l.contains(",Baseline,")));
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("env-out");
    let o = bin()
        .args(["simulate", "--seeds", "1"])
        .env("IIOT_TRUST_OUT", &out)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(out.join("manifest.json").exists());
}

#[test]
fn validation_error_names_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[experiment]\np_m = 1.5\n").unwrap();
    let o = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("p_m") && err.contains("[0, 1)"), "{err}");
}

#[test]
fn unknown_key_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("typo.toml");
    fs::write(&cfg, "[boost]\nlambdaa = 0.3\n").unwrap();
    let o = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lambdaa"));
}

#[test]
fn unknown_subcommand_prints_usage() {
    let o = run(&["frobnicate"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn missing_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("empty");
    let o = run(&["train", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("dataset.csv"));

    let o = run(&[
        "simulate",
        "--config",
        "/nonexistent/cfg.toml",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/cfg.toml"));
}

#[test]
fn missing_model_falls_back_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "simulate",
        "--seeds",
        "1",
        "--model",
        "/nonexistent/model.json",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("fallback"));
}

#[test]
fn evaluate_shipped_example() {
    let dir = tempfile::tempdir().unwrap();
    let a = assets();
    let o = run(&[
        "evaluate",
        "--model",
        a.join("example_model.json").to_str().unwrap(),
        "--data",
        a.join("example_test.csv").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = String::from_utf8_lossy(&o.stdout);
    assert!(s.contains("accuracy  0.7750"), "{s}");
    assert!(s.contains("macro_f1  0.7020"), "{s}");
}

#[test]
fn dataset_train_evaluate_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "[dataset]\nn_samples = 600\n[forest]\nn_trees = 5\n").unwrap();
    let c = cfg.to_str().unwrap();
    let out = dir.path().to_str().unwrap();
    assert!(run(&["dataset", "--config", c, "--out", out])
        .status
        .success());
    assert!(header(&dir.path().join("dataset.csv")).ends_with(",class_id"));
    let o = run(&["train", "--config", c, "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["evaluate", "--config", c, "--out", out]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("macro_f1"));
    assert!(dir.path().join("eval.csv").exists());
}

#[test]
fn calibration_failure_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(
        &cfg,
        "[calibration]\ngood_band = [20.0, 21.0]\nq_floors = [0.25]\npoor_centres = [0.3]\nruns = 5\n",
    )
    .unwrap();
    let o = run(&[
        "calibrate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nearest"));
    assert!(dir.path().join("calibration.csv").exists());
}

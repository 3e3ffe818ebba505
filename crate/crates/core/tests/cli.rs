//! Drives the `qnn-extract` binary end to end on a tiny configuration.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qnn-extract"))
}

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// One task, one seed, a handful of epochs everywhere.
fn tiny_config(dir: &Path) -> PathBuf {
    let cfg = serde_json::json!({
        "data_dir": data_dir(),
        "tasks": ["m01"],
        "seeds": [3],
        "rr_grid": [0.5, 1.0],
        "rounds_grid": [2, 3],
        "victim": {"epochs": 2},
        "baseline": {"epochs": 2},
        "classifier": {"epochs": 5, "batch_size": 0, "lr": 0.05},
        "committee": 3,
        "pretrain": {"source_images": 16, "barlow": {"epochs": 2, "batch_size": 8}},
    });
    let path = dir.join("tiny.json");
    std::fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

fn run(args: &[&str], cfg: &Path, out: &Path) -> std::process::Output {
    bin()
        .args(args)
        .arg("--config")
        .arg(cfg)
        .arg("--out-dir")
        .arg(out)
        .args(["--desk-scale", "--jobs", "2"])
        .output()
        .unwrap()
}

#[test]
fn sweep_then_report_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path());
    let out = tmp.path().join("out");

    let sweep = run(&["sweep-rr"], &cfg, &out);
    assert!(sweep.status.success(), "{}", String::from_utf8_lossy(&sweep.stderr));
    for f in [
        "results.csv",
        "rr_matrix.csv",
        "accuracy_vs_hour.csv",
        "loss_curves.csv",
        "variance_points.csv",
        "variance_histogram.csv",
        "config.json",
        "m01/seed-3/ledger.csv",
        "m01/seed-3/victim.json",
        "m01/seed-3/cleaning_rr0.5.csv",
        "encoders/m23-seed-3/qenc.json",
    ] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let results = std::fs::read_to_string(out.join("results.csv")).unwrap();
    // base, qleak and one copyqnn row per RR
    assert_eq!(results.lines().count(), 1 + 2 + 2);

    let report = run(&["report"], &cfg, &out);
    assert!(report.status.success());
    let table = String::from_utf8_lossy(&report.stdout);
    assert!(table.contains("m01"), "{table}");
}

#[test]
fn single_stage_subcommands_succeed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path());
    for (cmd, artifact) in [
        ("train-victim", "m01/seed-3/victim_log.csv"),
        ("query", "m01/seed-3/ledger.csv"),
        ("clean", "m01/seed-3/cleaning_rr1.0.csv"),
        ("pretrain", "encoders/m23-seed-3/pretrain_loss.csv"),
        ("fluctuation", "accuracy_vs_hour.csv"),
    ] {
        let out = tmp.path().join(cmd);
        let o = run(&[cmd], &cfg, &out);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(out.join(artifact).exists(), "{cmd} did not write {artifact}");
    }
}

#[test]
fn seed_flag_overrides_config_seeds() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tiny_config(tmp.path());
    let out = tmp.path().join("out");
    let o = bin()
        .args(["query", "--seed", "11", "--desk-scale", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(out.join("m01/seed-11/ledger.csv").exists());
    assert!(!out.join("m01/seed-3").exists());
}

#[test]
fn failures_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();

    // report without results
    let cfg = tiny_config(tmp.path());
    let o = run(&["report"], &cfg, &tmp.path().join("empty"));
    assert!(!o.status.success());

    // invalid remember ratio
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, r#"{"rr_grid": [0.0]}"#).unwrap();
    let o = run(&["clean"], &bad, &tmp.path().join("bad"));
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("remember ratio"));

    // missing dataset
    let nodata = tmp.path().join("nodata.json");
    std::fs::write(&nodata, r#"{"data_dir": "/nonexistent", "tasks": ["m01"], "seeds": [0]}"#).unwrap();
    let o = run(&["train-victim"], &nodata, &tmp.path().join("nodata"));
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("load-data"));

    // zero workers
    let o = bin().args(["query", "--jobs", "0"]).arg("--config").arg(&cfg).output().unwrap();
    assert!(!o.status.success());
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn tugpeace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tugpeace"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL_RUN: &str = r#"{
    "scenario": {"kind": "power_control", "n_players": 4, "filter": "feasible"},
    "schedule": {"scale": 1.0, "offset": 10.0, "exponent": 0.9},
    "noise": {"kind": "truncated_gaussian", "sigma": 0.1, "bound": 0.4},
    "targets": {"lambda": [0.8, 1.2, 1.0, 0.9]},
    "run": {"horizon": 3000, "realizations": 6, "record_stride": 50}
}"#;

#[test]
fn run_output_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_RUN);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let out = tugpeace(&["run", "--config", &config, "--out", a.to_str().unwrap(), "--threads", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = tugpeace(&["run", "--config", &config, "--out", b.to_str().unwrap(), "--threads", "3"]);
    assert!(out.status.success());
    for name in ["traces.csv", "aggregates.csv", "means.csv", "realizations.csv"] {
        let left = fs::read(a.join(name)).unwrap();
        assert!(!left.is_empty());
        assert_eq!(left, fs::read(b.join(name)).unwrap(), "{name} differs");
    }
    let header = fs::read_to_string(a.join("aggregates.csv")).unwrap();
    assert!(header.starts_with("t,metric,median,q1,q3\n"));
}

#[test]
fn seed_flag_changes_the_output() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_RUN);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(tugpeace(&["run", "--config", &config, "--out", a.to_str().unwrap(), "--realizations", "2"]).status.success());
    assert!(tugpeace(&["run", "--config", &config, "--out", b.to_str().unwrap(), "--realizations", "2", "--seed", "9"])
        .status
        .success());
    assert_ne!(fs::read(a.join("traces.csv")).unwrap(), fs::read(b.join("traces.csv")).unwrap());
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL_RUN);
    let out = tugpeace(&["run", "--config", &config, "--realizations", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("run.realizations"));

    let bad = write_config(dir.path(), r#"{"scenario": {"kind": "power_control", "n_players": 2, "typo": 1}}"#);
    assert_eq!(tugpeace(&["run", "--config", &bad]).status.code(), Some(1));
    assert_eq!(tugpeace(&["run", "--config", "/no/such/file.json"]).status.code(), Some(1));
    assert_eq!(tugpeace(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn runtime_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"scenario": {"kind": "power_control", "n_players": 3, "filter": "feasible", "max_draws": 2},
            "targets": {"lambda": 100.0}, "run": {"horizon": 10, "realizations": 1}}"#,
    );
    let out_dir = dir.path().join("out");
    let out = tugpeace(&["run", "--config", &config, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failed_cross_check_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"scenario": {"kind": "power_control",
                         "instance": {"kind": "power_control", "gains": [[1.0, 0.9], [0.9, 1.0]], "noise_floor": 0.1}},
            "algorithm": {"kind": "fdtop"},
            "targets": {"pinned": [2.0, 2.0]},
            "run": {"horizon": 5000, "realizations": 2},
            "check": {"reward_tolerance": 0.05}}"#,
    );
    let out_dir = dir.path().join("out");
    let out = tugpeace(&["check", "--config", &config, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out_dir.join("check.json")).unwrap()).unwrap();
    assert_eq!(report["boundary_pinned"], 2);
}

#[test]
fn oracle_and_validate_report_json() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        r#"{"scenario": {"kind": "power_control",
                         "instance": {"kind": "power_control", "gains": [[1.0, 0.2], [0.2, 1.0]], "noise_floor": 0.1}},
            "targets": {"pinned": [0.5, 0.5]}}"#,
    );
    let out_dir = dir.path().join("out");
    let out = tugpeace(&["oracle", "--config", &config, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let x = report["linear"]["profile"][0].as_f64().unwrap();
    assert!((x - 0.05 / 0.9).abs() < 1e-12);
    assert_eq!(report["ode"]["status"], "converged");

    let out = tugpeace(&["validate", "--config", &config, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(out_dir.join("validate.json").exists());
}

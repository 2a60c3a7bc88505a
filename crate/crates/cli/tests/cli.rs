use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qfl(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qfl"));
    cmd.args(args);
    match env_out {
        Some(dir) => cmd.env("QFL_OUTPUT_DIR", dir),
        None => cmd.env_remove("QFL_OUTPUT_DIR"),
    };
    cmd.output().expect("qfl runs")
}

fn summary(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is the JSON summary")
}

#[test]
fn lists_every_builtin() {
    let out = qfl(&["list-scenarios"], None);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "paper-5.2-qpe",
        "paper-5.2-gradient",
        "paper-appendix-b",
        "paper-appendix-c",
        "attack-demo",
        "synthetic-train",
    ] {
        assert!(text.contains(name), "{name} missing");
    }
}

#[test]
fn worked_aggregation_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = qfl(&["scenario", "paper-appendix-c", "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&out);
    assert_eq!(s["federated_gradient"], serde_json::json!([3.5, 6.06]));
    for f in ["config.json", "report.json", "rounds.csv", "transcript.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn env_var_sets_output_root() {
    let dir = tempfile::tempdir().unwrap();
    let out = qfl(&["scenario", "paper-appendix-b"], Some(dir.path()));
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("paper-appendix-b").join("angle_tree.csv").exists());
}

#[test]
fn qpe_histogram_modal_outcome() {
    let dir = tempfile::tempdir().unwrap();
    let out = qfl(&["scenario", "paper-5.2-qpe", "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(summary(&out)["folded_outcome"], 1);
    let csv = fs::read_to_string(dir.path().join("theta_histogram.csv")).unwrap();
    assert_eq!(csv.lines().count(), 17);
}

#[test]
fn attack_demo_exits_with_abort_status() {
    let dir = tempfile::tempdir().unwrap();
    let out = qfl(&["scenario", "attack-demo", "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(3));
    let s = summary(&out);
    assert!(s["abort"]["error_rate"].as_f64().unwrap() > 0.0);
}

#[test]
fn training_that_runs_out_of_epochs_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("train.json");
    fs::write(
        &cfg,
        r#"{
  "name": "short",
  "task": {"training": {
    "data": {"synthetic": {"sizes": [4, 6], "w_star": [1.0, -1.0], "seed": 2}},
    "train": {"alpha": 0.1, "epsilon": 1e-12, "max_epochs": 3, "aggregation": "plain_sum"}
  }}
}"#,
    )
    .unwrap();
    let out = qfl(&["run", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(2));
    let history = fs::read_to_string(dir.path().join("o").join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 4);
}

#[test]
fn run_matches_builtin_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let shown = qfl(&["show-config", "paper-5.2-gradient", "--seed", "9"], None);
    assert!(shown.status.success());
    let cfg = dir.path().join("g.json");
    fs::write(&cfg, &shown.stdout).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let ra = qfl(&["run", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()], None);
    let rb = qfl(&["scenario", "paper-5.2-gradient", "--seed", "9", "--out", b.to_str().unwrap()], None);
    assert_eq!(ra.status.code(), Some(0));
    assert_eq!(ra.stdout, rb.stdout);
    for f in ["report.json", "transcript.json", "gradients.csv", "estimates.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn malformed_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"name": "bad", "task": {"parameter_state": {"w": [1.0, null]}}}"#).unwrap();
    let out = qfl(&["run", cfg.to_str().unwrap()], Some(dir.path()));
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("task.parameter_state.w[1]"), "{err}");
}

#[test]
fn missing_data_file_is_diagnosed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("csv.json");
    fs::write(
        &cfg,
        r#"{"name": "csv", "task": {"training": {"data": {"csv": {"paths": ["absent.csv"]}}}}}"#,
    )
    .unwrap();
    let out = qfl(&["run", cfg.to_str().unwrap()], Some(dir.path()));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("absent.csv"));
}

#[test]
fn csv_data_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c0.csv"), "x0,x1,y\n1.0,0.0,2.0\n0.0,1.0,-1.0\n").unwrap();
    fs::write(dir.path().join("c1.csv"), "x0,x1,y\n1.0,1.0,1.0\n").unwrap();
    let cfg = dir.path().join("csv.json");
    fs::write(
        &cfg,
        r#"{"name": "csv", "task": {"training": {
            "data": {"csv": {"paths": ["c0.csv", "c1.csv"]}},
            "train": {"alpha": 0.5, "epsilon": 1e-10, "max_epochs": 500}
        }}}"#,
    )
    .unwrap();
    let out = qfl(&["run", cfg.to_str().unwrap()], Some(dir.path()));
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let w = &summary(&out)["w"];
    assert!((w[0].as_f64().unwrap() - 2.0).abs() < 1e-3 && (w[1].as_f64().unwrap() + 1.0).abs() < 1e-3, "{w}");
}

#[test]
fn unknown_scenario_fails() {
    let out = qfl(&["scenario", "nope"], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("unknown scenario"));
}

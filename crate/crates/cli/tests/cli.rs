//! End-to-end tests of the `qbell` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn qbell(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qbell")).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON report")
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qbell-cli-test-{}-{tag}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn learning_example_meets_its_success_bound() {
    let report = stdout_json(&qbell(&["learn", "--d", "3", "--n", "2", "--trials", "200", "--seed", "7"]));
    let rate = report["aggregate"]["success_rate"].as_f64().unwrap();
    let bound = 1.0 - 1.0 / 9.0;
    let margin = 3.0 * (bound * (1.0 - bound) / 200.0_f64).sqrt();
    assert!(rate >= bound - margin, "success rate {rate}");
    assert_eq!(report["aggregate"]["trials"], 200);
    assert_eq!(report["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn invalid_parameters_exit_with_code_2() {
    let out = qbell(&["tolerant", "--d", "2", "--eps1", "0.3", "--eps2", "0.01"]);
    assert_eq!(out.status.code(), Some(2));
    let out = qbell(&["size-test", "--d", "2", "--n", "2", "--t", "1", "--eps", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = qbell(&["learn", "--d", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn oversized_instances_exit_with_code_3() {
    let out = qbell(&["learn", "--d", "7", "--n", "12"]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn difference_distribution_is_normalised() {
    let table = stdout_json(&qbell(&["oracle", "bdist", "--d", "3", "--input", "haar", "--seed", "3"]));
    let total: f64 = table["values"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12, "total {total}");
    assert_eq!(table["values"].as_array().unwrap().len(), 9usize.pow(4));
}

#[test]
fn state_files_round_trip_through_oracle_and_runs() {
    let dir = scratch("state");
    let path = dir.join("psi.json");
    let out = qbell(&[
        "oracle",
        "state",
        "--d",
        "3",
        "--n",
        "1",
        "--input",
        "haar",
        "--seed",
        "5",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let first = std::fs::read_to_string(&path).unwrap();
    let again = qbell(&["oracle", "state", "--d", "3", "--input", "file", "--state", path.to_str().unwrap()]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), first);
    let run = qbell(&["stab-test", "--d", "3", "--input", "file", "--state", path.to_str().unwrap(), "--trials", "3"]);
    assert!(run.status.success());
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn group_files_drive_stabiliser_inputs() {
    let dir = scratch("group");
    let path = dir.join("g.json");
    std::fs::write(&path, r#"{"d": 2, "n": 1, "generators": [{"v": [1], "w": [0], "s": 0}]}"#).unwrap();
    let report = stdout_json(&qbell(&[
        "learn",
        "--d",
        "2",
        "--input",
        "group",
        "--group",
        path.to_str().unwrap(),
        "--trials",
        "100",
    ]));
    let rate = report["aggregate"]["success_rate"].as_f64().unwrap();
    assert!(rate >= 0.5 - 3.0 * (0.25f64 / 100.0).sqrt(), "success rate {rate}");
    assert_eq!(report["config"]["group_file"], path.to_str().unwrap());
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn malformed_state_file_names_the_field() {
    let dir = scratch("bad");
    let path = dir.join("bad.json");
    std::fs::write(&path, r#"{"d": 2, "n": 1, "amplitude": [[1.0, 0.0], [0.0, 0.0]]}"#).unwrap();
    let out = qbell(&["learn", "--d", "2", "--input", "file", "--state", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("amplitudes"), "stderr: {stderr}");
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn seeded_reports_are_identical() {
    let args = ["doped-test", "--d", "2", "--n", "3", "--t", "1", "--trials", "20", "--seed", "11", "--transcript"];
    let a = qbell(&args);
    let b = qbell(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c =
        qbell(&["doped-test", "--d", "2", "--n", "3", "--t", "1", "--trials", "20", "--seed", "12", "--transcript"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn single_range_panel_writes_three_files() {
    let dir = scratch("fig");
    let out = qbell(&["fig", "range", "--d", "3", "--r", "2", "--grid", "20", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    for name in ["range_d3_r2.svg", "range_d3_r2.csv", "range_d3_r2_curve.csv"] {
        assert!(dir.join(name).exists(), "{name}");
    }
    let only_d = qbell(&["fig", "range", "--d", "3", "--out", dir.to_str().unwrap()]);
    assert_eq!(only_d.status.code(), Some(2));
    std::fs::remove_dir_all(dir).unwrap();
}

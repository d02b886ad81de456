use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn arw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arw")).args(args).output().expect("arw runs")
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("arw-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    d
}

#[test]
fn passing_suite_exits_zero_and_writes_json() {
    let dir = scratch("ok");
    let o = arw(&["identities", "--n", "20", "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let file = fs::read_to_string(dir.join("suite_identities.json")).unwrap();
    assert_eq!(file.trim_end(), String::from_utf8_lossy(&o.stdout).trim_end());
    assert!(file.contains("\"passed\": true"));
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn failing_check_exits_one() {
    // no band is valid at N = 6
    let o = arw(&["coarse-grain", "--n", "6"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("\"passed\": false"));
}

#[test]
fn usage_and_config_errors_exit_two() {
    assert_eq!(arw(&["suite", "everything"]).status.code(), Some(2));
    assert_eq!(arw(&["stationary", "--trials", "0"]).status.code(), Some(2));
    assert_eq!(arw(&["stationary", "--mode", "fast"]).status.code(), Some(2));
    assert_eq!(arw(&["stationary", "--bogus"]).status.code(), Some(2));
    assert_eq!(arw(&["stationary", "--config", "/nonexistent/arw.conf"]).status.code(), Some(2));
    assert_eq!(arw(&[]).status.code(), Some(2));
}

#[test]
fn flags_override_config_file() {
    let dir = scratch("conf");
    fs::create_dir_all(&dir).unwrap();
    let conf = dir.join("run.conf");
    fs::write(&conf, "# small exact run\nn = 3\nlambda = 2\nmode = exact\n").unwrap();
    let o = arw(&["stationary", "--config", conf.to_str().unwrap(), "--n", "1", "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let rep: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(rep["n_sites"], 1);
    assert_eq!(rep["lambda"], 2.0);
    assert_eq!(rep["mode"], "exact");
    let csv = fs::read_to_string(dir.join("stationary.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "config_hash,seed,trial,step,count,weight,steps,truncated");
    assert_eq!(lines.count(), 2);
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn trajectory_rows_carry_provenance() {
    let dir = scratch("traj");
    let o = arw(&["trajectory", "--n", "50", "--trials", "3", "--seed", "5", "--samples", "100", "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.join("trajectory.csv")).unwrap();
    let mut rows = csv.lines();
    assert!(rows.next().unwrap().starts_with("config_hash,seed,trial,t,x,y"));
    let trials: std::collections::BTreeSet<&str> = rows.map(|r| r.split(',').nth(2).unwrap()).collect();
    assert_eq!(trials.len(), 3);
    fs::remove_dir_all(dir).unwrap();
}

#[test]
fn reruns_are_byte_identical() {
    let a = arw(&["stationary", "--n", "60", "--trials", "20", "--seed", "3"]);
    let b = arw(&["stationary", "--n", "60", "--trials", "20", "--seed", "3", "--threads", "3"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = arw(&["stationary", "--n", "60", "--trials", "20", "--seed", "4"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn drift_scan_writes_rows() {
    let dir = scratch("drift");
    let o = arw(&["drift-scan", "--n", "40", "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(fs::read_to_string(dir.join("drift_scan.csv")).unwrap().lines().count() > 40);
    assert!(dir.join("suite_drift.json").exists());
    fs::remove_dir_all(dir).unwrap();
}

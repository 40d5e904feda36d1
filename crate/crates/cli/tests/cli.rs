use std::path::Path;
use std::process::{Command, Output};

fn holo(args: &[&str], seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_holo-isac"));
    cmd.args(args).env_remove("HOLO_ISAC_SEED");
    if let Some(s) = seed_env {
        cmd.env("HOLO_ISAC_SEED", s);
    }
    cmd.output().expect("binary runs")
}

fn seed_of(dir: &Path) -> u64 {
    let text = std::fs::read_to_string(dir.join("metrics.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["seed"].as_u64().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn run_writes_every_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = holo(&["run", "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "beampattern.csv",
        "convergence.csv",
        "metrics.json",
        "cycles.csv",
        "gain_comparison.csv",
        "comparison_pattern.csv",
        "rhs_report.json",
        "pa_report.json",
    ] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let cycles = std::fs::read_to_string(out.join("cycles.csv")).unwrap();
    assert_eq!(cycles.lines().count(), 4);
}

#[test]
fn seed_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = |n: &str| tmp.path().join(n);
    holo(&["run", "--out", dir("cfg").to_str().unwrap()], None);
    holo(&["run", "--out", dir("env").to_str().unwrap()], Some("77"));
    holo(&["run", "--out", dir("flag").to_str().unwrap(), "--seed", "5"], Some("77"));
    assert_eq!(seed_of(&dir("cfg")), 2024);
    assert_eq!(seed_of(&dir("env")), 77);
    assert_eq!(seed_of(&dir("flag")), 5);
}

#[test]
fn parse_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = write(tmp.path(), "empty.conf", "");
    let o = holo(&["run", "--scenario", &empty, "--out", tmp.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("rhs.elements") && err.contains("rhs.frequency_hz"), "{err}");

    let bad = write(
        tmp.path(),
        "bad.conf",
        "rhs.elements = 16\nrhs.frequency_hz = 12e9\ntargets.angles_deg = [95]\ntargets.delays_us = [1]\n",
    );
    let o = holo(&["run", "--scenario", &bad], None);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("targets.angles_deg") && err.contains("line 3"), "{err}");

    assert_eq!(holo(&["run", "--quant-bits", "fine"], None).status.code(), Some(2));
    assert_eq!(holo(&["run"], Some("not-a-number")).status.code(), Some(2));
}

#[test]
fn infeasible_floor_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let s = write(
        tmp.path(),
        "floor.conf",
        "rhs.elements = 16\nrhs.frequency_hz = 12e9\nusers.angles_deg = [60]\nusers.distances_m = [1.7]\n\
         users.capacity_floors = [500]\n",
    );
    let out = tmp.path().join("out");
    let o = holo(&["run", "--scenario", &s, "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(3));
    let m = std::fs::read_to_string(out.join("metrics.json")).unwrap();
    assert!(m.contains("\"status\": \"error\"") && m.contains("infeasible"));
}

#[test]
fn runtime_errors_exit_four() {
    let tmp = tempfile::tempdir().unwrap();
    let s = write(
        tmp.path(),
        "window.conf",
        "rhs.elements = 16\nrhs.frequency_hz = 12e9\ntargets.angles_deg = [0]\ntargets.delays_us = [20]\n\
         link.receive_window_samples = 100\n",
    );
    let out = tmp.path().join("out");
    let o = holo(&["run", "--scenario", &s, "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(4));
    let m = std::fs::read_to_string(out.join("metrics.json")).unwrap();
    assert!(m.contains("out_of_window"));
}

#[test]
fn compare_rhs_against_pa() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    holo(&["run", "--out", out.to_str().unwrap()], None);
    let rhs = out.join("rhs_report.json");
    let pa = out.join("pa_report.json");
    let o = holo(&["compare", rhs.to_str().unwrap(), pa.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let power = text.lines().find(|l| l.starts_with("power_w,")).unwrap();
    let delta: f64 = power.split(',').nth(3).unwrap().parse().unwrap();
    assert!((delta + 4.84).abs() < 1e-12);
    assert!(text.contains("changed,architecture,rhs,phased_array"));

    let o = holo(&["compare", rhs.to_str().unwrap(), rhs.to_str().unwrap()], None);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(3) == Some("0")), "{text}");
}

#[test]
fn compare_schema_mismatch_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let a = write(tmp.path(), "a.json", "{\"schema_version\": 1}");
    let b = write(tmp.path(), "b.json", "{\"schema_version\": 9}");
    let o = holo(&["compare", &a, &b], None);
    assert_ne!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("schema"));
}

#[test]
fn dumps() {
    let o = holo(&["bank-dump"], None);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("theta_deg,phi_deg,feed,a0,"));
    assert_eq!(text.lines().count(), 5);

    let o = holo(&["pattern-dump", "--quant-bits", "continuous"], None);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("angle_deg,theta60_feed0,theta-50_feed0,theta0_feed0,theta20_feed0\n"));
    assert_eq!(text.lines().count(), 362);
}

#[test]
fn zero_targets_write_header_only_cycles() {
    let tmp = tempfile::tempdir().unwrap();
    let s = write(
        tmp.path(),
        "comm.conf",
        "rhs.elements = 16\nrhs.frequency_hz = 12e9\nusers.angles_deg = [60]\nusers.distances_m = [1.7]\n",
    );
    let out = tmp.path().join("out");
    let o = holo(&["run", "--scenario", &s, "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let cycles = std::fs::read_to_string(out.join("cycles.csv")).unwrap();
    assert_eq!(cycles.lines().count(), 1);
    assert!(std::fs::read_to_string(out.join("beampattern.csv")).unwrap().lines().count() > 300);
}

use std::fs;
use std::process::{Command, Output};

fn evfeeder(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evfeeder")).args(args).output().unwrap()
}

#[test]
fn run_writes_every_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = evfeeder(&["run", "--strategy", "timer", "--timer-start", "22:00", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["summary.json", "voltages.csv", "currents.csv", "losses.csv", "manifest.json"] {
        assert!(out.join(name).is_file(), "missing {name}");
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "run");
    // 96 slots plus a header
    assert_eq!(fs::read_to_string(out.join("losses.csv")).unwrap().lines().count(), 97);
}

#[test]
fn validate_passes_on_the_shipped_feeder() {
    let o = evfeeder(&["validate"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("ok: solvers agree"));
}

#[test]
fn sampled_fleet_round_trips_through_run() {
    let tmp = tempfile::tempdir().unwrap();
    let o = evfeeder(&["sample", "--penetration", "0.5", "--seed", "9", "--out", tmp.path().to_str().unwrap()]);
    assert!(o.status.success());
    let fleet = tmp.path().join("fleet.txt");
    let out = tmp.path().join("run");
    let o = evfeeder(&["run", "--fleet", fleet.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bad_input_is_rejected() {
    assert_eq!(evfeeder(&["run", "--strategy", "fastest", "--out", "/nonexistent/x"]).status.code(), Some(2));
    // clap usage errors
    assert!(!evfeeder(&["run", "--timer-start", "22:10"]).status.success());
    assert!(!evfeeder(&["run", "--fleet", "f.txt", "--penetration", "0.5"]).status.success());
    assert_eq!(evfeeder(&["run", "--feeder", "/nonexistent/feeder.txt"]).status.code(), Some(2));
}

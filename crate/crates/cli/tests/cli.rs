use std::path::{Path, PathBuf};

use assert_cmd::Command;

fn infheat() -> Command {
    Command::cargo_bin("infheat").unwrap()
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn rows(out: &[u8]) -> Vec<(f64, f64)> {
    String::from_utf8_lossy(out)
        .lines()
        .skip(1)
        .map(|l| {
            let (x, u) = l.split_once(',').unwrap();
            (x.parse().unwrap(), u.parse().unwrap())
        })
        .collect()
}

#[test]
fn exact_barenblatt_center_value() {
    let out = infheat()
        .args(["exact", "--family", "barenblatt", "--h", "3", "--R", "1", "--t", "1", "--axis-samples", "1001"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let r = rows(&out.stdout);
    assert_eq!(r.len(), 1001);
    assert_eq!(r[500].0, 0.0);
    assert!((r[500].1 - 0.25).abs() < 1e-14);
}

#[test]
fn exact_giant_profile_dump() {
    let out = infheat().args(["exact", "--family", "giant", "--h", "3", "--dump-profile"]).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Rbar = 2.396280"));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("s,r,X,Xprime"));
    let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((last[1] - 2.396280).abs() < 5e-7);
    assert!((last[2] + 1.0).abs() < 1e-12);
}

#[test]
fn exact_wave_front() {
    let out = infheat().args(["exact", "--family", "wave", "--h", "2", "--c", "1", "--t", "1"]).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("front x.nu = 1"));
    for (x, u) in rows(&out.stdout) {
        if x >= 1.0 {
            assert_eq!(u, 0.0);
        } else {
            assert!(u > 0.0);
        }
    }
}

#[test]
fn invalid_parameters_exit_2() {
    let out = infheat().args(["exact", "--family", "barenblatt", "--h", "0.9"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["exit_code"], 2);
}

#[test]
fn invalid_config_exit_2_names_the_rule() {
    let dir = tempfile::tempdir().unwrap();
    let out = infheat()
        .args(["evolve", "-c"])
        .arg(config("grid_barenblatt_2d.toml"))
        .args(["--set", "equation.delta=0.0", "--set", "equation.h=2.0", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("delta-positive-below-h3"));
}

#[test]
fn evolve_then_asymptotics() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let out = infheat()
        .args(["evolve", "-c"])
        .arg(config("radial_barenblatt.toml"))
        .args(["--set", "grid.n=400", "--out"])
        .arg(&run)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let err: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("oracle max-norm error "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(err <= 5e-3);
    for f in ["manifest.json", "config.toml", "snapshots.csv", "diagnostics.csv"] {
        assert!(run.join(f).is_file(), "{f}");
    }
    let out = infheat().arg("asymptotics").arg(&run).args(["-t", "oracle-error"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(run.join("report.csv")).unwrap();
    assert!(report.lines().count() >= 2);
}

#[test]
fn asymptotics_on_empty_directory_is_a_structured_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = infheat().arg("asymptotics").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"].as_str().unwrap().contains("manifest.json"));
}

#[test]
fn verify_operator_suite_passes() {
    let out = infheat().args(["verify", "--suite", "operator"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["passed"], true);
    assert_eq!(summary["outcomes"].as_array().unwrap().len(), 1);
}

#[test]
fn verify_default_suite_passes() {
    let out = infheat().arg("verify").output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn mutated_amplitude_constant_fails_verify() {
    let out = infheat().args(["verify", "--suite", "exact", "--mutate", "amplitude-constant"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["passed"], false);
    assert_eq!(summary["mutation"], "amplitude_constant");
}

#[test]
fn unknown_suite_exit_2() {
    let out = infheat().args(["verify", "--suite", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

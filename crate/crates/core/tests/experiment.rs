//! Run directories: determinism, round trips and error reporting.

use std::fs;
use std::path::{Path, PathBuf};

use infheat_core::config::{ExperimentConfig, Schedule};
use infheat_core::experiment::{execute, load_run, run_to_dir, DiagnosticsRow, ExperimentError, RunData};
use infheat_core::report::{evaluate, Target};

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn example(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&configs_dir().join(name)).unwrap()
}

fn small_grid() -> ExperimentConfig {
    let mut cfg = example("grid_barenblatt_2d.toml");
    cfg.grid.n = 33;
    cfg.time.t_end = 1.2;
    cfg.time.snapshots = Schedule::List { times: vec![1.05, 1.1] };
    cfg
}

fn files_of(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for entry in walk(dir) {
        let name = entry.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
        if name != "manifest.json" {
            out.push((name, fs::read(&entry).unwrap()));
        }
    }
    out.sort();
    out
}

fn walk(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

#[test]
fn every_example_config_is_valid_and_canonical() {
    let mut seen = 0;
    for e in fs::read_dir(configs_dir()).unwrap() {
        let path = e.unwrap().path();
        let cfg = ExperimentConfig::load(&path).unwrap_or_else(|err| panic!("{}: {err}", path.display()));
        let canon = cfg.to_canonical();
        let again = ExperimentConfig::parse(&canon).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.to_canonical(), canon);
        seen += 1;
    }
    assert!(seen >= 5);
}

#[test]
fn reruns_are_bitwise_identical() {
    for cfg in [example("radial_barenblatt.toml"), small_grid()] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let (_, ma) = run_to_dir(&cfg, a.path()).unwrap();
        let (_, mb) = run_to_dir(&cfg, b.path()).unwrap();
        assert_eq!(ma.config_hash, mb.config_hash);
        assert_eq!(ma.steps, mb.steps);
        assert_eq!(files_of(a.path()), files_of(b.path()));
    }
}

#[test]
fn zero_data_give_zero_snapshots() {
    let run = execute(&example("zero.toml")).unwrap();
    let RunData::Radial(profiles) = &run.data else {
        panic!("radial run expected")
    };
    assert_eq!(run.data.times(), vec![0.0, 0.25, 0.5, 1.0]);
    assert!(profiles.iter().all(|p| p.values().iter().all(|v| *v == 0.0)));
}

#[test]
fn radial_barenblatt_oracle_error_is_small() {
    let run = execute(&example("radial_barenblatt.toml")).unwrap();
    assert!(run.oracle_error.unwrap() <= 5e-3);
}

#[test]
fn dirichlet_diagnostics_decay() {
    let mut cfg = example("dirichlet_ball_h2.toml");
    cfg.time.t_end = 100.0;
    cfg.grid.n = 64;
    cfg.diagnostics.every_steps = 200;
    let run = execute(&cfg).unwrap();
    let maxes: Vec<(f64, f64)> = run
        .diagnostics
        .iter()
        .map(|d| match d {
            DiagnosticsRow::Radial(d) => (d.t, d.max_v),
            DiagnosticsRow::Grid(_) => panic!("radial run"),
        })
        .collect();
    assert!(maxes.len() > 10);
    assert!(maxes.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-15));
    let (t_last, m_last) = *maxes.last().unwrap();
    assert!(m_last * t_last < 1.0, "max|u| should fall off like 1/t");
}

#[test]
fn loaded_runs_evaluate_like_fresh_ones() {
    for cfg in [example("radial_barenblatt.toml"), small_grid()] {
        let dir = tempfile::tempdir().unwrap();
        let (fresh, manifest) = run_to_dir(&cfg, dir.path()).unwrap();
        let (loaded, m2) = load_run(dir.path()).unwrap();
        assert_eq!(manifest, m2);
        assert_eq!(fresh.data.times(), loaded.data.times());
        let a = evaluate(&fresh, Target::BenilanCrandall).unwrap();
        let b = evaluate(&loaded, Target::BenilanCrandall).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn missing_run_files_are_named() {
    let dir = tempfile::tempdir().unwrap();
    match load_run(dir.path()) {
        Err(ExperimentError::Missing(p)) => assert!(p.ends_with("manifest.json")),
        other => panic!("unexpected {other:?}"),
    }
    run_to_dir(&example("zero.toml"), dir.path()).unwrap();
    fs::remove_file(dir.path().join("snapshots.csv")).unwrap();
    let err = load_run(dir.path()).unwrap_err();
    assert!(err.to_string().contains("snapshots.csv"), "{err}");
}

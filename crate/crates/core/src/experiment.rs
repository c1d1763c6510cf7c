//! Executes an [`ExperimentConfig`] and reads run directories back.
//!
//! A run directory holds `config.toml` (canonical), `manifest.json`,
//! `snapshots.csv`, `diagnostics.csv` and, for grid runs,
//! `fields/field_NNNN.bin`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{BoundaryKind, ConfigError, ExperimentConfig, InitialData, ProblemKind, SolverKind};
use crate::exact::{Barenblatt, BlowUp, ExactError, ExactSolution, Giant, GiantProfile, TravelingWave, DEFAULT_GIANT_NODES};
use crate::grid::{
    truncate_unbounded, BoundaryData, Field, Grid, GridDiagnostics, GridError, GridSolver, MaskSpec, NodeKind, SchemeParams,
};
use crate::io::{field_header, parse_snapshot_csv, radial_header, write_field_rows, FieldDump, IoError};
use crate::radial::{OuterBoundary, RadialDiagnostics, RadialError, RadialProfile, RadialSolver};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Format { path: PathBuf, source: IoError },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("missing run file {0}")]
    Missing(PathBuf),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Radial(#[from] RadialError),
    #[error("numerical abort: {0}")]
    Aborted(String),
    #[error("initial data file: {0}")]
    InitialFile(String),
}

impl ExperimentError {
    /// Solver failures detected while stepping.
    pub fn is_numerical(&self) -> bool {
        matches!(self, ExperimentError::Aborted(_))
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> ExperimentError + '_ {
    move |e| ExperimentError::Format {
        path: path.to_path_buf(),
        source: IoError::Csv(e),
    }
}

/// Snapshots of a run.
#[derive(Debug, Clone)]
pub enum RunData {
    Radial(Vec<RadialProfile>),
    Grid(Vec<Field>),
}

impl RunData {
    pub fn len(&self) -> usize {
        match self {
            RunData::Radial(s) => s.len(),
            RunData::Grid(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn times(&self) -> Vec<f64> {
        match self {
            RunData::Radial(s) => s.iter().map(|p| p.time()).collect(),
            RunData::Grid(s) => s.iter().map(|f| f.time()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DiagnosticsRow {
    Radial(RadialDiagnostics),
    Grid(GridDiagnostics),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Aborted,
}

#[derive(Debug, Clone)]
pub struct Run {
    pub config: ExperimentConfig,
    pub data: RunData,
    pub diagnostics: Vec<DiagnosticsRow>,
    pub steps: u64,
    pub min_dt: f64,
    pub max_dt: f64,
    pub abort: Option<String>,
    /// Max-norm distance to the exact solution the run started from.
    pub oracle_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub config_hash: String,
    pub package: String,
    pub version: String,
    pub solver: SolverKind,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abort_reason: Option<String>,
    pub steps: u64,
    pub min_dt: Option<f64>,
    pub max_dt: Option<f64>,
    pub snapshot_times: Vec<f64>,
    pub oracle_error: Option<f64>,
    pub wall_time_s: f64,
    pub files: Vec<String>,
}

/// Initial data as a function of position.
pub type InitialFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

fn giant_profile(cfg: &ExperimentConfig) -> Result<Arc<GiantProfile>, ExactError> {
    Ok(Arc::new(GiantProfile::build(cfg.homogeneity(), DEFAULT_GIANT_NODES)?))
}

/// The exact solution a run starts from, when there is one.
pub fn exact_family(cfg: &ExperimentConfig) -> Result<Option<ExactSolution>, ExactError> {
    let hom = cfg.homogeneity();
    Ok(match &cfg.initial {
        InitialData::Barenblatt { radius } => Some(Barenblatt::new(*radius, hom)?.into()),
        InitialData::Blowup { r0, t_blowup } => Some(BlowUp::new(*r0, *t_blowup, hom)?.into()),
        InitialData::Wave { direction, c } => Some(TravelingWave::along(direction, *c, hom)?.into()),
        InitialData::Giant { r0, amplitude } if *amplitude > 0.0 => {
            // amplitude X = X / (t - t0)^(1/(h-1)) at the start time
            let shift = amplitude.powf(1.0 - hom.h());
            Some(Giant::new(giant_profile(cfg)?, *r0, cfg.time.t0 - shift)?.into())
        }
        _ => None,
    })
}

/// Whether the exact family also solves the configured boundary problem.
fn oracle(cfg: &ExperimentConfig) -> Result<Option<ExactSolution>, ExactError> {
    if !cfg.diagnostics.oracle_error {
        return Ok(None);
    }
    let family = exact_family(cfg)?;
    let ok = match (&cfg.initial, cfg.problem.kind, cfg.problem.boundary) {
        (_, _, BoundaryKind::Exact) => true,
        (InitialData::Barenblatt { .. }, ProblemKind::Cauchy, _) => true,
        (InitialData::Giant { r0, .. }, ProblemKind::Dirichlet, BoundaryKind::Zero) => match cfg.problem.solver {
            SolverKind::Radial => (cfg.geometry.r_max.unwrap_or(0.0) - r0).abs() <= 1e-12 * r0,
            SolverKind::Grid => matches!(&cfg.geometry.mask, Some(MaskSpec::Ball { center, radius })
                if (radius - r0).abs() <= 1e-12 * r0 && center.iter().all(|c| *c == 0.0)),
        },
        _ => false,
    };
    Ok(if ok { family } else { None })
}

pub fn initial_fn(cfg: &ExperimentConfig) -> Result<InitialFn, ExperimentError> {
    let t0 = cfg.time.t0;
    Ok(match &cfg.initial {
        InitialData::Zero => Arc::new(|_| 0.0),
        InitialData::Giant { r0, amplitude } => {
            let g = Giant::new(giant_profile(cfg)?, *r0, 0.0)?;
            let a = *amplitude;
            Arc::new(move |x| a * g.spatial(x))
        }
        InitialData::Bump(b) => {
            let b = b.clone();
            Arc::new(move |x| b.eval(x))
        }
        InitialData::Bumps { bumps } => {
            let bumps = bumps.clone();
            Arc::new(move |x| bumps.iter().map(|b| b.eval(x)).sum())
        }
        InitialData::File { .. } => return Err(ExperimentError::InitialFile("file data are not pointwise".into())),
        _ => {
            let family = exact_family(cfg)?.expect("exact family");
            Arc::new(move |x| family.eval(x, t0).unwrap_or(f64::NAN))
        }
    })
}

fn last_frame_radial(path: &Path, outer: OuterBoundary) -> Result<RadialProfile, ExperimentError> {
    let file = File::open(path).map_err(io_err(path))?;
    let frames = parse_snapshot_csv(file).map_err(|source| ExperimentError::Format {
        path: path.to_path_buf(),
        source,
    })?;
    let last = frames
        .last()
        .ok_or_else(|| ExperimentError::InitialFile(format!("{} holds no frames", path.display())))?;
    last.to_radial(outer).map_err(|source| ExperimentError::Format {
        path: path.to_path_buf(),
        source,
    })
}

fn max_error(values: impl Iterator<Item = (f64, f64)>) -> f64 {
    values.map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Runs `cfg` in memory. Solver failures end the run early and are
/// reported in [`Run::abort`] with the snapshots gathered so far.
pub fn execute(cfg: &ExperimentConfig) -> Result<Run, ExperimentError> {
    cfg.validate()?;
    match cfg.problem.solver {
        SolverKind::Radial => execute_radial(cfg),
        SolverKind::Grid => execute_grid(cfg),
    }
}

fn execute_radial(cfg: &ExperimentConfig) -> Result<Run, ExperimentError> {
    let hom = cfg.homogeneity();
    let r_max = cfg.geometry.r_max.expect("validated");
    let outer = match cfg.problem.kind {
        ProblemKind::Cauchy => OuterBoundary::ZeroFlux,
        _ => OuterBoundary::Dirichlet(0.0),
    };
    if cfg.problem.boundary == BoundaryKind::Exact {
        return Err(ConfigError::Rule {
            rule: "radial-exact-boundary",
            message: "the radial solver takes constant outer data".into(),
        }
        .into());
    }
    let t0 = cfg.time.t0;
    let mut state = match &cfg.initial {
        InitialData::File { path } => {
            let p = last_frame_radial(path, outer)?;
            RadialProfile::new(p.r_max(), p.values().to_vec(), t0, outer)?
        }
        _ => {
            let f = initial_fn(cfg)?;
            RadialProfile::from_fn(r_max, cfg.grid.n, t0, outer, |r| f(&[r]))?
        }
    };
    let solver = RadialSolver::new(hom).with_theta(cfg.scheme.theta)?;
    let times = cfg.time.snapshot_times();
    let threshold = cfg.diagnostics.support_threshold;
    let mut snapshots = vec![state.clone()];
    let mut diagnostics = vec![DiagnosticsRow::Radial(state.diagnostics(threshold))];
    let result = solver.evolve(&mut state, cfg.time.t_end, &times, |p| {
        snapshots.push(p.clone());
        diagnostics.push(DiagnosticsRow::Radial(p.diagnostics(threshold)));
    });
    let (steps, min_dt, max_dt, abort) = match result {
        Ok(s) => (s.steps, s.min_dt, s.max_dt, None),
        Err(e @ (RadialError::NonFinite { .. } | RadialError::DtTooLarge { .. })) => (state.steps(), f64::NAN, f64::NAN, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let oracle_error = match (oracle(cfg)?, snapshots.last()) {
        (Some(exact), Some(last)) if abort.is_none() => {
            let t = last.time();
            Some(max_error(last.radii().zip(last.values()).map(|(r, v)| (*v, exact.eval(&[r], t).unwrap_or(f64::NAN)))))
        }
        _ => None,
    };
    Ok(Run {
        config: cfg.clone(),
        data: RunData::Radial(snapshots),
        diagnostics,
        steps,
        min_dt,
        max_dt,
        abort,
        oracle_error,
    })
}

/// Grid and Dirichlet data of a grid run.
pub fn grid_setup(cfg: &ExperimentConfig) -> Result<(Arc<Grid>, BoundaryData), ExperimentError> {
    let d = cfg.geometry.dim;
    let lateral = match cfg.problem.boundary {
        BoundaryKind::Zero => BoundaryData::zero(),
        BoundaryKind::Exact => BoundaryData::from_exact(exact_family(cfg)?.expect("validated")),
    };
    Ok(match cfg.problem.kind {
        ProblemKind::Cauchy => {
            let t = truncate_unbounded(lateral, d, cfg.geometry.truncation_radius.expect("validated"), cfg.grid.n)?;
            (t.grid, t.boundary)
        }
        _ => {
            let geo = &cfg.geometry;
            let mask = geo.mask.clone().unwrap_or(MaskSpec::Box);
            let grid = Grid::new(
                geo.lower.as_deref().expect("validated"),
                geo.upper.as_deref().expect("validated"),
                &vec![cfg.grid.n; d],
                &mask,
            )?;
            (Arc::new(grid), lateral)
        }
    })
}

pub fn scheme_params(cfg: &ExperimentConfig) -> Result<SchemeParams, GridError> {
    let eq = &cfg.equation;
    let mut p = SchemeParams::new(cfg.homogeneity(), eq.eps, eq.delta)?
        .with_source(cfg.source())
        .with_theta(cfg.scheme.theta)?
        .with_stencil(cfg.scheme.stencil);
    if let Some(dt) = cfg.scheme.dt_max {
        p = p.with_dt_max(dt)?;
    }
    Ok(p)
}

fn execute_grid(cfg: &ExperimentConfig) -> Result<Run, ExperimentError> {
    let (grid, boundary) = grid_setup(cfg)?;
    let t0 = cfg.time.t0;
    let mut field = match &cfg.initial {
        InitialData::File { path } => {
            let dump = FieldDump::read_from(File::open(path).map_err(io_err(path))?).map_err(|source| ExperimentError::Format {
                path: path.clone(),
                source,
            })?;
            let f = dump.into_field(grid.clone()).map_err(|source| ExperimentError::Format {
                path: path.clone(),
                source,
            })?;
            Field::new(grid.clone(), f.values().to_vec(), t0)?
        }
        _ => {
            let f = initial_fn(cfg)?;
            let truncate = cfg.problem.kind == ProblemKind::Cauchy;
            let radius = cfg.geometry.truncation_radius.unwrap_or(f64::INFINITY);
            let d = grid.dim();
            let values = (0..grid.len())
                .map(|i| {
                    let x = &grid.coords(i)[..d];
                    match grid.kind(i) {
                        NodeKind::Exterior => 0.0,
                        NodeKind::Boundary => boundary.eval(x, t0),
                        NodeKind::Interior if truncate => {
                            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                            crate::grid::cutoff(r / radius) * f(x)
                        }
                        NodeKind::Interior => f(x),
                    }
                })
                .collect();
            Field::new(grid.clone(), values, t0)?
        }
    };
    let solver = GridSolver::new(scheme_params(cfg)?, boundary);
    let times = cfg.time.snapshot_times();
    let every = cfg.diagnostics.every_steps;
    let threshold = cfg.diagnostics.support_threshold;
    let row = |f: &Field, dt: f64| {
        DiagnosticsRow::Grid(GridDiagnostics {
            t: f.time(),
            max_abs: f.max_abs(),
            min_u: f.min_value(),
            support_measure: f.support_measure(threshold),
            dt,
        })
    };
    let mut snapshots = vec![field.clone()];
    let mut diagnostics = vec![row(&field, 0.0)];
    let mut per_step = Vec::new();
    let mut step = 0u64;
    let result = solver.evolve_with_diagnostics(
        &mut field,
        cfg.time.t_end,
        &times,
        |f| snapshots.push(f.clone()),
        |d| {
            step += 1;
            if every > 0 && step.is_multiple_of(every) {
                per_step.push(*d);
            }
        },
    );
    // interleave per-step rows with snapshot rows in time order
    for s in &snapshots[1..] {
        diagnostics.push(row(s, f64::NAN));
    }
    diagnostics.extend(per_step.into_iter().map(DiagnosticsRow::Grid));
    diagnostics.sort_by(|a, b| diag_time(a).total_cmp(&diag_time(b)));
    let (steps, min_dt, max_dt, abort) = match result {
        Ok(s) => (s.steps, s.min_dt, s.max_dt, None),
        Err(e @ (GridError::NonFinite { .. } | GridError::Unstable { .. } | GridError::DtTooLarge { .. })) => {
            (step, f64::NAN, f64::NAN, Some(e.to_string()))
        }
        Err(e) => return Err(e.into()),
    };
    let oracle_error = match (oracle(cfg)?, snapshots.last()) {
        (Some(exact), Some(last)) if abort.is_none() => {
            let g = last.grid();
            let t = last.time();
            Some(max_error(
                last.active().map(|(i, v)| (v, exact.eval(&g.coords(i)[..g.dim()], t).unwrap_or(f64::NAN))),
            ))
        }
        _ => None,
    };
    Ok(Run {
        config: cfg.clone(),
        data: RunData::Grid(snapshots),
        diagnostics,
        steps,
        min_dt,
        max_dt,
        abort,
        oracle_error,
    })
}

fn diag_time(d: &DiagnosticsRow) -> f64 {
    match d {
        DiagnosticsRow::Radial(r) => r.t,
        DiagnosticsRow::Grid(g) => g.t,
    }
}

pub const CONFIG_FILE: &str = "config.toml";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SNAPSHOT_FILE: &str = "snapshots.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const FIELD_DIR: &str = "fields";

pub fn field_file(k: usize) -> String {
    format!("{FIELD_DIR}/field_{k:04}.bin")
}

/// Writes the run files; the manifest goes last.
pub fn write_run(run: &Run, dir: &Path, wall_time_s: f64) -> Result<Manifest, ExperimentError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut files = Vec::new();
    let cfg_path = dir.join(CONFIG_FILE);
    fs::write(&cfg_path, run.config.to_canonical()).map_err(io_err(&cfg_path))?;
    files.push(CONFIG_FILE.to_string());

    let snap_path = dir.join(SNAPSHOT_FILE);
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&snap_path).map_err(io_err(&snap_path))?));
    match &run.data {
        RunData::Radial(s) => {
            w.write_record(radial_header()).map_err(csv_err(&snap_path))?;
            for p in s {
                p.write_snapshot(&mut w).map_err(csv_err(&snap_path))?;
            }
        }
        RunData::Grid(s) => {
            let dim = s.first().map_or(run.config.geometry.dim, |f| f.grid().dim());
            w.write_record(field_header(dim)).map_err(csv_err(&snap_path))?;
            for f in s {
                write_field_rows(f, &mut w).map_err(csv_err(&snap_path))?;
            }
        }
    }
    w.flush().map_err(io_err(&snap_path))?;
    drop(w);
    files.push(SNAPSHOT_FILE.to_string());

    if let (RunData::Grid(s), true) = (&run.data, run.config.output.field_dumps) {
        let field_dir = dir.join(FIELD_DIR);
        fs::create_dir_all(&field_dir).map_err(io_err(&field_dir))?;
        for (k, f) in s.iter().enumerate() {
            let path = dir.join(field_file(k));
            FieldDump::of(f)
                .write_to(BufWriter::new(File::create(&path).map_err(io_err(&path))?))
                .map_err(io_err(&path))?;
            files.push(field_file(k));
        }
    }

    let diag_path = dir.join(DIAGNOSTICS_FILE);
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(&diag_path).map_err(io_err(&diag_path))?));
    for row in &run.diagnostics {
        w.serialize(row).map_err(csv_err(&diag_path))?;
    }
    w.flush().map_err(io_err(&diag_path))?;
    drop(w);
    files.push(DIAGNOSTICS_FILE.to_string());

    let finite = |v: f64| v.is_finite().then_some(v);
    let manifest = Manifest {
        name: run.config.name.clone(),
        config_hash: run.config.hash(),
        package: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        solver: run.config.problem.solver,
        status: if run.abort.is_some() {
            RunStatus::Aborted
        } else {
            RunStatus::Completed
        },
        abort_reason: run.abort.clone(),
        steps: run.steps,
        min_dt: finite(run.min_dt),
        max_dt: finite(run.max_dt),
        snapshot_times: run.data.times(),
        oracle_error: run.oracle_error,
        wall_time_s,
        files,
    };
    let man_path = dir.join(MANIFEST_FILE);
    let mut out = BufWriter::new(File::create(&man_path).map_err(io_err(&man_path))?);
    serde_json::to_writer_pretty(&mut out, &manifest).map_err(|source| ExperimentError::Json {
        path: man_path.clone(),
        source,
    })?;
    out.write_all(b"\n").and_then(|_| out.flush()).map_err(io_err(&man_path))?;
    Ok(manifest)
}

/// Executes `cfg` and writes the run to `dir`. A numerical abort is
/// recorded in the manifest and then returned as an error.
pub fn run_to_dir(cfg: &ExperimentConfig, dir: &Path) -> Result<(Run, Manifest), ExperimentError> {
    let start = Instant::now();
    let run = execute(cfg)?;
    let manifest = write_run(&run, dir, start.elapsed().as_secs_f64())?;
    if let Some(reason) = &run.abort {
        return Err(ExperimentError::Aborted(reason.clone()));
    }
    Ok((run, manifest))
}

fn require(path: PathBuf) -> Result<PathBuf, ExperimentError> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(ExperimentError::Missing(path))
    }
}

/// Reads a run directory written by [`write_run`].
pub fn load_run(dir: &Path) -> Result<(Run, Manifest), ExperimentError> {
    let man_path = require(dir.join(MANIFEST_FILE))?;
    let cfg_path = require(dir.join(CONFIG_FILE))?;
    let snap_path = require(dir.join(SNAPSHOT_FILE))?;
    let manifest: Manifest =
        serde_json::from_slice(&fs::read(&man_path).map_err(io_err(&man_path))?).map_err(|source| ExperimentError::Json {
            path: man_path.clone(),
            source,
        })?;
    let config = ExperimentConfig::load(&cfg_path)?;
    let data = match config.problem.solver {
        SolverKind::Radial => {
            let outer = match config.problem.kind {
                ProblemKind::Cauchy => OuterBoundary::ZeroFlux,
                _ => OuterBoundary::Dirichlet(0.0),
            };
            let frames = parse_snapshot_csv(File::open(&snap_path).map_err(io_err(&snap_path))?).map_err(|source| {
                ExperimentError::Format {
                    path: snap_path.clone(),
                    source,
                }
            })?;
            let profiles = frames
                .iter()
                .map(|f| f.to_radial(outer))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|source| ExperimentError::Format {
                    path: snap_path.clone(),
                    source,
                })?;
            RunData::Radial(profiles)
        }
        SolverKind::Grid => {
            let (grid, _) = grid_setup(&config)?;
            let fields = (0..manifest.snapshot_times.len())
                .map(|k| {
                    let path = require(dir.join(field_file(k)))?;
                    let bytes = fs::read(&path).map_err(io_err(&path))?;
                    FieldDump::decode(&bytes)
                        .and_then(|d| d.into_field(grid.clone()))
                        .map_err(|source| ExperimentError::Format { path, source })
                })
                .collect::<Result<Vec<_>, _>>()?;
            RunData::Grid(fields)
        }
    };
    let run = Run {
        config,
        data,
        diagnostics: Vec::new(),
        steps: manifest.steps,
        min_dt: manifest.min_dt.unwrap_or(f64::NAN),
        max_dt: manifest.max_dt.unwrap_or(f64::NAN),
        abort: manifest.abort_reason.clone(),
        oracle_error: manifest.oracle_error,
    };
    Ok((run, manifest))
}

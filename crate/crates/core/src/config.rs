//! Declarative experiment description in TOML.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::grid::{MaskSpec, StencilMode, MAX_DIM};
use crate::operator::{Homogeneity, Source, SourceKind};
use crate::radial::{DEFAULT_THETA, MIN_CELLS};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("rule {rule} violated: {message}")]
    Rule { rule: &'static str, message: String },
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
}

impl ConfigError {
    pub fn rule(&self) -> Option<&'static str> {
        match self {
            ConfigError::Rule { rule, .. } => Some(rule),
            _ => None,
        }
    }
}

fn rule(rule: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Rule {
        rule,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub equation: EquationConfig,
    pub problem: ProblemConfig,
    pub geometry: GeometryConfig,
    pub initial: InitialData,
    pub grid: GridConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub scheme: SchemeConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_name() -> String {
    "run".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationConfig {
    pub h: f64,
    #[serde(default)]
    pub eps: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub source: SourceKind,
    #[serde(default)]
    pub source_bound: f64,
}

fn default_delta() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    Cauchy,
    Dirichlet,
    CustomMask,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Radial,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    /// Homogeneous data.
    #[default]
    Zero,
    /// The initial exact solution, evaluated at each time.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    pub solver: SolverKind,
    #[serde(default)]
    pub boundary: BoundaryKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// Outer radius of the radial domain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<f64>>,
    /// Truncation radius of a grid Cauchy run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<MaskSpec>,
}

fn default_dim() -> usize {
    1
}

/// Smooth compactly supported bump. In radial runs the only coordinate is
/// the radius, so an off-centre bump is a ring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    #[serde(default)]
    pub center: Vec<f64>,
    pub radius: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "two")]
    pub power: f64,
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

impl Bump {
    /// `amplitude (1 - |x - center|^2 / radius^2)_+^power`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let d2: f64 = x
            .iter()
            .enumerate()
            .map(|(k, v)| (v - self.center.get(k).copied().unwrap_or(0.0)).powi(2))
            .sum();
        let b = 1.0 - d2 / (self.radius * self.radius);
        if b <= 0.0 {
            0.0
        } else {
            self.amplitude * b.powf(self.power)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    Zero,
    Barenblatt {
        radius: f64,
    },
    /// `amplitude X_{r0}(x)`, the spatial factor of the separable solution.
    Giant {
        r0: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    Blowup {
        r0: f64,
        t_blowup: f64,
    },
    Wave {
        direction: Vec<f64>,
        c: f64,
    },
    Bump(Bump),
    Bumps {
        bumps: Vec<Bump>,
    },
    /// A snapshot CSV (radial) or field dump (grid); the last frame is used.
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Cells of a radial run, nodes per axis of a grid run.
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    /// `first * ratio^k`; `first` defaults to `t0`.
    Geometric {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        first: Option<f64>,
        #[serde(default = "default_ratio")]
        ratio: f64,
    },
    List {
        times: Vec<f64>,
    },
    None,
}

pub fn default_ratio() -> f64 {
    10f64.powf(1.0 / 8.0)
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::Geometric {
            first: None,
            ratio: default_ratio(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t0: f64,
    pub t_end: f64,
    #[serde(default)]
    pub snapshots: Schedule,
}

impl TimeConfig {
    /// Snapshot times: `t0`, the schedule inside `(t0, t_end)`, and `t_end`.
    pub fn snapshot_times(&self) -> Vec<f64> {
        let mut times = vec![self.t0];
        let inside = |t: f64| t > self.t0 && t < self.t_end;
        match &self.snapshots {
            Schedule::Geometric { first, ratio } => {
                let first = first.unwrap_or(self.t0);
                if first > 0.0 && *ratio > 1.0 {
                    let mut k = 0;
                    loop {
                        let t = first * ratio.powi(k);
                        if t >= self.t_end * (1.0 - 1e-9) {
                            break;
                        }
                        if inside(t) {
                            times.push(t);
                        }
                        k += 1;
                    }
                }
            }
            Schedule::List { times: list } => {
                let mut l: Vec<f64> = list.iter().copied().filter(|&t| inside(t)).collect();
                l.sort_by(f64::total_cmp);
                l.dedup();
                times.extend(l);
            }
            Schedule::None => {}
        }
        if self.t_end > self.t0 {
            times.push(self.t_end);
        }
        times
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default)]
    pub stencil: StencilMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_max: Option<f64>,
}

fn default_theta() -> f64 {
    DEFAULT_THETA
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            theta: DEFAULT_THETA,
            stencil: StencilMode::default(),
            dt_max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Grid runs also log every this many steps; 0 logs at snapshots only.
    #[serde(default)]
    pub every_steps: u64,
    #[serde(default = "default_support_threshold")]
    pub support_threshold: f64,
    /// Compare against the exact solution used as initial data.
    #[serde(default = "yes")]
    pub oracle_error: bool,
}

fn yes() -> bool {
    true
}

fn default_support_threshold() -> f64 {
    1e-10
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            every_steps: 0,
            support_threshold: default_support_threshold(),
            oracle_error: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Binary dumps of grid snapshots.
    #[serde(default = "yes")]
    pub field_dumps: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            field_dumps: true,
        }
    }
}

/// Every pass/fail threshold used by the analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub fit_window: [f64; 2],
    pub decay_exponent: f64,
    pub support_exponent: f64,
    pub gap_times: Vec<f64>,
    pub radial_error: f64,
    pub grid_error: f64,
    pub giant_gap: f64,
    pub giant_uniqueness: f64,
    pub stabilization: f64,
    pub stabilization_window: f64,
    pub eigen_exact: f64,
    pub eigen_extracted: f64,
    pub eigen_gradient_factor: f64,
    pub eigen_boundary_cells: f64,
    pub eigen_critical_cells: f64,
    pub bc_violation: f64,
    pub bc_monotonicity: f64,
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            fit_window: [10.0, 1000.0],
            decay_exponent: 0.05,
            support_exponent: 0.05,
            gap_times: vec![10.0, 100.0, 1000.0],
            radial_error: 5e-3,
            grid_error: 1e-2,
            giant_gap: 5e-3,
            giant_uniqueness: 1e-2,
            stabilization: 1e-6,
            stabilization_window: 1.0,
            eigen_exact: 1e-3,
            eigen_extracted: 1e-2,
            eigen_gradient_factor: 1e-6,
            eigen_boundary_cells: 2.0,
            eigen_critical_cells: 8.0,
            bc_violation: 1e-6,
            bc_monotonicity: 1e-8,
            residual: 1e-6,
        }
    }
}

impl Tolerances {
    pub fn eigen_options(&self) -> crate::asymptotics::EigenOptions {
        crate::asymptotics::EigenOptions {
            gradient_factor: self.eigen_gradient_factor,
            boundary_cells: self.eigen_boundary_cells,
            critical_cells: self.eigen_critical_cells,
        }
    }
}

fn positive(name: &'static str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(rule(name, format!("must be a positive finite number, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Canonical text: every default spelled out, fixed key order.
    pub fn to_canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn homogeneity(&self) -> Homogeneity {
        Homogeneity::new(self.equation.h).expect("validated")
    }

    pub fn source(&self) -> Source {
        Source::new(self.equation.source, self.equation.source_bound).expect("validated")
    }

    /// Dimension of the samples handed to the initial data.
    pub fn space_dim(&self) -> usize {
        match self.problem.solver {
            SolverKind::Radial => 1,
            SolverKind::Grid => self.geometry.dim,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let eq = &self.equation;
        if !(eq.h.is_finite() && eq.h > 1.0) {
            return Err(rule("h-greater-than-one", format!("h must exceed 1, got {}", eq.h)));
        }
        if !(eq.eps.is_finite() && eq.eps >= 0.0) {
            return Err(rule("eps-nonnegative", format!("eps must be >= 0, got {}", eq.eps)));
        }
        if !(eq.delta.is_finite() && eq.delta >= 0.0) {
            return Err(rule("delta-nonnegative", format!("delta must be >= 0, got {}", eq.delta)));
        }
        if eq.delta == 0.0 && eq.h < 3.0 {
            return Err(rule(
                "delta-positive-below-h3",
                format!("delta = 0 needs h >= 3, got h = {}", eq.h),
            ));
        }
        Source::new(eq.source, eq.source_bound).map_err(|e| rule("source-linear-growth", e.to_string()))?;

        let geo = &self.geometry;
        match self.problem.solver {
            SolverKind::Radial => {
                if self.problem.kind == ProblemKind::CustomMask {
                    return Err(rule("radial-no-custom-mask", "the radial solver only handles balls"));
                }
                match geo.r_max {
                    Some(r) => positive("radial-needs-r-max", r)?,
                    None => return Err(rule("radial-needs-r-max", "geometry.r_max is required")),
                }
                if self.grid.n < MIN_CELLS {
                    return Err(rule("radial-min-cells", format!("need at least {MIN_CELLS} cells, got {}", self.grid.n)));
                }
                if !(self.scheme.theta > 0.0 && self.scheme.theta < 0.5) {
                    return Err(rule("radial-theta-range", format!("theta must lie in (0, 0.5), got {}", self.scheme.theta)));
                }
            }
            SolverKind::Grid => {
                if !(1..=MAX_DIM).contains(&geo.dim) {
                    return Err(rule("grid-dim-range", format!("dim must be 1 to {MAX_DIM}, got {}", geo.dim)));
                }
                if self.grid.n < 5 {
                    return Err(rule("grid-min-nodes", format!("need at least 5 nodes per axis, got {}", self.grid.n)));
                }
                if !(self.scheme.theta > 0.0 && self.scheme.theta < 1.0) {
                    return Err(rule("grid-theta-range", format!("theta must lie in (0, 1), got {}", self.scheme.theta)));
                }
                if let Some(dt) = self.scheme.dt_max {
                    positive("dt-max-positive", dt)?;
                }
                match self.problem.kind {
                    ProblemKind::Cauchy => match geo.truncation_radius {
                        Some(r) => positive("cauchy-grid-needs-truncation", r)?,
                        None => {
                            return Err(rule(
                                "cauchy-grid-needs-truncation",
                                "geometry.truncation_radius is required for a grid Cauchy run",
                            ))
                        }
                    },
                    kind => {
                        let (Some(lo), Some(hi)) = (&geo.lower, &geo.upper) else {
                            return Err(rule("grid-needs-box", "geometry.lower and geometry.upper are required"));
                        };
                        if lo.len() != geo.dim || hi.len() != geo.dim {
                            return Err(rule("grid-box-matches-dim", "lower and upper need one entry per axis"));
                        }
                        if lo.iter().zip(hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b)) {
                            return Err(rule("grid-box-ordered", "lower must be below upper on every axis"));
                        }
                        if kind == ProblemKind::CustomMask && geo.mask.is_none() {
                            return Err(rule("custom-mask-needs-mask", "geometry.mask is required"));
                        }
                        if let Some(MaskSpec::Ball { center, radius }) = &geo.mask {
                            if center.len() != geo.dim {
                                return Err(rule("mask-matches-dim", "ball centre needs one entry per axis"));
                            }
                            positive("mask-radius-positive", *radius)?;
                        }
                    }
                }
            }
        }

        let t = &self.time;
        if !(t.t0.is_finite() && t.t_end.is_finite() && t.t_end >= t.t0) {
            return Err(rule("time-ordered", format!("need finite t0 <= t_end, got {} and {}", t.t0, t.t_end)));
        }
        match &t.snapshots {
            Schedule::Geometric { first, ratio } => {
                if !(*ratio > 1.0 && ratio.is_finite()) {
                    return Err(rule("schedule-ratio", format!("geometric ratio must exceed 1, got {ratio}")));
                }
                if !(first.unwrap_or(t.t0) > 0.0) {
                    return Err(rule(
                        "schedule-positive-start",
                        "geometric snapshots need a positive first time (set snapshots.first when t0 <= 0)",
                    ));
                }
            }
            Schedule::List { times } => {
                if times.iter().any(|v| !v.is_finite()) {
                    return Err(rule("schedule-finite", "snapshot times must be finite"));
                }
            }
            Schedule::None => {}
        }

        let dim = self.space_dim();
        let check_center = |c: &[f64]| -> Result<(), ConfigError> {
            if !c.is_empty() && c.len() != dim {
                return Err(rule("initial-matches-dim", format!("centre has {} entries, space has {dim}", c.len())));
            }
            Ok(())
        };
        match &self.initial {
            InitialData::Zero | InitialData::File { .. } => {}
            InitialData::Barenblatt { radius } => {
                positive("barenblatt-radius-positive", *radius)?;
                if !(t.t0 > 0.0) {
                    return Err(rule("barenblatt-positive-time", "Barenblatt data need t0 > 0"));
                }
            }
            InitialData::Giant { r0, amplitude } => {
                positive("giant-radius-positive", *r0)?;
                if !amplitude.is_finite() {
                    return Err(rule("giant-amplitude-finite", "amplitude must be finite"));
                }
            }
            InitialData::Blowup { r0, t_blowup } => {
                if !(r0.is_finite() && *r0 >= 0.0) {
                    return Err(rule("blowup-radius-nonnegative", format!("r0 must be >= 0, got {r0}")));
                }
                if !(t.t_end < *t_blowup) {
                    return Err(rule("blowup-before-t-blowup", "t_end must precede t_blowup"));
                }
            }
            InitialData::Wave { direction, c } => {
                if direction.len() != dim {
                    return Err(rule("wave-direction-dim", format!("direction has {} entries, space has {dim}", direction.len())));
                }
                if !(c.is_finite() && *c != 0.0) {
                    return Err(rule("wave-speed-nonzero", "c must be finite and nonzero"));
                }
                if direction.iter().map(|v| v * v).sum::<f64>() == 0.0 {
                    return Err(rule("wave-direction-dim", "direction must be nonzero"));
                }
            }
            InitialData::Bump(b) => {
                positive("bump-radius-positive", b.radius)?;
                check_center(&b.center)?;
            }
            InitialData::Bumps { bumps } => {
                if bumps.is_empty() {
                    return Err(rule("bumps-nonempty", "at least one bump is required"));
                }
                for b in bumps {
                    positive("bump-radius-positive", b.radius)?;
                    check_center(&b.center)?;
                }
            }
        }
        if matches!(self.problem.boundary, BoundaryKind::Exact)
            && !matches!(
                self.initial,
                InitialData::Barenblatt { .. } | InitialData::Blowup { .. } | InitialData::Wave { .. }
            )
        {
            return Err(rule("exact-boundary-needs-family", "boundary = \"exact\" needs Barenblatt, blowup or wave data"));
        }
        positive("support-threshold-positive", self.diagnostics.support_threshold)?;
        let tol = &self.tolerances;
        if !(tol.fit_window[0] > 0.0 && tol.fit_window[1] > tol.fit_window[0]) {
            return Err(rule("fit-window-ordered", "fit_window must be 0 < lo < hi"));
        }
        for (name, v) in [
            ("decay_exponent", tol.decay_exponent),
            ("support_exponent", tol.support_exponent),
            ("radial_error", tol.radial_error),
            ("grid_error", tol.grid_error),
            ("giant_gap", tol.giant_gap),
            ("giant_uniqueness", tol.giant_uniqueness),
            ("stabilization", tol.stabilization),
            ("stabilization_window", tol.stabilization_window),
            ("eigen_exact", tol.eigen_exact),
            ("eigen_extracted", tol.eigen_extracted),
            ("eigen_gradient_factor", tol.eigen_gradient_factor),
            ("bc_violation", tol.bc_violation),
            ("bc_monotonicity", tol.bc_monotonicity),
            ("residual", tol.residual),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(rule("tolerances-positive", format!("tolerances.{name} must be positive, got {v}")));
            }
        }
        if !(tol.eigen_boundary_cells >= 0.0 && tol.eigen_critical_cells >= 0.0) {
            return Err(rule("tolerances-positive", "eigen exclusion distances must be >= 0"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const RADIAL: &str = r#"
name = "bump"
[equation]
h = 3.0
[problem]
kind = "cauchy"
solver = "radial"
[geometry]
r_max = 20.0
[initial]
kind = "bump"
radius = 1.0
[grid]
n = 1000
[time]
t0 = 0.0
t_end = 1000.0
[time.snapshots]
kind = "geometric"
first = 10.0
"#;

    #[test]
    fn parses_and_fills_defaults() {
        let c = ExperimentConfig::parse(RADIAL).unwrap();
        assert_eq!(c.equation.delta, 1e-3);
        assert_eq!(c.tolerances.decay_exponent, 0.05);
        assert_eq!(c.scheme.theta, DEFAULT_THETA);
        let times = c.time.snapshot_times();
        assert_eq!(times.len(), 1 + 16 + 1);
        assert!((times[9] - 100.0).abs() < 1e-9);
        assert_eq!(times[0], 0.0);
        assert_eq!(*times.last().unwrap(), 1000.0);
    }

    #[test]
    fn canonical_round_trip() {
        let c = ExperimentConfig::parse(RADIAL).unwrap();
        let text = c.to_canonical();
        let again = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.to_canonical(), text);
        assert_eq!(again.hash(), c.hash());
    }

    #[test]
    fn names_violated_rules() {
        let cases = [
            (RADIAL.replace("h = 3.0", "h = 1.0"), "h-greater-than-one"),
            (RADIAL.replace("h = 3.0", "h = 2.0\ndelta = 0.0"), "delta-positive-below-h3"),
            (RADIAL.replace("r_max = 20.0", ""), "radial-needs-r-max"),
            (RADIAL.replace("n = 1000", "n = 8"), "radial-min-cells"),
            (RADIAL.replace("t_end = 1000.0", "t_end = -1.0"), "time-ordered"),
            (RADIAL.replace("first = 10.0", ""), "schedule-positive-start"),
            (RADIAL.replace("solver = \"radial\"", "solver = \"grid\"\n"), "cauchy-grid-needs-truncation"),
        ];
        for (text, expected) in cases {
            match ExperimentConfig::parse(&text) {
                Err(e) => assert_eq!(e.rule(), Some(expected), "{e}"),
                Ok(_) => panic!("accepted config violating {expected}"),
            }
        }
        assert!(matches!(ExperimentConfig::parse("[equation]\nh = 3\nbogus = 1"), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn bump_shape() {
        let b = Bump {
            center: vec![],
            radius: 1.0,
            amplitude: 1.0,
            power: 2.0,
        };
        assert_eq!(b.eval(&[0.0]), 1.0);
        assert!((b.eval(&[0.5]) - 0.5625).abs() < 1e-15);
        assert_eq!(b.eval(&[1.0]), 0.0);
    }
}

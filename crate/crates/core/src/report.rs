//! Named pass/fail targets evaluated on a run.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asymptotics::{
    bc_monotonicity, benilan_crandall_check, dirichlet_rescale, eigen_residual, eigen_residual_radial, extract_giant,
    fit_barenblatt, fit_decay_exponent, series_of, support_radius, AsymptoticsError, GiantEstimate, Snapshot,
};
use crate::config::{BoundaryKind, ExperimentConfig, ProblemKind, SolverKind};
use crate::exact::{ExactError, Giant, GiantProfile, DEFAULT_GIANT_NODES};
use crate::experiment::{Run, RunData};
use crate::grid::{Field, MaskSpec, NodeKind};
use crate::radial::{OuterBoundary, RadialProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    CauchyDecay,
    SupportRate,
    BarenblattGap,
    DirichletDecay,
    Giant,
    EigenResidual,
    BenilanCrandall,
    BcMonotonicity,
    OracleError,
}

impl Target {
    pub const ALL: [Target; 9] = [
        Target::CauchyDecay,
        Target::SupportRate,
        Target::BarenblattGap,
        Target::DirichletDecay,
        Target::Giant,
        Target::EigenResidual,
        Target::BenilanCrandall,
        Target::BcMonotonicity,
        Target::OracleError,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Target::CauchyDecay => "cauchy-decay",
            Target::SupportRate => "support-rate",
            Target::BarenblattGap => "barenblatt-gap",
            Target::DirichletDecay => "dirichlet-decay",
            Target::Giant => "giant",
            Target::EigenResidual => "eigen-residual",
            Target::BenilanCrandall => "benilan-crandall",
            Target::BcMonotonicity => "bc-monotonicity",
            Target::OracleError => "oracle-error",
        }
    }

    /// Targets that make sense for the configured problem. Some may still
    /// be inapplicable to a particular run (too short, no oracle).
    pub fn defaults_for(cfg: &ExperimentConfig) -> Vec<Target> {
        if cfg.problem.boundary != BoundaryKind::Zero {
            return vec![Target::OracleError];
        }
        match cfg.problem.kind {
            ProblemKind::Cauchy => vec![
                Target::CauchyDecay,
                Target::SupportRate,
                Target::BarenblattGap,
                Target::BenilanCrandall,
                Target::OracleError,
            ],
            _ => vec![
                Target::DirichletDecay,
                Target::Giant,
                Target::EigenResidual,
                Target::BenilanCrandall,
                Target::BcMonotonicity,
                Target::OracleError,
            ],
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Target {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Target::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown target {s:?}"))
    }
}

/// How `measured` is judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    /// `|measured - expected| <= tolerance`
    Within,
    /// `measured <= tolerance`
    AtMost,
    /// `measured < expected`
    Below,
    /// Reported only.
    Info,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub target: Target,
    pub quantity: String,
    pub window: Option<(f64, f64)>,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub rule: Rule,
    pub passed: bool,
}

impl Check {
    pub fn new(target: Target, quantity: impl Into<String>, measured: f64, expected: f64, tolerance: f64, rule: Rule) -> Self {
        let passed = match rule {
            Rule::Within => (measured - expected).abs() <= tolerance,
            Rule::AtMost => measured <= tolerance,
            Rule::Below => measured < expected,
            Rule::Info => true,
        };
        Self {
            target,
            quantity: quantity.into(),
            window: None,
            measured,
            expected,
            tolerance,
            rule,
            passed,
        }
    }

    fn window(mut self, w: (f64, f64)) -> Self {
        self.window = Some(w);
        self
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("target {target} does not apply: {reason}")]
    NotApplicable { target: Target, reason: String },
    #[error("target {target}: no snapshot at t = {t}")]
    MissingSnapshot { target: Target, t: f64 },
    #[error("target {target}: {source}")]
    Asymptotics { target: Target, source: AsymptoticsError },
    #[error(transparent)]
    Exact(#[from] ExactError),
}

/// A snapshot with its clock restarted at the initial time.
struct Shifted<'a, S> {
    inner: &'a S,
    t0: f64,
}

impl<S: Snapshot> Snapshot for Shifted<'_, S> {
    fn time(&self) -> f64 {
        self.inner.time() - self.t0
    }
    fn values(&self) -> &[f64] {
        self.inner.values()
    }
    fn radius_at(&self, i: usize) -> f64 {
        self.inner.radius_at(i)
    }
    fn is_active(&self, i: usize) -> bool {
        self.inner.is_active(i)
    }
}

fn shifted<S: Snapshot>(run: &[S], t0: f64) -> Vec<Shifted<'_, S>> {
    run.iter().filter(|s| s.time() > t0).map(|inner| Shifted { inner, t0 }).collect()
}

fn snapshot_at<S: Snapshot>(run: &[S], t: f64) -> Option<&S> {
    run.iter().find(|s| (s.time() - t).abs() <= 1e-9 * t.abs().max(1.0))
}

/// Extracted limit profile of a Dirichlet run, with the exact profile
/// sampled at the same points when the domain is a centred ball.
pub struct GiantComparison {
    pub estimate: GiantEstimate,
    pub exact: Option<Vec<f64>>,
    pub samples: GiantSamples,
}

pub enum GiantSamples {
    Radial(RadialProfile),
    Grid(Field),
}

/// Ball radius of the Dirichlet domain when it is a ball about the origin.
pub fn ball_radius(cfg: &ExperimentConfig) -> Option<f64> {
    match cfg.problem.solver {
        SolverKind::Radial => cfg.geometry.r_max,
        SolverKind::Grid => match &cfg.geometry.mask {
            Some(MaskSpec::Ball { center, radius }) if center.iter().all(|c| *c == 0.0) => Some(*radius),
            _ => None,
        },
    }
}

fn extract<S: Snapshot>(run: &[S], cfg: &ExperimentConfig) -> Result<GiantEstimate, AsymptoticsError> {
    let hom = cfg.homogeneity();
    let sh = shifted(run, cfg.time.t0);
    let s_values: Vec<f64> = sh.iter().map(|s| s.time().ln() / (hom.h() - 1.0)).collect();
    let series = dirichlet_rescale(&sh, &s_values, &hom)?;
    let tol = &cfg.tolerances;
    extract_giant(&series, &hom, tol.stabilization_window, tol.stabilization)
}

pub fn giant_comparison(run: &Run) -> Result<GiantComparison, ReportError> {
    let cfg = &run.config;
    let wrap = |source| ReportError::Asymptotics {
        target: Target::Giant,
        source,
    };
    if cfg.problem.kind == ProblemKind::Cauchy {
        return Err(ReportError::NotApplicable {
            target: Target::Giant,
            reason: "the run is a Cauchy problem".into(),
        });
    }
    if cfg.problem.boundary != BoundaryKind::Zero {
        return Err(ReportError::NotApplicable {
            target: Target::Giant,
            reason: "needs zero boundary data".into(),
        });
    }
    let final_max = match &run.data {
        RunData::Radial(s) => s.last().map(|p| p.max_abs()),
        RunData::Grid(s) => s.last().map(|f| f.max_abs()),
    };
    if final_max == Some(0.0) {
        return Err(ReportError::NotApplicable {
            target: Target::Giant,
            reason: "the run is identically zero".into(),
        });
    }
    let hom = cfg.homogeneity();
    let exact_g = match ball_radius(cfg) {
        Some(r0) => {
            let g = Giant::new(std::sync::Arc::new(GiantProfile::build(hom, DEFAULT_GIANT_NODES)?), r0, 0.0)?;
            let c = (hom.h() - 1.0).powf(1.0 / (hom.h() - 1.0));
            Some(move |r: f64| c * g.spatial_radial(r))
        }
        None => None,
    };
    Ok(match &run.data {
        RunData::Radial(s) => {
            let estimate = extract(s, cfg).map_err(wrap)?;
            let last = s.last().expect("non-empty");
            let samples = RadialProfile::new(last.r_max(), estimate.g.clone(), last.time(), OuterBoundary::Dirichlet(0.0))
                .expect("valid profile");
            let exact = exact_g.map(|f| samples.radii().map(f).collect());
            GiantComparison {
                estimate,
                exact,
                samples: GiantSamples::Radial(samples),
            }
        }
        RunData::Grid(s) => {
            let estimate = extract(s, cfg).map_err(wrap)?;
            let last = s.last().expect("non-empty");
            let samples = Field::new(last.grid().clone(), estimate.g.clone(), last.time()).expect("finite");
            let exact = exact_g.map(|f| {
                (0..samples.grid().len())
                    .map(|i| match samples.grid().kind(i) {
                        NodeKind::Exterior => 0.0,
                        _ => f(samples.radius_at(i)),
                    })
                    .collect()
            });
            GiantComparison {
                estimate,
                exact,
                samples: GiantSamples::Grid(samples),
            }
        }
    })
}

fn sup_diff<S: Snapshot + ?Sized>(s: &S, a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .enumerate()
        .filter(|(i, _)| s.is_active(*i))
        .map(|(_, (x, y))| (x - y).abs())
        .fold(0.0, f64::max)
}

fn evaluate_on<S: Snapshot>(run: &Run, snaps: &[S], target: Target) -> Result<Vec<Check>, ReportError> {
    let cfg = &run.config;
    let hom = cfg.homogeneity();
    let tol = &cfg.tolerances;
    let window = (tol.fit_window[0], tol.fit_window[1]);
    let wrap = |source| ReportError::Asymptotics { target, source };
    let cauchy_only = || {
        if cfg.problem.kind != ProblemKind::Cauchy {
            return Err(ReportError::NotApplicable {
                target,
                reason: "needs a Cauchy run".into(),
            });
        }
        Ok(())
    };
    Ok(match target {
        Target::CauchyDecay => {
            cauchy_only()?;
            let series = series_of("max|u|", snaps, |s| s.max_abs()).map_err(wrap)?;
            let fit = fit_decay_exponent(&series, window).map_err(wrap)?;
            vec![Check::new(target, "max-decay-exponent", fit.exponent, -hom.cauchy_rate(), tol.decay_exponent, Rule::Within).window(window)]
        }
        Target::SupportRate => {
            cauchy_only()?;
            let th = cfg.diagnostics.support_threshold;
            let series = series_of("support", snaps, |s| support_radius(s, th)).map_err(wrap)?;
            let fit = fit_decay_exponent(&series, window).map_err(wrap)?;
            vec![Check::new(target, "support-exponent", fit.exponent, hom.cauchy_rate(), tol.support_exponent, Rule::Within).window(window)]
        }
        Target::BarenblattGap => {
            cauchy_only()?;
            let mut checks = Vec::new();
            let mut gaps = Vec::new();
            for &t in &tol.gap_times {
                let s = snapshot_at(snaps, t).ok_or(ReportError::MissingSnapshot { target, t })?;
                let fit = fit_barenblatt(s, &hom).map_err(wrap)?;
                checks.push(Check::new(target, format!("relative-gap@t={t}"), fit.relative_gap, f64::NAN, f64::NAN, Rule::Info));
                checks.push(Check::new(target, format!("displayed-gap@t={t}"), fit.displayed_gap, f64::NAN, f64::NAN, Rule::Info));
                checks.push(Check::new(target, format!("r-star@t={t}"), fit.r_star, f64::NAN, f64::NAN, Rule::Info));
                gaps.push(fit.relative_gap);
            }
            let worst_ratio = gaps.windows(2).map(|w| w[1] / w[0]).fold(0.0, f64::max);
            checks.push(Check::new(target, "gap-ratio-max", worst_ratio, 1.0, f64::NAN, Rule::Below));
            checks
        }
        Target::DirichletDecay => {
            if cfg.problem.kind == ProblemKind::Cauchy {
                return Err(ReportError::NotApplicable {
                    target,
                    reason: "needs a bounded domain".into(),
                });
            }
            let sh = shifted(snaps, cfg.time.t0);
            let series = series_of("max|u|", &sh, |s| s.max_abs()).map_err(wrap)?;
            let fit = fit_decay_exponent(&series, window).map_err(wrap)?;
            vec![Check::new(target, "max-decay-exponent", fit.exponent, -hom.dirichlet_rate(), tol.decay_exponent, Rule::Within).window(window)]
        }
        Target::Giant => {
            let cmp = giant_comparison(run)?;
            let mut checks = vec![Check::new(
                target,
                "stabilization",
                cmp.estimate.stabilization,
                f64::NAN,
                tol.stabilization,
                Rule::AtMost,
            )];
            let last = snaps.last().expect("non-empty");
            if let Some(exact) = &cmp.exact {
                checks.push(Check::new(
                    target,
                    "sup-gap-to-exact",
                    sup_diff(last, &cmp.estimate.g, exact),
                    0.0,
                    tol.giant_gap,
                    Rule::AtMost,
                ));
            }
            // positive on the inner half of the domain
            let r_in = ball_radius(cfg).unwrap_or(f64::INFINITY) * 0.5;
            let min_inner = cmp
                .estimate
                .g
                .iter()
                .enumerate()
                .filter(|(i, _)| last.is_active(*i) && last.radius_at(*i) <= r_in)
                .map(|(_, v)| *v)
                .fold(f64::INFINITY, f64::min);
            checks.push(Check::new(target, "min-inner-half", min_inner, 0.0, f64::NAN, Rule::Info));
            checks
        }
        Target::EigenResidual => {
            let cmp = giant_comparison(run)?;
            let opts = tol.eigen_options();
            let res = match &cmp.samples {
                GiantSamples::Radial(p) => eigen_residual_radial(p, &hom, &opts),
                GiantSamples::Grid(f) => eigen_residual(f, &hom, &opts),
            };
            vec![
                Check::new(target, "sup-residual", res.sup, 0.0, tol.eigen_extracted, Rule::AtMost),
                Check::new(target, "admissible-nodes", res.admissible as f64, f64::NAN, f64::NAN, Rule::Info),
            ]
        }
        Target::BenilanCrandall => {
            let sh = shifted(snaps, cfg.time.t0);
            let r = benilan_crandall_check(&sh, &hom).map_err(wrap)?;
            vec![Check::new(target, "worst-violation", r.worst, 0.0, tol.bc_violation, Rule::AtMost)]
        }
        Target::BcMonotonicity => {
            let sh = shifted(snaps, cfg.time.t0);
            let worst = bc_monotonicity(&sh, &hom).map_err(wrap)?;
            vec![Check::new(target, "worst-decrease", worst, 0.0, tol.bc_monotonicity, Rule::AtMost)]
        }
        Target::OracleError => {
            let bound = match cfg.problem.solver {
                SolverKind::Radial => tol.radial_error,
                SolverKind::Grid => tol.grid_error,
            };
            match run.oracle_error {
                Some(e) => vec![Check::new(target, "max-error", e, 0.0, bound, Rule::AtMost)],
                None => {
                    return Err(ReportError::NotApplicable {
                        target,
                        reason: "the run has no exact oracle".into(),
                    })
                }
            }
        }
    })
}

pub fn evaluate(run: &Run, target: Target) -> Result<Vec<Check>, ReportError> {
    match &run.data {
        RunData::Radial(s) => evaluate_on(run, s, target),
        RunData::Grid(s) => evaluate_on(run, s, target),
    }
}

/// Writes `quantity, window, measured, expected, tolerance, rule, pass`.
pub fn write_report_csv<W: Write>(checks: &[Check], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["target", "quantity", "window_lo", "window_hi", "measured", "expected", "tolerance", "rule", "pass"])?;
    let num = |v: f64| if v.is_nan() { String::new() } else { v.to_string() };
    for c in checks {
        let (lo, hi) = c.window.map_or((String::new(), String::new()), |(a, b)| (num(a), num(b)));
        let rule = serde_json::to_value(c.rule).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        w.write_record([
            c.target.name().to_string(),
            c.quantity.clone(),
            lo,
            hi,
            num(c.measured),
            num(c.expected),
            num(c.tolerance),
            rule,
            if c.passed { "PASS".into() } else { "FAIL".into() },
        ])?;
    }
    w.flush()?;
    Ok(())
}

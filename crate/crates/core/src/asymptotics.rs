//! Large-time measurements on solver output: decay exponents, support
//! growth, rescalings, Barenblatt fits, giant extraction, eigenvalue
//! residuals and the homogeneity (Benilan-Crandall) estimates.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{Barenblatt, ExactError};
use crate::grid::{degenerate_operator_at, Field, NodeKind};
use crate::operator::Homogeneity;
use crate::radial::{OuterBoundary, RadialProfile};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AsymptoticsError {
    #[error("series {name}: time {t} does not increase past {previous}")]
    NotIncreasing { name: String, t: f64, previous: f64 },
    #[error("series {name}: non-finite value at t = {t}")]
    NonFinite { name: String, t: f64 },
    #[error("window [{lo}, {hi}] holds {samples} samples spanning {decades:.3} decades; need at least 8 over one decade")]
    WindowTooSmall {
        lo: f64,
        hi: f64,
        samples: usize,
        decades: f64,
    },
    #[error("non-positive value {value} at t = {t} in the fit window")]
    NonPositive { t: f64, value: f64 },
    #[error("field is identically zero")]
    EmptyField,
    #[error("time {t} lies outside the run [{first}, {last}]")]
    OutsideRun { t: f64, first: f64, last: f64 },
    #[error("snapshots have different layouts ({a} vs {b} samples)")]
    LayoutMismatch { a: usize, b: usize },
    #[error("shell of radius {radius} leaves the grid")]
    ShellOutsideGrid { radius: f64 },
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("need at least {needed} snapshots, got {got}")]
    TooFewSnapshots { needed: usize, got: usize },
    #[error(transparent)]
    Exact(#[from] ExactError),
}

/// Ordered samples `(t_k, value_k)` of one scalar quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub name: String,
    pub run_id: String,
    t: Vec<f64>,
    v: Vec<f64>,
}

impl TimeSeries {
    pub fn new(name: impl Into<String>, run_id: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            run_id: run_id.into(),
            t: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn from_pairs(
        name: impl Into<String>,
        pairs: impl IntoIterator<Item = (f64, f64)>,
    ) -> Result<Self, AsymptoticsError> {
        let mut s = Self::new(name, "");
        for (t, v) in pairs {
            s.push(t, v)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, t: f64, v: f64) -> Result<(), AsymptoticsError> {
        if !(t.is_finite() && v.is_finite()) {
            return Err(AsymptoticsError::NonFinite {
                name: self.name.clone(),
                t,
            });
        }
        if let Some(&previous) = self.t.last() {
            if t <= previous {
                return Err(AsymptoticsError::NotIncreasing {
                    name: self.name.clone(),
                    t,
                    previous,
                });
            }
        }
        self.t.push(t);
        self.v.push(v);
        Ok(())
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Least-squares power law `value ~ exp(intercept) t^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub exponent: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    /// Euclidean norm of the log-space residuals.
    pub residual_norm: f64,
    pub samples: usize,
}

pub fn fit_decay_exponent(series: &TimeSeries, window: (f64, f64)) -> Result<RateFit, AsymptoticsError> {
    let (lo, hi) = window;
    let picked: Vec<(f64, f64)> = series
        .t
        .iter()
        .zip(&series.v)
        .filter(|(t, _)| **t >= lo && **t <= hi)
        .map(|(t, v)| (*t, *v))
        .collect();
    let span = match (picked.first(), picked.last()) {
        (Some(a), Some(b)) if a.0 > 0.0 => (b.0 / a.0).log10(),
        _ => 0.0,
    };
    if picked.len() < 8 || span < 1.0 - 1e-12 {
        return Err(AsymptoticsError::WindowTooSmall {
            lo,
            hi,
            samples: picked.len(),
            decades: span,
        });
    }
    if let Some(&(t, value)) = picked.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(AsymptoticsError::NonPositive { t, value });
    }
    let n = picked.len() as f64;
    let xs: Vec<f64> = picked.iter().map(|(t, _)| t.ln()).collect();
    let ys: Vec<f64> = picked.iter().map(|(_, v)| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let residual_norm = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - exponent * x).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(RateFit {
        exponent,
        intercept,
        window,
        residual_norm,
        samples: picked.len(),
    })
}

/// A snapshot of a solver state: values with the distance of each sample
/// from the origin.
pub trait Snapshot {
    fn time(&self) -> f64;
    fn values(&self) -> &[f64];
    fn radius_at(&self, i: usize) -> f64;
    /// False for samples outside the domain.
    fn is_active(&self, i: usize) -> bool;

    fn max_abs(&self) -> f64 {
        self.values()
            .iter()
            .enumerate()
            .filter(|(i, _)| self.is_active(*i))
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max)
    }
}

impl Snapshot for RadialProfile {
    fn time(&self) -> f64 {
        RadialProfile::time(self)
    }
    fn values(&self) -> &[f64] {
        RadialProfile::values(self)
    }
    fn radius_at(&self, i: usize) -> f64 {
        self.radius(i)
    }
    fn is_active(&self, _: usize) -> bool {
        true
    }
}

impl Snapshot for Field {
    fn time(&self) -> f64 {
        Field::time(self)
    }
    fn values(&self) -> &[f64] {
        Field::values(self)
    }
    fn radius_at(&self, i: usize) -> f64 {
        let g = self.grid();
        g.coords(i)[..g.dim()].iter().map(|x| x * x).sum::<f64>().sqrt()
    }
    fn is_active(&self, i: usize) -> bool {
        self.grid().kind(i) != NodeKind::Exterior
    }
}

pub const DEFAULT_SUPPORT_THRESHOLD: f64 = 1e-10;

/// Largest `|x|` among samples above `threshold`; 0 for an empty support.
pub fn support_radius<S: Snapshot + ?Sized>(snapshot: &S, threshold: f64) -> f64 {
    snapshot
        .values()
        .iter()
        .enumerate()
        .filter(|(i, v)| snapshot.is_active(*i) && **v > threshold)
        .map(|(i, _)| snapshot.radius_at(i))
        .fold(0.0, f64::max)
}

/// Series of `quantity` over a run.
pub fn series_of<S: Snapshot>(
    name: &str,
    run: &[S],
    quantity: impl Fn(&S) -> f64,
) -> Result<TimeSeries, AsymptoticsError> {
    TimeSeries::from_pairs(name, run.iter().map(|s| (s.time(), quantity(s))))
}

/// `u^lambda(x,t) = lambda^(1/(2h)) u(lambda^(1/(2h)) x, lambda t)` as an
/// evaluation wrapper.
#[derive(Debug, Clone, Copy)]
pub struct CauchyRescaled<F> {
    inner: F,
    lambda: f64,
    k: f64,
}

pub fn rescale_cauchy<F: Fn(&[f64], f64) -> f64>(inner: F, lambda: f64, hom: &Homogeneity) -> CauchyRescaled<F> {
    CauchyRescaled {
        inner,
        lambda,
        k: hom.cauchy_rate(),
    }
}

impl<F: Fn(&[f64], f64) -> f64> CauchyRescaled<F> {
    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        let s = self.lambda.powf(self.k);
        let y: Vec<f64> = x.iter().map(|v| s * v).collect();
        s * (self.inner)(&y, self.lambda * t)
    }

    /// Rescales again by `mu`; equals rescaling once by `lambda mu`.
    pub fn then(self, mu: f64) -> CauchyRescaled<F> {
        CauchyRescaled {
            inner: self.inner,
            lambda: self.lambda * mu,
            k: self.k,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// The sampled rescaling: a profile of `u` at time `T` becomes a profile
/// of `u^lambda` at time `T / lambda` on the radial grid scaled by
/// `lambda^(-1/(2h))`.
pub fn rescale_radial_profile(
    profile: &RadialProfile,
    lambda: f64,
    hom: &Homogeneity,
) -> Result<RadialProfile, AsymptoticsError> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(AsymptoticsError::InvalidParameter {
            name: "lambda",
            value: lambda,
        });
    }
    let s = lambda.powf(hom.cauchy_rate());
    let outer = match profile.outer() {
        OuterBoundary::Dirichlet(g) => OuterBoundary::Dirichlet(s * g),
        other => other,
    };
    RadialProfile::new(
        profile.r_max() / s,
        profile.values().iter().map(|v| s * v).collect(),
        profile.time() / lambda,
        outer,
    )
    .map_err(|_| AsymptoticsError::InvalidParameter {
        name: "lambda",
        value: lambda,
    })
}

/// Best-fit Barenblatt at the snapshot time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarenblattFit {
    pub r_star: f64,
    pub t: f64,
    /// `sup |u - B_{R*}|` over the samples.
    pub sup_gap: f64,
    /// `t^(1/(2h)) sup_gap`, the gap relative to the decay scale.
    pub relative_gap: f64,
    /// `t^(-1/(2h)) sup_gap`, the alternative normalization.
    pub displayed_gap: f64,
}

fn sup_gap<S: Snapshot + ?Sized>(snapshot: &S, b: &Barenblatt) -> f64 {
    let t = snapshot.time();
    snapshot
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| snapshot.is_active(*i))
        .map(|(i, v)| (v - b.eval_radial(snapshot.radius_at(i), t).unwrap_or(f64::NAN)).abs())
        .fold(0.0, f64::max)
}

/// Golden-section minimization of `sup |u - B_R|` over
/// `R in [R_s/2, 2 R_s]` with `R_s = support t^(-1/(2h))`.
pub fn fit_barenblatt<S: Snapshot + ?Sized>(snapshot: &S, hom: &Homogeneity) -> Result<BarenblattFit, AsymptoticsError> {
    let t = snapshot.time();
    if !(t > 0.0) {
        return Err(ExactError::OutsideTimeDomain {
            t,
            bound: 0.0,
            family: "barenblatt",
        }
        .into());
    }
    let support = support_radius(snapshot, DEFAULT_SUPPORT_THRESHOLD);
    if support == 0.0 {
        return Err(AsymptoticsError::EmptyField);
    }
    let scale = t.powf(hom.cauchy_rate());
    let r_s = support / scale;
    let gap = |r: f64| sup_gap(snapshot, &Barenblatt::new(r, *hom).expect("positive radius"));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.5 * r_s, 2.0 * r_s);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (gap(c), gap(d));
    while b - a > 1e-13 * b {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = gap(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = gap(d);
        }
    }
    let (r_star, sup) = if fc <= fd { (c, fc) } else { (d, fd) };
    Ok(BarenblattFit {
        r_star,
        t,
        sup_gap: sup,
        relative_gap: scale * sup,
        displayed_gap: sup / scale,
    })
}

/// Shell directions used by [`aleksandrov_gap`].
pub const SHELL_DIRECTIONS: usize = 64;

fn shell_directions(dim: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..SHELL_DIRECTIONS)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / SHELL_DIRECTIONS as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => {
            // Fibonacci lattice on the sphere.
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..SHELL_DIRECTIONS)
                .map(|k| {
                    let z = 1.0 - (2 * k + 1) as f64 / SHELL_DIRECTIONS as f64;
                    let rho = (1.0 - z * z).sqrt();
                    let a = golden * k as f64;
                    vec![rho * a.cos(), rho * a.sin(), z]
                })
                .collect()
        }
    }
}

/// `max_{|x| = r + 2 R_data} u - inf_{|x| = r} u` by interpolation on
/// sampled shell directions. Non-positive for exact solutions whose data
/// are supported in `B_{R_data}`.
pub fn aleksandrov_gap(field: &Field, r: f64, r_data: f64) -> Result<f64, AsymptoticsError> {
    if !(r > r_data && r_data >= 0.0) {
        return Err(AsymptoticsError::InvalidParameter { name: "r", value: r });
    }
    let dirs = shell_directions(field.grid().dim());
    let on_shell = |radius: f64| -> Result<Vec<f64>, AsymptoticsError> {
        dirs.iter()
            .map(|e| {
                let x: Vec<f64> = e.iter().map(|c| radius * c).collect();
                field
                    .interpolate(&x)
                    .ok_or(AsymptoticsError::ShellOutsideGrid { radius })
            })
            .collect()
    };
    let outer = on_shell(r + 2.0 * r_data)?;
    let inner = on_shell(r)?;
    let max_outer = outer.into_iter().fold(f64::NEG_INFINITY, f64::max);
    let min_inner = inner.into_iter().fold(f64::INFINITY, f64::min);
    Ok(max_outer - min_inner)
}

/// One rescaled Dirichlet profile `v(., s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VProfile {
    pub s: f64,
    pub values: Vec<f64>,
}

/// `v(x,s) = (h-1)^(1/(h-1)) e^s u(x, e^((h-1)s))` for each `s`. Snapshot
/// times are measured from the initial time; values between snapshots are
/// interpolated linearly in `t`.
pub fn dirichlet_rescale<S: Snapshot>(run: &[S], s_values: &[f64], hom: &Homogeneity) -> Result<Vec<VProfile>, AsymptoticsError> {
    let (first, last) = match (run.first(), run.last()) {
        (Some(a), Some(b)) => (a.time(), b.time()),
        _ => return Err(AsymptoticsError::TooFewSnapshots { needed: 1, got: 0 }),
    };
    let h = hom.h();
    let constant = (h - 1.0).powf(1.0 / (h - 1.0));
    let len = run[0].values().len();
    if let Some(s) = run.iter().find(|s| s.values().len() != len) {
        return Err(AsymptoticsError::LayoutMismatch {
            a: len,
            b: s.values().len(),
        });
    }
    s_values
        .iter()
        .map(|&s| {
            let t = ((h - 1.0) * s).exp();
            let tol = 1e-12 * t;
            if t < first - tol || t > last + tol {
                return Err(AsymptoticsError::OutsideRun { t, first, last });
            }
            let k = run.partition_point(|snap| snap.time() < t - tol).min(run.len() - 1);
            let factor = constant * s.exp();
            let values = if (run[k].time() - t).abs() <= tol || k == 0 {
                run[k].values().iter().map(|u| factor * u).collect()
            } else {
                let (a, b) = (&run[k - 1], &run[k]);
                let w = (t - a.time()) / (b.time() - a.time());
                a.values()
                    .iter()
                    .zip(b.values())
                    .map(|(x, y)| factor * ((1.0 - w) * x + w * y))
                    .collect()
            };
            Ok(VProfile { s, values })
        })
        .collect()
}

/// Large-time limit `G` of the rescaled profiles and `F = (h-1)^(-1/(h-1)) G`.
#[derive(Debug, Clone, PartialEq)]
pub struct GiantEstimate {
    pub g: Vec<f64>,
    pub f: Vec<f64>,
    pub s: f64,
    /// `sup |v(s) - v(s - window)|`.
    pub stabilization: f64,
    pub converged: bool,
}

pub const DEFAULT_STABILIZATION_TOL: f64 = 1e-6;

/// Takes the last profile as `G`; stabilization compares it with the
/// profile closest to `s - window`.
pub fn extract_giant(
    series: &[VProfile],
    hom: &Homogeneity,
    window: f64,
    tol: f64,
) -> Result<GiantEstimate, AsymptoticsError> {
    if series.len() < 2 {
        return Err(AsymptoticsError::TooFewSnapshots {
            needed: 2,
            got: series.len(),
        });
    }
    let last = series.last().expect("non-empty");
    let target = last.s - window;
    let earlier = series[..series.len() - 1]
        .iter()
        .min_by(|a, b| (a.s - target).abs().total_cmp(&(b.s - target).abs()))
        .expect("non-empty");
    let stabilization = last
        .values
        .iter()
        .zip(&earlier.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let h = hom.h();
    let scale = (h - 1.0).powf(-1.0 / (h - 1.0));
    Ok(GiantEstimate {
        g: last.values.clone(),
        f: last.values.iter().map(|v| scale * v).collect(),
        s: last.s,
        stabilization,
        converged: stabilization <= tol,
    })
}

/// Exclusion rules for [`eigen_residual`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    /// Nodes with `|DG| <= gradient_factor sup G / diam` are excluded.
    pub gradient_factor: f64,
    /// Minimum distance from the boundary, in cells.
    pub boundary_cells: f64,
    /// Minimum distance from a critical point of `G`, in cells.
    pub critical_cells: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            gradient_factor: 1e-6,
            boundary_cells: 2.0,
            critical_cells: 8.0,
        }
    }
}

/// `Δ∞ʰG + G` at admissible nodes, `None` elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResidual {
    pub residuals: Vec<Option<f64>>,
    pub sup: f64,
    pub admissible: usize,
}

impl EigenResidual {
    fn from(residuals: Vec<Option<f64>>) -> Self {
        let sup = residuals.iter().flatten().map(|r| r.abs()).fold(0.0, f64::max);
        let admissible = residuals.iter().flatten().count();
        Self {
            residuals,
            sup,
            admissible,
        }
    }
}

/// Eigenvalue residual on a masked grid.
pub fn eigen_residual(g: &Field, hom: &Homogeneity, opts: &EigenOptions) -> EigenResidual {
    let grid = g.grid();
    let v = g.values();
    let d = grid.dim();
    let dx = grid.min_spacing();
    let sup = g.max_abs();
    if sup == 0.0 {
        return EigenResidual::from(
            (0..grid.len())
                .map(|i| (grid.kind(i) == NodeKind::Interior).then_some(0.0))
                .collect(),
        );
    }
    let lower = grid.lower();
    let upper = grid.upper();
    let diam = lower.iter().zip(&upper).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt();
    let threshold = opts.gradient_factor * sup / diam;
    let point = |i: usize| grid.coords(i);
    let dist = |a: &[f64; 3], b: &[f64; 3]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();

    let mut critical = Vec::new();
    for &i in grid.interior() {
        let mut grad_sq = 0.0;
        let mut extremal = true;
        for k in 0..d {
            let s = grid.strides()[k];
            let (fwd, bwd) = (v[i + s] - v[i], v[i] - v[i - s]);
            grad_sq += ((fwd + bwd) / (2.0 * grid.spacing()[k])).powi(2);
            extremal &= fwd * bwd <= 0.0;
        }
        if grad_sq.sqrt() <= threshold || extremal {
            critical.push(point(i));
        }
    }
    let edges: Vec<[f64; 3]> = (0..grid.len())
        .filter(|&i| grid.kind(i) != NodeKind::Interior)
        .map(point)
        .collect();
    let residuals = (0..grid.len())
        .map(|i| {
            if grid.kind(i) != NodeKind::Interior {
                return None;
            }
            let x = point(i);
            if critical.iter().any(|c| dist(c, &x) < opts.critical_cells * dx) {
                return None;
            }
            if edges.iter().any(|e| dist(e, &x) < opts.boundary_cells * dx) {
                return None;
            }
            Some(degenerate_operator_at(v, grid, i, hom) + v[i])
        })
        .collect();
    EigenResidual::from(residuals)
}

/// Eigenvalue residual `|G_r|^(h-1) G_rr + G` for a cell-centred radial
/// profile. `r = 0` is a critical point by symmetry.
pub fn eigen_residual_radial(g: &RadialProfile, hom: &Homogeneity, opts: &EigenOptions) -> EigenResidual {
    let v = g.values();
    let n = v.len();
    let dr = g.dr();
    let ghost_out = match g.outer() {
        OuterBoundary::Dirichlet(b) => 2.0 * b - v[n - 1],
        OuterBoundary::ZeroFlux => v[n - 1],
    };
    let at = |j: isize| -> f64 {
        if j < 0 {
            v[(-j - 1) as usize]
        } else if j as usize >= n {
            ghost_out
        } else {
            v[j as usize]
        }
    };
    let sup = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if sup == 0.0 {
        return EigenResidual::from(vec![Some(0.0); n]);
    }
    let threshold = opts.gradient_factor * sup / (2.0 * g.r_max());
    let mut critical = vec![0.0];
    for i in 0..n as isize {
        let (fwd, bwd) = (at(i + 1) - at(i), at(i) - at(i - 1));
        if ((fwd + bwd) / (2.0 * dr)).abs() <= threshold || (fwd * bwd <= 0.0 && i > 0) {
            critical.push(g.radius(i as usize));
        }
    }
    let residuals = (0..n)
        .map(|i| {
            let r = g.radius(i);
            if critical.iter().any(|c| (c - r).abs() < opts.critical_cells * dr) {
                return None;
            }
            if g.r_max() - r < opts.boundary_cells * dr {
                return None;
            }
            let j = i as isize;
            let gr = (at(j + 1) - at(j - 1)) / (2.0 * dr);
            let grr = (at(j + 1) - 2.0 * at(j) + at(j - 1)) / (dr * dr);
            Some(hom.diffusivity(gr) * grr + v[i])
        })
        .collect();
    EigenResidual::from(residuals)
}

/// Worst violation of the homogeneity estimate
/// `u(t+tau) - u(t) >= -[1 - (t/(t+tau))^(1/(h-1))] u(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BcReport {
    /// `max (u(t) - u(t+tau)) - [1 - (t/(t+tau))^(1/(h-1))] u(t)`;
    /// non-positive when the estimate holds.
    pub worst: f64,
    pub t: f64,
    pub tau: f64,
    pub sample: usize,
    pub pairs: usize,
}

fn check_layouts<S: Snapshot>(run: &[S]) -> Result<usize, AsymptoticsError> {
    let len = run.first().map_or(0, |s| s.values().len());
    for s in run {
        if s.values().len() != len {
            return Err(AsymptoticsError::LayoutMismatch {
                a: len,
                b: s.values().len(),
            });
        }
    }
    Ok(len)
}

/// Checks every ordered pair of snapshots (times measured from the initial
/// time, so all must be positive).
pub fn benilan_crandall_check<S: Snapshot>(run: &[S], hom: &Homogeneity) -> Result<BcReport, AsymptoticsError> {
    if run.len() < 2 {
        return Err(AsymptoticsError::TooFewSnapshots {
            needed: 2,
            got: run.len(),
        });
    }
    check_layouts(run)?;
    let rate = hom.dirichlet_rate();
    let mut report = BcReport {
        worst: f64::NEG_INFINITY,
        t: 0.0,
        tau: 0.0,
        sample: 0,
        pairs: 0,
    };
    for (a_idx, a) in run.iter().enumerate() {
        if !(a.time() > 0.0) {
            return Err(AsymptoticsError::InvalidParameter {
                name: "t",
                value: a.time(),
            });
        }
        for b in &run[a_idx + 1..] {
            let f = 1.0 - (a.time() / b.time()).powf(rate);
            report.pairs += 1;
            for (i, (u, w)) in a.values().iter().zip(b.values()).enumerate() {
                if !a.is_active(i) {
                    continue;
                }
                let violation = (u - w) - f * u;
                if violation > report.worst {
                    report.worst = violation;
                    report.t = a.time();
                    report.tau = b.time() - a.time();
                    report.sample = i;
                }
            }
        }
    }
    Ok(report)
}

/// Largest decrease of `t^(1/(h-1)) u(x,t)` between consecutive
/// snapshots; non-positive when the rescaled solution is nondecreasing.
pub fn bc_monotonicity<S: Snapshot>(run: &[S], hom: &Homogeneity) -> Result<f64, AsymptoticsError> {
    if run.len() < 2 {
        return Err(AsymptoticsError::TooFewSnapshots {
            needed: 2,
            got: run.len(),
        });
    }
    check_layouts(run)?;
    let rate = hom.dirichlet_rate();
    let mut worst = f64::NEG_INFINITY;
    for pair in run.windows(2) {
        let (fa, fb) = (pair[0].time().powf(rate), pair[1].time().powf(rate));
        for (i, (u, w)) in pair[0].values().iter().zip(pair[1].values()).enumerate() {
            if pair[0].is_active(i) {
                worst = worst.max(fa * u - fb * w);
            }
        }
    }
    Ok(worst)
}

//! Conservative explicit solver for the radial reduction
//! `v_t = (1/h) (|v_r|^(h-1) v_r)_r`.
//!
//! For radial solutions the operator only sees the radial direction, so
//! there is no `(d-1)/r` curvature term and this one-dimensional form is
//! exact in every dimension.

use std::io::Write;

use thiserror::Error;

use crate::operator::Homogeneity;

pub const MIN_CELLS: usize = 16;
pub const DEFAULT_THETA: f64 = 0.4;
pub const DEFAULT_DIFFUSIVITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RadialError {
    #[error("radial grid needs at least {MIN_CELLS} cells, got {0}")]
    TooFewCells(usize),
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("non-finite initial value at cell {0}")]
    NonFiniteInitial(usize),
    #[error("time step {dt:e} exceeds the stability limit {limit:e}")]
    DtTooLarge { dt: f64, limit: f64 },
    #[error("non-finite value at cell {cell} after step {step}")]
    NonFinite { step: u64, cell: usize },
    #[error("cannot evolve backwards from t = {from} to t = {to}")]
    Backwards { from: f64, to: f64 },
}

/// Condition at `r = r_max`; `r = 0` is always a symmetry point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OuterBoundary {
    ZeroFlux,
    /// Fixed value imposed on the outer face.
    Dirichlet(f64),
}

/// Cell-centred samples `v_i = v((i + 1/2) dr)` on `[0, r_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    r_max: f64,
    dr: f64,
    values: Vec<f64>,
    t: f64,
    outer: OuterBoundary,
    steps: u64,
}

impl RadialProfile {
    pub fn new(r_max: f64, values: Vec<f64>, t: f64, outer: OuterBoundary) -> Result<Self, RadialError> {
        if values.len() < MIN_CELLS {
            return Err(RadialError::TooFewCells(values.len()));
        }
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(RadialError::InvalidParameter {
                name: "r_max",
                value: r_max,
            });
        }
        if !t.is_finite() {
            return Err(RadialError::InvalidParameter { name: "t", value: t });
        }
        if let OuterBoundary::Dirichlet(g) = outer {
            if !g.is_finite() {
                return Err(RadialError::InvalidParameter {
                    name: "dirichlet",
                    value: g,
                });
            }
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(RadialError::NonFiniteInitial(i));
        }
        Ok(Self {
            r_max,
            dr: r_max / values.len() as f64,
            values,
            t,
            outer,
            steps: 0,
        })
    }

    /// Samples `f` at the cell centres.
    pub fn from_fn(
        r_max: f64,
        n: usize,
        t: f64,
        outer: OuterBoundary,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self, RadialError> {
        let dr = r_max / n as f64;
        let values = (0..n).map(|i| f((i as f64 + 0.5) * dr)).collect();
        Self::new(r_max, values, t, outer)
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn dr(&self) -> f64 {
        self.dr
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn outer(&self) -> OuterBoundary {
        self.outer
    }

    /// Steps taken since construction.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn radius(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dr
    }

    pub fn radii(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(|i| self.radius(i))
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `sum v_i dr`, the quantity conserved under zero-flux boundaries.
    pub fn mass(&self) -> f64 {
        crate::quadrature::neumaier_sum(self.values.iter().copied()) * self.dr
    }

    /// Centre of the last cell whose value exceeds `threshold`, or 0.
    pub fn support_radius(&self, threshold: f64) -> f64 {
        self.values
            .iter()
            .rposition(|&v| v > threshold)
            .map_or(0.0, |i| self.radius(i))
    }

    /// Piecewise-linear interpolation between cell centres, constant
    /// extension inside the first half cell, boundary value outside.
    pub fn interpolate(&self, r: f64) -> f64 {
        let r = r.abs();
        let x = r / self.dr - 0.5;
        let n = self.values.len();
        if x <= 0.0 {
            return self.values[0];
        }
        let i = x.floor() as usize;
        if i + 1 < n {
            let w = x - i as f64;
            return (1.0 - w) * self.values[i] + w * self.values[i + 1];
        }
        let last = self.values[n - 1];
        match self.outer {
            OuterBoundary::ZeroFlux => last,
            OuterBoundary::Dirichlet(g) => {
                if r >= self.r_max {
                    g
                } else {
                    let w = (r - self.radius(n - 1)) / (0.5 * self.dr);
                    (1.0 - w) * last + w * g
                }
            }
        }
    }

    /// Appends `(t, r, v)` rows.
    pub fn write_snapshot<W: Write>(&self, out: &mut csv::Writer<W>) -> csv::Result<()> {
        for (r, v) in self.radii().zip(&self.values) {
            out.serialize((self.t, r, v))?;
        }
        Ok(())
    }

    pub fn diagnostics(&self, threshold: f64) -> RadialDiagnostics {
        RadialDiagnostics {
            t: self.t,
            max_v: self.max_value(),
            support_radius: self.support_radius(threshold),
            mass: self.mass(),
        }
    }
}

/// One diagnostics row.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RadialDiagnostics {
    pub t: f64,
    pub max_v: f64,
    pub support_radius: f64,
    pub mass: f64,
}

/// Explicit Euler stepping of the conservative radial scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialSolver {
    hom: Homogeneity,
    theta: f64,
    floor: f64,
}

/// Summary returned by [`RadialSolver::evolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveStats {
    pub steps: u64,
    pub min_dt: f64,
    pub max_dt: f64,
}

impl RadialSolver {
    pub fn new(hom: Homogeneity) -> Self {
        Self {
            hom,
            theta: DEFAULT_THETA,
            floor: DEFAULT_DIFFUSIVITY_FLOOR,
        }
    }

    pub fn with_theta(mut self, theta: f64) -> Result<Self, RadialError> {
        if !(theta > 0.0 && theta < 0.5) {
            // 1/2 is the largest value the scheme stays monotone for.
            return Err(RadialError::InvalidParameter {
                name: "theta",
                value: theta,
            });
        }
        self.theta = theta;
        Ok(self)
    }

    pub fn homogeneity(&self) -> &Homogeneity {
        &self.hom
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Largest effective face diffusivity. The Dirichlet face sits half a
    /// cell from the last centre, so its slope is weighted by 2.
    fn max_face_diffusivity(&self, state: &RadialProfile) -> f64 {
        let v = &state.values;
        let inv_dr = 1.0 / state.dr;
        let mut max_q = 0.0f64;
        for w in v.windows(2) {
            max_q = max_q.max((w[1] - w[0]).abs());
        }
        let mut d = self.hom.diffusivity(max_q * inv_dr);
        if let OuterBoundary::Dirichlet(g) = state.outer {
            let q = 2.0 * (g - v[v.len() - 1]) * inv_dr;
            d = d.max(2.0 * self.hom.diffusivity(q));
        }
        d
    }

    /// `theta dr^2 / max(face diffusivity, floor)`.
    pub fn cfl_dt(&self, state: &RadialProfile) -> f64 {
        self.theta * state.dr * state.dr / self.max_face_diffusivity(state).max(self.floor)
    }

    /// One explicit step of size `dt`, rejected if it exceeds the limit
    /// for the current state.
    pub fn step(&self, state: &mut RadialProfile, dt: f64) -> Result<(), RadialError> {
        let limit = self.cfl_dt(state);
        if !(dt >= 0.0 && dt <= limit * (1.0 + 1e-12)) {
            return Err(RadialError::DtTooLarge { dt, limit });
        }
        self.step_unchecked(state, dt)
    }

    fn step_unchecked(&self, state: &mut RadialProfile, dt: f64) -> Result<(), RadialError> {
        let inv_dr = 1.0 / state.dr;
        let ratio = dt * inv_dr;
        let hom = &self.hom;
        let v = &mut state.values;
        let n = v.len();
        let mut left = 0.0;
        for i in 0..n - 1 {
            let right = hom.flux((v[i + 1] - v[i]) * inv_dr);
            v[i] += ratio * (right - left);
            left = right;
        }
        let right = match state.outer {
            OuterBoundary::ZeroFlux => 0.0,
            OuterBoundary::Dirichlet(g) => hom.flux(2.0 * (g - v[n - 1]) * inv_dr),
        };
        v[n - 1] += ratio * (right - left);
        state.t += dt;
        state.steps += 1;
        if let Some(cell) = v.iter().position(|x| !x.is_finite()) {
            return Err(RadialError::NonFinite {
                step: state.steps,
                cell,
            });
        }
        Ok(())
    }

    /// Steps to `t_end` with `dt = min(cfl, time to next stop)`, calling
    /// `observer` whenever the state reaches one of `times` (sorted or
    /// not; values outside `(t, t_end]` are ignored).
    pub fn evolve(
        &self,
        state: &mut RadialProfile,
        t_end: f64,
        times: &[f64],
        mut observer: impl FnMut(&RadialProfile),
    ) -> Result<EvolveStats, RadialError> {
        if !(t_end >= state.t) {
            return Err(RadialError::Backwards {
                from: state.t,
                to: t_end,
            });
        }
        let mut stops: Vec<f64> = times.iter().copied().filter(|&s| s > state.t && s <= t_end).collect();
        stops.sort_by(f64::total_cmp);
        stops.dedup();
        if stops.last() != Some(&t_end) && t_end > state.t {
            stops.push(t_end);
        }
        let observed = |s: f64| times.contains(&s);
        let mut stats = EvolveStats {
            steps: 0,
            min_dt: f64::INFINITY,
            max_dt: 0.0,
        };
        for stop in stops {
            while state.t < stop {
                let remaining = stop - state.t;
                let cfl = self.cfl_dt(state);
                let landing = cfl >= remaining;
                let dt = if landing { remaining } else { cfl };
                self.step_unchecked(state, dt)?;
                if landing {
                    state.t = stop;
                }
                stats.steps += 1;
                stats.min_dt = stats.min_dt.min(dt);
                stats.max_dt = stats.max_dt.max(dt);
            }
            if observed(stop) {
                observer(state);
            }
        }
        Ok(stats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hom(h: f64) -> Homogeneity {
        Homogeneity::new(h).unwrap()
    }

    #[test]
    fn constant_profile_is_steady() {
        let mut p = RadialProfile::from_fn(1.0, 64, 0.0, OuterBoundary::Dirichlet(2.0), |_| 2.0).unwrap();
        let s = RadialSolver::new(hom(3.0));
        let dt = s.cfl_dt(&p);
        s.step(&mut p, dt).unwrap();
        assert!(p.values().iter().all(|&v| v == 2.0));
    }

    #[test]
    fn cfl_examples() {
        let s = RadialSolver::new(hom(3.0));
        let zero = RadialProfile::from_fn(1.0, 100, 0.0, OuterBoundary::ZeroFlux, |_| 0.0).unwrap();
        let dr = zero.dr();
        assert!((s.cfl_dt(&zero) - 0.4 * dr * dr / 1e-12).abs() < 1e-6 * s.cfl_dt(&zero));
        let gentle = RadialProfile::from_fn(1.0, 100, 0.0, OuterBoundary::ZeroFlux, |r| 0.9 * r).unwrap();
        assert!(s.cfl_dt(&gentle) >= 0.4 * dr * dr);

        let s2 = RadialSolver::new(hom(2.0));
        let a = RadialProfile::from_fn(1.0, 100, 0.0, OuterBoundary::ZeroFlux, |r| (3.0 * r).sin()).unwrap();
        let b = RadialProfile::from_fn(1.0, 100, 0.0, OuterBoundary::ZeroFlux, |r| 2.0 * (3.0 * r).sin()).unwrap();
        assert!((s2.cfl_dt(&a) / s2.cfl_dt(&b) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_oversized_steps() {
        let mut p = RadialProfile::from_fn(1.0, 32, 0.0, OuterBoundary::ZeroFlux, |r| 1.0 - r * r).unwrap();
        let s = RadialSolver::new(hom(2.0));
        let limit = s.cfl_dt(&p);
        assert!(matches!(s.step(&mut p, 2.0 * limit), Err(RadialError::DtTooLarge { .. })));
        assert!(RadialProfile::new(1.0, vec![0.0; 8], 0.0, OuterBoundary::ZeroFlux).is_err());
    }

    #[test]
    fn monotone_profiles_stay_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for h in [1.5, 2.0, 3.0, 4.0] {
            let s = RadialSolver::new(hom(h));
            for _ in 0..200 {
                let mut v: Vec<f64> = (0..32).map(|_| rng.gen::<f64>()).collect();
                v.sort_by(|a, b| b.total_cmp(a));
                let mut p = RadialProfile::new(1.0, v, 0.0, OuterBoundary::Dirichlet(0.0)).unwrap();
                let dt = s.cfl_dt(&p);
                s.step(&mut p, dt).unwrap();
                assert!(p.values().windows(2).all(|w| w[1] <= w[0]), "h={h}");
                assert!(p.min_value() >= 0.0);
            }
        }
    }

    #[test]
    fn zero_flux_conserves_mass() {
        let s = RadialSolver::new(hom(2.5));
        let mut p = RadialProfile::from_fn(2.0, 400, 0.0, OuterBoundary::ZeroFlux, |r| {
            (1.0 - r * r).max(0.0) + 0.3 * (-(r - 1.5) * (r - 1.5) * 20.0).exp()
        })
        .unwrap();
        let m0 = p.mass();
        s.evolve(&mut p, 1.0, &[], |_| {}).unwrap();
        assert!((p.mass() - m0).abs() <= 1e-10, "{:e}", p.mass() - m0);
    }

    #[test]
    fn evolve_lands_on_observer_times() {
        let s = RadialSolver::new(hom(3.0));
        let mut p = RadialProfile::from_fn(1.0, 64, 1.0, OuterBoundary::Dirichlet(0.0), |r| 1.0 - r).unwrap();
        let mut seen = Vec::new();
        s.evolve(&mut p, 2.0, &[1.5, 1.25, 3.0], |q| seen.push(q.time())).unwrap();
        assert_eq!(seen, vec![1.25, 1.5]);
        assert_eq!(p.time(), 2.0);
        let before = p.clone();
        s.evolve(&mut p, 2.0, &[], |_| {}).unwrap();
        assert_eq!(p, before);
        assert!(s.evolve(&mut p, 1.0, &[], |_| {}).is_err());
    }

    #[test]
    fn interpolation_and_support() {
        let p = RadialProfile::from_fn(1.0, 100, 0.0, OuterBoundary::Dirichlet(0.0), |r| 1.0 - r).unwrap();
        assert!((p.interpolate(0.333) - 0.667).abs() < 1e-12);
        assert_eq!(p.interpolate(1.0), 0.0);
        assert!((p.support_radius(1e-12) - 0.995).abs() < 1e-12);
        let z = RadialProfile::from_fn(1.0, 16, 0.0, OuterBoundary::ZeroFlux, |_| 0.0).unwrap();
        assert_eq!(z.support_radius(1e-10), 0.0);
    }
}

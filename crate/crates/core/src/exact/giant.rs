//! The separable "friendly giant" `S(x,t) = X_{r0}(x) / (t - t0)^(1/(h-1))`.
//!
//! The radial profile comes from the change of variables
//! `r(s) = kappa * int_0^s sin(sigma)^alpha d sigma` with `X(r(s)) = cos(s)`
//! on `[0, Rbar]`, extended to `[0, inf)` by even reflection about
//! multiples of `Rbar`. It satisfies `|X'|^(h-1) X'' = -X/(h-1)`, i.e. the
//! flux `(1/h)|X'|^(h-1) X'` has derivative `-X/(h-1)`.
//!
//! The scaled profile is `X_r(x) = (2r/Rbar)^p X(Rbar |x| / (2r))` with
//! `p = (h+1)/(h-1)`. Only the positive exponent makes `X_r` satisfy the
//! same ODE for every `r`; the negative one coincides with it only at
//! `r = Rbar/2`. The test `negative_prefactor_exponent_is_not_a_solution`
//! pins this down.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use crate::operator::Homogeneity;
use crate::quadrature::{integrate, neumaier_sum};

use super::{radius_of, ExactError, SingularSet};

/// Minimum table size accepted by [`GiantProfile::build`].
pub const MIN_GIANT_NODES: usize = 64;
/// Table size used when none is given.
pub const DEFAULT_GIANT_NODES: usize = 2049;

// Below this, int_0^s sin^alpha is evaluated from its Taylor series.
const SERIES_CUT: f64 = 1e-3;

/// Tabulated profile `(s_i, r_i, X_i)` on `s in [0, pi]`, graded toward
/// both endpoints.
#[derive(Debug, Clone)]
pub struct GiantProfile {
    hom: Homogeneity,
    rbar: f64,
    quadrature_error: f64,
    s: Vec<f64>,
    r: Vec<f64>,
    x: Vec<f64>,
}

/// `int_0^s sin(sigma)^alpha d sigma` for small `s`.
fn sine_power_series(s: f64, alpha: f64) -> f64 {
    let s2 = s * s;
    let c4 = alpha / 120.0 + alpha * (alpha - 1.0) / 72.0;
    s.powf(1.0 + alpha) * (1.0 / (1.0 + alpha) - alpha / 6.0 * s2 / (3.0 + alpha) + c4 * s2 * s2 / (5.0 + alpha))
}

impl GiantProfile {
    pub fn build(hom: Homogeneity, n_nodes: usize) -> Result<Self, ExactError> {
        if n_nodes < MIN_GIANT_NODES {
            return Err(ExactError::InvalidParameter {
                name: "n_nodes",
                value: n_nodes as f64,
            });
        }
        let kappa = hom.kappa();
        let mut profile = Self {
            hom,
            rbar: 0.0,
            quadrature_error: 0.0,
            s: Vec::with_capacity(n_nodes),
            r: Vec::with_capacity(n_nodes),
            x: Vec::with_capacity(n_nodes),
        };
        let last = (n_nodes - 1) as f64;
        for i in 0..n_nodes {
            let theta = i as f64 / last;
            let s = if i == n_nodes - 1 {
                PI
            } else {
                0.5 * PI * (1.0 - (PI * theta).cos())
            };
            profile.s.push(s);
            profile.x.push(s.cos());
        }

        // Half period from one global integration over [0, pi/2], doubled.
        let (half, half_err) = profile.sine_power_integral(0.0, 0.5 * PI)?;
        let rbar = 2.0 * kappa * half;
        profile.quadrature_error = 2.0 * kappa * half_err;

        let mut pieces = Vec::with_capacity(n_nodes);
        profile.r.push(0.0);
        for i in 1..n_nodes {
            let (piece, err) = profile.sine_power_integral(profile.s[i - 1], profile.s[i])?;
            profile.quadrature_error += kappa * err;
            pieces.push(kappa * piece);
            profile.r.push(neumaier_sum(pieces.iter().copied()));
        }
        let tabulated = *profile.r.last().expect("non-empty");
        let mismatch = (tabulated - rbar).abs();
        if mismatch > 1e-10 * rbar {
            return Err(ExactError::Quadrature(format!(
                "cumulative table ends at {tabulated}, direct half period is {rbar} (mismatch {mismatch:e})"
            )));
        }
        *profile.r.last_mut().expect("non-empty") = rbar;
        profile.rbar = rbar;
        Ok(profile)
    }

    /// `int_a^b sin^alpha` with `0 <= a <= b <= pi`, and its error estimate.
    fn sine_power_integral(&self, a: f64, b: f64) -> Result<(f64, f64), ExactError> {
        let alpha = self.hom.alpha();
        if b <= SERIES_CUT {
            return Ok((sine_power_series(b, alpha) - sine_power_series(a, alpha), 0.0));
        }
        if a >= PI - SERIES_CUT {
            return Ok((sine_power_series(PI - a, alpha) - sine_power_series(PI - b, alpha), 0.0));
        }
        let mut total = 0.0;
        let (mut lo, mut hi) = (a, b);
        if lo < SERIES_CUT {
            total += sine_power_series(SERIES_CUT, alpha) - sine_power_series(lo, alpha);
            lo = SERIES_CUT;
        }
        if hi > PI - SERIES_CUT {
            total += sine_power_series(PI - (PI - SERIES_CUT), alpha) - sine_power_series(PI - hi, alpha);
            hi = PI - SERIES_CUT;
        }
        let q = integrate(|s: f64| s.sin().powf(alpha), lo, hi, 1e-15, 10_000)
            .map_err(|e| ExactError::Quadrature(e.to_string()))?;
        Ok((total + q.value, q.error))
    }

    pub fn homogeneity(&self) -> &Homogeneity {
        &self.hom
    }

    /// Half period `Rbar`: the first zero of `X'` after the origin.
    pub fn rbar(&self) -> f64 {
        self.rbar
    }

    /// Accumulated quadrature error estimate of the table.
    pub fn quadrature_error(&self) -> f64 {
        self.quadrature_error
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn s_nodes(&self) -> &[f64] {
        &self.s
    }

    pub fn r_nodes(&self) -> &[f64] {
        &self.r
    }

    pub fn x_nodes(&self) -> &[f64] {
        &self.x
    }

    /// Inverse of `r(s)` on `[0, Rbar]`: bracket from the table, then
    /// Newton steps safeguarded by bisection.
    pub fn s_of_r(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        if r >= self.rbar {
            return PI;
        }
        let i = self.r.partition_point(|&ri| ri <= r).clamp(1, self.r.len() - 1) - 1;
        let (sa, sb) = (self.s[i], self.s[i + 1]);
        let (ra, rb) = (self.r[i], self.r[i + 1]);
        let kappa = self.hom.kappa();
        let alpha = self.hom.alpha();
        let (mut lo, mut hi) = (sa, sb);
        let mut s = sa + (r - ra) / (rb - ra) * (sb - sa);
        for _ in 0..100 {
            let piece = self.sine_power_integral(sa, s).map(|(v, _)| v).unwrap_or(f64::NAN);
            let f = ra + kappa * piece - r;
            if f > 0.0 {
                hi = s;
            } else {
                lo = s;
            }
            let slope = kappa * s.sin().powf(alpha);
            let mut next = s - f / slope;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            let done = (next - s).abs() <= 4.0 * f64::EPSILON * s.max(1e-300) || hi - lo <= 4.0 * f64::EPSILON * hi;
            s = next;
            if done {
                break;
            }
        }
        s
    }

    /// `X` on `[0, inf)`, `2 Rbar`-periodic and even about multiples of `Rbar`.
    pub fn x_eval(&self, r: f64) -> f64 {
        let (folded, _) = self.fold(r);
        self.s_of_r(folded).cos()
    }

    /// `X'` from the analytic formula `-(1/kappa) sin^(1-alpha)(s(r))`.
    pub fn x_derivative(&self, r: f64) -> f64 {
        let (folded, sign) = self.fold(r);
        let s = self.s_of_r(folded);
        -sign * s.sin().powf(1.0 - self.hom.alpha()) / self.hom.kappa()
    }

    /// Maps `r` to `[0, Rbar]`; the sign records whether the reflection
    /// reversed orientation.
    fn fold(&self, r: f64) -> (f64, f64) {
        let period = 2.0 * self.rbar;
        let rho = r.abs().rem_euclid(period);
        if rho <= self.rbar {
            (rho, 1.0)
        } else {
            (period - rho, -1.0)
        }
    }

    /// `X'` at every table node, analytic.
    pub fn derivative_nodes(&self) -> Vec<f64> {
        let k = self.hom.kappa();
        let e = 1.0 - self.hom.alpha();
        self.s.iter().map(|s| -s.sin().max(0.0).powf(e) / k).collect()
    }

    /// Residual of `d/dr[(1/h)|X'|^(h-1) X'] + X/(h-1)` at each node whose
    /// `s` lies in `[s_margin, pi - s_margin]`, as `(s_i, residual_i)`.
    ///
    /// The flux is differenced with a fourth-order stencil in the uniform
    /// table parameter and divided by the analytic `dr/dtheta`.
    pub fn flux_identity_residuals(&self, s_margin: f64) -> Vec<(f64, f64)> {
        let n = self.s.len();
        let dtheta = 1.0 / (n - 1) as f64;
        let flux: Vec<f64> = self.derivative_nodes().into_iter().map(|d| self.hom.flux(d)).collect();
        let kappa = self.hom.kappa();
        let alpha = self.hom.alpha();
        let inv = 1.0 / (self.hom.h() - 1.0);
        let mut out = Vec::new();
        for i in 2..n.saturating_sub(2) {
            let s = self.s[i];
            if s < s_margin || s > PI - s_margin {
                continue;
            }
            let dflux = (flux[i - 2] - 8.0 * flux[i - 1] + 8.0 * flux[i + 1] - flux[i + 2]) / (12.0 * dtheta);
            let theta = i as f64 * dtheta;
            let ds_dtheta = 0.5 * PI * PI * (PI * theta).sin();
            let dr_dtheta = kappa * s.sin().powf(alpha) * ds_dtheta;
            out.push((s, dflux / dr_dtheta + self.x[i] * inv));
        }
        out
    }

    /// Writes the table as CSV with columns `s,r,X,Xprime`.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["s", "r", "X", "Xprime"])?;
        for (((s, r), x), d) in self.s.iter().zip(&self.r).zip(&self.x).zip(self.derivative_nodes()) {
            w.write_record([s, r, x, &d].map(|v| format!("{v:.17e}")))?;
        }
        w.flush()
    }
}

/// The friendly giant with zero sphere at `|x| = r0`, defined for `t > t0`.
#[derive(Debug, Clone)]
pub struct Giant {
    profile: Arc<GiantProfile>,
    r0: f64,
    t0: f64,
    exponent: f64,
}

impl Giant {
    pub fn new(profile: Arc<GiantProfile>, r0: f64, t0: f64) -> Result<Self, ExactError> {
        let h = profile.homogeneity().h();
        Self::with_prefactor_exponent(profile, r0, t0, (h + 1.0) / (h - 1.0))
    }

    /// Uses `(2 r0 / Rbar)^exponent` as the amplitude prefactor. Only the
    /// default `(h+1)/(h-1)` gives a solution for every `r0`.
    pub fn with_prefactor_exponent(
        profile: Arc<GiantProfile>,
        r0: f64,
        t0: f64,
        exponent: f64,
    ) -> Result<Self, ExactError> {
        if !(r0.is_finite() && r0 > 0.0) {
            return Err(ExactError::InvalidParameter {
                name: "r0",
                value: r0,
            });
        }
        if !t0.is_finite() {
            return Err(ExactError::InvalidParameter {
                name: "t0",
                value: t0,
            });
        }
        Ok(Self {
            profile,
            r0,
            t0,
            exponent,
        })
    }

    pub fn profile(&self) -> &Arc<GiantProfile> {
        &self.profile
    }

    pub fn homogeneity(&self) -> &Homogeneity {
        self.profile.homogeneity()
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    fn stretch(&self) -> f64 {
        2.0 * self.r0 / self.profile.rbar()
    }

    /// The time-independent factor `X_{r0}` at radius `r`.
    pub fn spatial_radial(&self, r: f64) -> f64 {
        let l = self.stretch();
        l.powf(self.exponent) * self.profile.x_eval(r / l)
    }

    /// `d/dr X_{r0}`.
    pub fn spatial_derivative(&self, r: f64) -> f64 {
        let l = self.stretch();
        l.powf(self.exponent - 1.0) * self.profile.x_derivative(r / l)
    }

    pub fn spatial(&self, x: &[f64]) -> f64 {
        self.spatial_radial(radius_of(x))
    }

    fn check_time(&self, t: f64) -> Result<(), ExactError> {
        if t.is_finite() && t > self.t0 {
            Ok(())
        } else {
            Err(ExactError::OutsideTimeDomain {
                t,
                bound: self.t0,
                family: "giant",
            })
        }
    }

    /// `(t - t0)^(-1/(h-1))`.
    pub fn time_factor(&self, t: f64) -> Result<f64, ExactError> {
        self.check_time(t)?;
        Ok((t - self.t0).powf(-self.homogeneity().dirichlet_rate()))
    }

    pub fn eval_radial(&self, r: f64, t: f64) -> Result<f64, ExactError> {
        Ok(self.time_factor(t)? * self.spatial_radial(r))
    }

    pub fn eval(&self, x: &[f64], t: f64) -> Result<f64, ExactError> {
        self.eval_radial(radius_of(x), t)
    }

    /// Spheres `|x| = 2 k r0`, `k >= 0`, where `X_{r0}` is only C^1.
    pub(crate) fn singular_distance(&self, x: &[f64], t: f64) -> Result<(f64, SingularSet), ExactError> {
        self.check_time(t)?;
        let r = radius_of(x);
        let spacing = 2.0 * self.r0;
        let k = (r / spacing).round();
        let d = (r - k * spacing).abs();
        Ok(if k == 0.0 {
            (d, SingularSet::Origin)
        } else {
            (d, SingularSet::Sphere { radius: k * spacing })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(h: f64) -> GiantProfile {
        GiantProfile::build(Homogeneity::new(h).unwrap(), DEFAULT_GIANT_NODES).unwrap()
    }

    #[test]
    fn half_period_h3() {
        let p = profile(3.0);
        assert!((p.rbar() - 2.396280).abs() < 5e-7, "{}", p.rbar());
        assert!(p.quadrature_error() < 1e-12);
    }

    #[test]
    fn kappa_h2() {
        let p = profile(2.0);
        assert!((p.homogeneity().kappa() - 0.873580).abs() < 5e-7);
    }

    #[test]
    fn midpoint_is_half_period() {
        for h in [1.5, 2.0, 3.0, 4.0] {
            let p = profile(h);
            let mid = p.s_of_r(0.5 * p.rbar());
            assert!((mid - 0.5 * PI).abs() < 1e-12, "h={h}: s(Rbar/2) = {mid}");
            assert!(p.x_eval(0.5 * p.rbar()).abs() < 1e-12);
        }
    }

    #[test]
    fn table_is_monotone_with_endpoint_values() {
        let p = profile(1.5);
        assert!(p.r_nodes().windows(2).all(|w| w[1] > w[0]));
        assert_eq!(p.r_nodes()[0], 0.0);
        assert_eq!(*p.r_nodes().last().unwrap(), p.rbar());
        assert_eq!(p.x_eval(0.0), 1.0);
        assert!((p.x_eval(p.rbar()) + 1.0).abs() < 1e-15);
        assert!((p.x_eval(2.0 * p.rbar()) - 1.0).abs() < 1e-15);
        assert_eq!(p.x_derivative(0.0), 0.0);
        assert!(p.x_derivative(p.rbar()).abs() < 1e-7);
    }

    #[test]
    fn inversion_round_trips() {
        let p = profile(2.5);
        for &s in p.s_nodes().iter().step_by(37) {
            let r = p.r_nodes()[p.s_nodes().iter().position(|&x| x == s).unwrap()];
            assert!((p.s_of_r(r) - s).abs() < 1e-12);
        }
        for k in 1..200 {
            let r = p.rbar() * k as f64 / 200.0;
            let s = p.s_of_r(r);
            let (back, _) = p.sine_power_integral(0.0, s).unwrap();
            assert!((p.homogeneity().kappa() * back - r).abs() < 1e-13);
        }
    }

    #[test]
    fn periodic_and_reflected() {
        let p = profile(3.0);
        let rb = p.rbar();
        for k in 0..50 {
            let r = 0.07 + 0.031 * k as f64;
            assert!((p.x_eval(r) - p.x_eval(r + 2.0 * rb)).abs() < 1e-13);
            assert!((p.x_eval(2.0 * rb - r) - p.x_eval(r)).abs() < 1e-13);
            assert!((p.x_derivative(2.0 * rb - r) + p.x_derivative(r)).abs() < 1e-12);
        }
    }

    #[test]
    fn flux_identity_on_interior_nodes() {
        for h in [1.5, 2.0, 3.0, 4.0] {
            let p = profile(h);
            let worst = p
                .flux_identity_residuals(0.05)
                .into_iter()
                .map(|(_, r)| r.abs())
                .fold(0.0, f64::max);
            assert!(worst <= 1e-6, "h={h}: {worst:e}");
        }
    }

    #[test]
    fn giant_examples() {
        let p = Arc::new(profile(3.0));
        let half = p.rbar() / 2.0;
        let g = Giant::new(p.clone(), half, 0.0).unwrap();
        assert!((g.eval(&[0.0, 0.0], 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((g.eval(&[0.0], 2.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        for r0 in [0.3, 1.0, 4.0] {
            let g = Giant::new(p.clone(), r0, -1.0).unwrap();
            assert!(g.eval(&[r0, 0.0], 0.5).unwrap().abs() < 1e-12);
        }
        assert!(g.eval(&[0.0], 0.0).is_err());
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let p = GiantProfile::build(Homogeneity::new(3.0).unwrap(), 64).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("s,r,X,Xprime"));
        assert_eq!(lines.count(), 64);
    }

    #[test]
    fn negative_prefactor_exponent_is_not_a_solution() {
        use crate::exact::{residual_at, ExactSolution};
        let p = Arc::new(profile(3.0));
        let e = (3.0 + 1.0) / (3.0 - 1.0);
        let x = [0.5, 0.3];
        let plus: ExactSolution = Giant::with_prefactor_exponent(p.clone(), 1.0, 0.0, e).unwrap().into();
        let minus: ExactSolution = Giant::with_prefactor_exponent(p.clone(), 1.0, 0.0, -e).unwrap().into();
        assert!(residual_at(&plus, &x, 1.0, 1e-3).unwrap() < 1e-6);
        assert!(residual_at(&minus, &x, 1.0, 1e-3).unwrap() > 1e-2);
        // at r0 = Rbar/2 the two prefactors coincide
        let r0 = p.rbar() / 2.0;
        let minus: ExactSolution = Giant::with_prefactor_exponent(p, r0, 0.0, -e).unwrap().into();
        assert!(residual_at(&minus, &x, 1.0, 1e-3).unwrap() < 1e-6);
    }

    #[test]
    fn rejects_small_tables() {
        assert!(GiantProfile::build(Homogeneity::new(3.0).unwrap(), 10).is_err());
    }
}

//! Pointwise PDE residual `|u_t - Δ∞ʰ u|` by fourth-order central differences.

use crate::operator::degenerate_value;

use super::{ExactError, ExactSolution, SingularSet};

// Fourth-order first-derivative weights for offsets -2, -1, 1, 2 (over 12k).
const D1: [(f64, f64); 4] = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];

/// Step at which fourth-order truncation and rounding roughly balance.
pub fn default_step() -> f64 {
    f64::EPSILON.powf(1.0 / 6.0)
}

/// `|u_t - Δ∞ʰ u|` at `(x, t)` with finite-difference step `step`.
///
/// The point must lie at least `3 step` from the spatial singular set of
/// the family, and the time stencil must fit inside its time domain with
/// the same margin.
pub fn residual_at(solution: &ExactSolution, x: &[f64], t: f64, step: f64) -> Result<f64, ExactError> {
    if !(step.is_finite() && step > 0.0) {
        return Err(ExactError::InvalidParameter {
            name: "stencil_width",
            value: step,
        });
    }
    let required = 3.0 * step;
    let (lo, hi) = solution.time_domain();
    let time_room = (t - lo).min(hi - t);
    if !(time_room >= required) {
        return Err(ExactError::TooCloseToSingularSet {
            set: SingularSet::TimeLimit,
            distance: time_room,
            required,
        });
    }
    let (distance, set) = solution.singular_distance(x, t)?;
    if distance < required {
        return Err(ExactError::TooCloseToSingularSet {
            set,
            distance,
            required,
        });
    }

    let d = x.len();
    let mut probe = x.to_vec();
    let at = |probe: &[f64], tt: f64| solution.eval(probe, tt);

    let mut ut = 0.0;
    for (o, w) in D1 {
        ut += w * at(x, t + o * step)?;
    }
    ut /= 12.0 * step;

    let u0 = at(x, t)?;
    let mut grad = vec![0.0; d];
    let mut hess = vec![0.0; d * d];
    for i in 0..d {
        let mut g = 0.0;
        let mut second = -30.0 * u0;
        for (o, w) in D1 {
            probe[i] = x[i] + o * step;
            let v = at(&probe, t)?;
            g += w * v;
            second += if o.abs() == 1.0 { 16.0 } else { -1.0 } * v;
        }
        probe[i] = x[i];
        grad[i] = g / (12.0 * step);
        hess[i * d + i] = second / (12.0 * step * step);
        for j in (i + 1)..d {
            let mut mixed = 0.0;
            for (oi, wi) in D1 {
                for (oj, wj) in D1 {
                    probe[i] = x[i] + oi * step;
                    probe[j] = x[j] + oj * step;
                    mixed += wi * wj * at(&probe, t)?;
                }
            }
            probe[i] = x[i];
            probe[j] = x[j];
            let v = mixed / (144.0 * step * step);
            hess[i * d + j] = v;
            hess[j * d + i] = v;
        }
    }
    Ok((ut - degenerate_value(&hess, &grad, solution.homogeneity())).abs())
}

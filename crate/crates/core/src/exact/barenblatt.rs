use crate::operator::Homogeneity;

use super::{radius_of, ExactError, SingularSet};

/// Source-type self-similar solution
///
/// ```text
/// B(x,t) = c_h t^(-1/(2h)) [ R^((h+1)/h) - t^(-(h+1)/(2h^2)) |x|^((h+1)/h) ]_+^(h/(h-1))
/// ```
///
/// `R` is the radius of the positivity set at `t = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Barenblatt {
    radius: f64,
    hom: Homogeneity,
}

impl Barenblatt {
    pub fn new(radius: f64, hom: Homogeneity) -> Result<Self, ExactError> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(ExactError::InvalidParameter {
                name: "R",
                value: radius,
            });
        }
        Ok(Self { radius, hom })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn homogeneity(&self) -> &Homogeneity {
        &self.hom
    }

    fn check_time(t: f64) -> Result<(), ExactError> {
        if t.is_finite() && t > 0.0 {
            Ok(())
        } else {
            Err(ExactError::OutsideTimeDomain {
                t,
                bound: 0.0,
                family: "barenblatt",
            })
        }
    }

    /// `R t^(1/(2h))`.
    pub fn support_radius(&self, t: f64) -> Result<f64, ExactError> {
        Self::check_time(t)?;
        Ok(self.radius * t.powf(self.hom.cauchy_rate()))
    }

    /// The bracket `A(r,t)` before the positive part is taken.
    fn bracket(&self, r: f64, t: f64) -> f64 {
        let h = self.hom.h();
        let a = (h + 1.0) / h;
        self.radius.powf(a) - t.powf(-(h + 1.0) / (2.0 * h * h)) * r.powf(a)
    }

    pub fn eval_radial(&self, r: f64, t: f64) -> Result<f64, ExactError> {
        Self::check_time(t)?;
        let h = self.hom.h();
        let a = self.bracket(r.abs(), t);
        if a <= 0.0 {
            return Ok(0.0);
        }
        Ok(self.hom.c_h() * t.powf(-self.hom.cauchy_rate()) * a.powf(h / (h - 1.0)))
    }

    pub fn eval(&self, x: &[f64], t: f64) -> Result<f64, ExactError> {
        self.eval_radial(radius_of(x), t)
    }

    /// Analytic `d/dr` of the profile.
    pub fn radial_derivative(&self, r: f64, t: f64) -> Result<f64, ExactError> {
        Self::check_time(t)?;
        let h = self.hom.h();
        let a = self.bracket(r, t);
        if a <= 0.0 || r == 0.0 {
            return Ok(0.0);
        }
        Ok(-self.hom.c_h() * (h + 1.0) / (h - 1.0)
            * t.powf(-(2.0 * h + 1.0) / (2.0 * h * h))
            * r.powf(1.0 / h)
            * a.powf(1.0 / (h - 1.0)))
    }

    /// Analytic `d/dt` at radius `r`.
    pub fn time_derivative(&self, r: f64, t: f64) -> Result<f64, ExactError> {
        Self::check_time(t)?;
        let h = self.hom.h();
        let a = self.bracket(r, t);
        if a <= 0.0 {
            return Ok(0.0);
        }
        let c = self.hom.c_h();
        Ok(-c / (2.0 * h) * t.powf(-(2.0 * h + 1.0) / (2.0 * h)) * a.powf(h / (h - 1.0))
            + c * (h + 1.0) / (2.0 * (h - 1.0) * h)
                * t.powf(-(2.0 * h * (h + 1.0) + 1.0) / (2.0 * h * h))
                * r.powf((h + 1.0) / h)
                * a.powf(1.0 / (h - 1.0)))
    }

    pub(crate) fn singular_distance(&self, x: &[f64], t: f64) -> Result<(f64, SingularSet), ExactError> {
        let r = radius_of(x);
        let edge = (r - self.support_radius(t)?).abs();
        Ok(if r <= edge {
            (r, SingularSet::Origin)
        } else {
            (edge, SingularSet::FreeBoundary)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(radius: f64, h: f64) -> Barenblatt {
        Barenblatt::new(radius, Homogeneity::new(h).unwrap()).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert!((b(1.0, 3.0).eval(&[0.0, 0.0], 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(b(1.0, 3.0).eval(&[2.0, 0.0], 1.0).unwrap(), 0.0);
        assert!((b(1.0, 2.0).eval(&[0.0], 1.0).unwrap() - 1.0 / 18.0).abs() < 1e-16);
        assert!(b(1.0, 2.0).eval(&[0.0], 0.0).is_err());
        assert!(Barenblatt::new(0.0, Homogeneity::new(2.0).unwrap()).is_err());
    }

    #[test]
    fn support_radius_examples() {
        assert_eq!(b(1.0, 3.0).support_radius(1.0).unwrap(), 1.0);
        assert!((b(1.0, 3.0).support_radius(16.0).unwrap() - 16f64.powf(1.0 / 6.0)).abs() < 1e-15);
        assert!((b(1.0, 3.0).support_radius(16.0).unwrap() - 1.587401).abs() < 1e-6);
        assert_eq!(b(2.0, 2.0).support_radius(1.0).unwrap(), 2.0);
        assert!(b(1.0, 2.0).support_radius(-1.0).is_err());
    }

    #[test]
    fn nonnegative_and_compactly_supported() {
        for h in [1.5, 2.0, 3.0, 4.0] {
            let bb = b(1.3, h);
            for t in [0.5, 1.0, 7.0] {
                let edge = bb.support_radius(t).unwrap();
                for k in 0..400 {
                    let r = 3.0 * k as f64 / 399.0;
                    let v = bb.eval_radial(r, t).unwrap();
                    assert!(v >= 0.0 && v.is_finite());
                    if r > edge {
                        assert_eq!(v, 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let bb = b(1.0, 2.5);
        let (r, t, e) = (0.6, 1.7, 1e-6);
        let dr = (bb.eval_radial(r + e, t).unwrap() - bb.eval_radial(r - e, t).unwrap()) / (2.0 * e);
        let dt = (bb.eval_radial(r, t + e).unwrap() - bb.eval_radial(r, t - e).unwrap()) / (2.0 * e);
        assert!((dr - bb.radial_derivative(r, t).unwrap()).abs() < 1e-8);
        assert!((dt - bb.time_derivative(r, t).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn center_time_derivative_is_minus_u_over_2ht() {
        for h in [1.5, 2.0, 3.0, 4.0] {
            let bb = b(1.0, h);
            for t in [0.3, 1.0, 12.0] {
                let u = bb.eval_radial(0.0, t).unwrap();
                let ut = bb.time_derivative(0.0, t).unwrap();
                assert!((ut + u / (2.0 * h * t)).abs() <= 1e-14 * u.abs() / t);
            }
        }
    }

    #[test]
    fn self_similar_invariance() {
        for h in [1.5, 2.0, 3.0, 4.0] {
            let bb = b(1.0, h);
            let k = 1.0 / (2.0 * h);
            for lambda in [0.5f64, 2.0, 10.0] {
                for i in 0..50 {
                    let r = 1.5 * i as f64 / 49.0;
                    let t = 1.3;
                    let scaled = lambda.powf(k) * bb.eval_radial(lambda.powf(k) * r, lambda * t).unwrap();
                    let direct = bb.eval_radial(r, t).unwrap();
                    assert!((scaled - direct).abs() <= 1e-10, "h={h} lambda={lambda} r={r}");
                }
            }
        }
    }
}

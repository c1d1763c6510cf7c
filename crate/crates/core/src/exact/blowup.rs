use crate::operator::Homogeneity;

use super::{radius_of, ExactError, SingularSet};

/// `V(x,t) = c_h [|x| - r0]_+^((h+1)/(h-1)) / (t0 - t)^(1/(h-1))` for `t < t0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowUp {
    r0: f64,
    t0: f64,
    hom: Homogeneity,
}

impl BlowUp {
    pub fn new(r0: f64, t0: f64, hom: Homogeneity) -> Result<Self, ExactError> {
        if !(r0.is_finite() && r0 >= 0.0) {
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
        Ok(Self { r0, t0, hom })
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn homogeneity(&self) -> &Homogeneity {
        &self.hom
    }

    fn check_time(&self, t: f64) -> Result<(), ExactError> {
        if t.is_finite() && t < self.t0 {
            Ok(())
        } else {
            Err(ExactError::OutsideTimeDomain {
                t,
                bound: self.t0,
                family: "blowup",
            })
        }
    }

    pub fn eval_radial(&self, r: f64, t: f64) -> Result<f64, ExactError> {
        self.check_time(t)?;
        let h = self.hom.h();
        let gap = r.abs() - self.r0;
        if gap <= 0.0 {
            return Ok(0.0);
        }
        Ok(self.hom.c_h() * gap.powf((h + 1.0) / (h - 1.0)) * (self.t0 - t).powf(-self.hom.dirichlet_rate()))
    }

    pub fn eval(&self, x: &[f64], t: f64) -> Result<f64, ExactError> {
        self.eval_radial(radius_of(x), t)
    }

    pub(crate) fn singular_distance(&self, x: &[f64], t: f64) -> Result<(f64, SingularSet), ExactError> {
        self.check_time(t)?;
        let d = (radius_of(x) - self.r0).abs();
        Ok(if self.r0 == 0.0 {
            (d, SingularSet::Origin)
        } else {
            (d, SingularSet::Sphere { radius: self.r0 })
        })
    }
}

use crate::operator::Homogeneity;

use super::{ExactError, SingularSet};

/// `T(x,t) = (d_h/|c|) [c^2 t - c x.nu]_+^(h/(h-1))`, a front moving along
/// `nu` with speed `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelingWave {
    nu: Vec<f64>,
    c: f64,
    hom: Homogeneity,
}

impl TravelingWave {
    pub fn new(nu: Vec<f64>, c: f64, hom: Homogeneity) -> Result<Self, ExactError> {
        if !(c.is_finite() && c != 0.0) {
            return Err(ExactError::InvalidParameter { name: "c", value: c });
        }
        let norm = nu.iter().map(|v| v * v).sum::<f64>().sqrt();
        if nu.is_empty() || !((norm - 1.0).abs() <= 1e-14) {
            return Err(ExactError::InvalidParameter {
                name: "|nu|",
                value: norm,
            });
        }
        Ok(Self { nu, c, hom })
    }

    /// Normalizes `direction` before building the wave.
    pub fn along(direction: &[f64], c: f64, hom: Homogeneity) -> Result<Self, ExactError> {
        let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(ExactError::InvalidParameter {
                name: "|nu|",
                value: norm,
            });
        }
        Self::new(direction.iter().map(|v| v / norm).collect(), c, hom)
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn speed(&self) -> f64 {
        self.c
    }

    pub fn homogeneity(&self) -> &Homogeneity {
        &self.hom
    }

    fn project(&self, x: &[f64]) -> Result<f64, ExactError> {
        if x.len() != self.nu.len() {
            return Err(ExactError::DimensionMismatch {
                expected: self.nu.len(),
                got: x.len(),
            });
        }
        Ok(x.iter().zip(&self.nu).map(|(a, b)| a * b).sum())
    }

    /// The profile as a function of `xi = x.nu`.
    pub fn eval_projected(&self, xi: f64, t: f64) -> f64 {
        let h = self.hom.h();
        let bracket = self.c * (self.c * t - xi);
        if bracket <= 0.0 {
            return 0.0;
        }
        self.hom.d_h() / self.c.abs() * bracket.powf(h / (h - 1.0))
    }

    pub fn eval(&self, x: &[f64], t: f64) -> Result<f64, ExactError> {
        if !t.is_finite() {
            return Err(ExactError::OutsideTimeDomain {
                t,
                bound: f64::INFINITY,
                family: "wave",
            });
        }
        Ok(self.eval_projected(self.project(x)?, t))
    }

    /// Front position `x.nu = c t`.
    pub fn front(&self, t: f64) -> f64 {
        self.c * t
    }

    pub(crate) fn singular_distance(&self, x: &[f64], t: f64) -> Result<(f64, SingularSet), ExactError> {
        Ok(((self.project(x)? - self.front(t)).abs(), SingularSet::Front))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let w = TravelingWave::new(vec![1.0, 0.0], 1.0, Homogeneity::new(2.0).unwrap()).unwrap();
        assert!((w.eval(&[0.0, 3.0], 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(w.eval(&[1.0, 0.0], 1.0).unwrap(), 0.0);
        let w3 = TravelingWave::new(vec![0.0, 1.0], 2.0, Homogeneity::new(3.0).unwrap()).unwrap();
        assert!((w3.eval(&[5.0, 0.0], 1.0).unwrap() - 3.771236).abs() < 1e-6);
        assert!((w3.eval(&[5.0, 0.0], 1.0).unwrap() - 4.0 * 2f64.powf(1.5) / 3.0).abs() < 1e-14);
    }

    #[test]
    fn vanishes_ahead_for_both_directions() {
        let hom = Homogeneity::new(2.5).unwrap();
        for c in [-1.5, 0.8] {
            let w = TravelingWave::new(vec![1.0], c, hom).unwrap();
            for k in 0..100 {
                let xi = -5.0 + 0.1 * k as f64;
                let v = w.eval(&[xi], 1.0).unwrap();
                assert!(v >= 0.0);
                let ahead = if c > 0.0 { xi >= c } else { xi <= c };
                if ahead {
                    assert_eq!(v, 0.0);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_params() {
        let hom = Homogeneity::new(2.0).unwrap();
        assert!(TravelingWave::new(vec![1.0, 1.0], 1.0, hom).is_err());
        assert!(TravelingWave::new(vec![1.0], 0.0, hom).is_err());
        assert!(TravelingWave::along(&[3.0, 4.0], 1.0, hom).is_ok());
        let w = TravelingWave::new(vec![1.0], 1.0, hom).unwrap();
        assert!(w.eval(&[1.0, 2.0], 0.0).is_err());
    }
}

//! Closed-form and semi-analytic solution families.

mod barenblatt;
mod blowup;
mod giant;
mod residual;
mod wave;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::operator::{Homogeneity, OperatorError};

pub use barenblatt::Barenblatt;
pub use blowup::BlowUp;
pub use giant::{Giant, GiantProfile, DEFAULT_GIANT_NODES, MIN_GIANT_NODES};
pub use residual::{default_step, residual_at};
pub use wave::TravelingWave;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExactError {
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("time {t} is outside the domain of the {family} solution (bound {bound})")]
    OutsideTimeDomain {
        t: f64,
        bound: f64,
        family: &'static str,
    },
    #[error("point is {distance:e} from the {set}, closer than the required {required:e}")]
    TooCloseToSingularSet {
        set: SingularSet,
        distance: f64,
        required: f64,
    },
    #[error("point has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Locus where a family fails to be twice differentiable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SingularSet {
    Origin,
    FreeBoundary,
    Sphere { radius: f64 },
    Front,
    /// Edge of the time interval on which the family is defined.
    TimeLimit,
}

impl fmt::Display for SingularSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SingularSet::Origin => f.write_str("origin"),
            SingularSet::FreeBoundary => f.write_str("free boundary"),
            SingularSet::Sphere { radius } => write!(f, "sphere |x| = {radius}"),
            SingularSet::Front => f.write_str("front hyperplane"),
            SingularSet::TimeLimit => f.write_str("time limit"),
        }
    }
}

pub(crate) fn radius_of(x: &[f64]) -> f64 {
    crate::operator::scaled_norm(x)
}

/// Any of the four families, evaluable at `(x, t)`.
#[derive(Debug, Clone)]
pub enum ExactSolution {
    Barenblatt(Barenblatt),
    Giant(Giant),
    BlowUp(BlowUp),
    Wave(TravelingWave),
}

impl ExactSolution {
    pub fn family(&self) -> &'static str {
        match self {
            ExactSolution::Barenblatt(_) => "barenblatt",
            ExactSolution::Giant(_) => "giant",
            ExactSolution::BlowUp(_) => "blowup",
            ExactSolution::Wave(_) => "wave",
        }
    }

    pub fn homogeneity(&self) -> &Homogeneity {
        match self {
            ExactSolution::Barenblatt(b) => b.homogeneity(),
            ExactSolution::Giant(g) => g.homogeneity(),
            ExactSolution::BlowUp(b) => b.homogeneity(),
            ExactSolution::Wave(w) => w.homogeneity(),
        }
    }

    pub fn eval(&self, x: &[f64], t: f64) -> Result<f64, ExactError> {
        match self {
            ExactSolution::Barenblatt(b) => b.eval(x, t),
            ExactSolution::Giant(g) => g.eval(x, t),
            ExactSolution::BlowUp(b) => b.eval(x, t),
            ExactSolution::Wave(w) => w.eval(x, t),
        }
    }

    /// Distance from `x` to the nearest spatial singular set at time `t`.
    pub fn singular_distance(&self, x: &[f64], t: f64) -> Result<(f64, SingularSet), ExactError> {
        match self {
            ExactSolution::Barenblatt(b) => b.singular_distance(x, t),
            ExactSolution::Giant(g) => g.singular_distance(x, t),
            ExactSolution::BlowUp(b) => b.singular_distance(x, t),
            ExactSolution::Wave(w) => w.singular_distance(x, t),
        }
    }

    /// Open time interval on which the family is defined.
    pub fn time_domain(&self) -> (f64, f64) {
        match self {
            ExactSolution::Barenblatt(_) => (0.0, f64::INFINITY),
            ExactSolution::Giant(g) => (g.t0(), f64::INFINITY),
            ExactSolution::BlowUp(b) => (f64::NEG_INFINITY, b.t0()),
            ExactSolution::Wave(_) => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn giant(profile: Arc<GiantProfile>, r0: f64, t0: f64) -> Result<Self, ExactError> {
        Giant::new(profile, r0, t0).map(ExactSolution::Giant)
    }
}

impl From<Barenblatt> for ExactSolution {
    fn from(b: Barenblatt) -> Self {
        ExactSolution::Barenblatt(b)
    }
}

impl From<Giant> for ExactSolution {
    fn from(g: Giant) -> Self {
        ExactSolution::Giant(g)
    }
}

impl From<BlowUp> for ExactSolution {
    fn from(b: BlowUp) -> Self {
        ExactSolution::BlowUp(b)
    }
}

impl From<TravelingWave> for ExactSolution {
    fn from(w: TravelingWave) -> Self {
        ExactSolution::Wave(w)
    }
}

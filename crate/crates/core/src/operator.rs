//! The h-homogeneous infinity-Laplacian and its uniformly parabolic
//! regularization.
//!
//! For a symmetric matrix `M` (the Hessian slot) and a vector `p` (the
//! gradient slot) the operator value is
//!
//! ```text
//! |p|^(h-3) <M p, p>        p != 0
//! 0                         p == 0
//! ```
//!
//! The second line is the continuous extension: the value is bounded by
//! `|M| |p|^(h-1)`, which tends to zero for every `h > 1`. The regularized
//! operator replaces the degenerate coefficient matrix by
//! `eps I + (|p|^2 + delta^2)^((h-3)/2) p (x) p`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Gradients with norm at or below this value are treated as exactly zero.
pub const TINY_GRADIENT: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error("homogeneity must be a finite number > 1, got {0}")]
    InvalidHomogeneity(f64),
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("matrix entry count {entries} does not match dimension {dim}")]
    BadShape { dim: usize, entries: usize },
    #[error("matrix is not symmetric: M[{row}][{col}] != M[{col}][{row}]")]
    NotSymmetric { row: usize, col: usize },
    #[error("dimension mismatch: matrix is {matrix}x{matrix}, vector has {vector} entries")]
    DimensionMismatch { matrix: usize, vector: usize },
    #[error("eps must be >= 0, got {0}")]
    NegativeEps(f64),
    #[error("delta must be >= 0, got {0}")]
    NegativeDelta(f64),
    #[error("delta = 0 is only allowed for h >= 3 (got h = {0}); the coefficient is unbounded near p = 0")]
    SingularRegularization(f64),
    #[error("source {kind} with slope {slope} violates |H(u)| <= {bound}|u|")]
    SourceGrowth {
        kind: &'static str,
        slope: f64,
        bound: f64,
    },
}

/// Deliberate corruptions of the model constants.
///
/// These exist so the verification suite can prove that it notices a wrong
/// constant. Production code always uses [`Mutation::None`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mutation {
    #[default]
    None,
    /// Flip the sign of the exponent on the `1/2` factor inside `c_h`.
    AmplitudeConstant,
    /// Flip the sign of the exponent inside `d_h`.
    WaveConstant,
    /// Replace the odd flux `|q|^(h-1) q` by the even `|q|^h`.
    EvenFlux,
}

/// `x^e` for `x >= 0` with fast paths for the exponents that show up in
/// practice (`h = 1.5, 2, 3, 4`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Power {
    Zero,
    Half,
    One,
    Two,
    Three,
    General(f64),
}

impl Power {
    pub(crate) fn new(e: f64) -> Self {
        if e == 0.0 {
            Power::Zero
        } else if e == 0.5 {
            Power::Half
        } else if e == 1.0 {
            Power::One
        } else if e == 2.0 {
            Power::Two
        } else if e == 3.0 {
            Power::Three
        } else {
            Power::General(e)
        }
    }

    #[inline]
    pub(crate) fn apply(self, x: f64) -> f64 {
        debug_assert!(x >= 0.0);
        match self {
            Power::Zero => 1.0,
            Power::Half => x.sqrt(),
            Power::One => x,
            Power::Two => x * x,
            Power::Three => x * x * x,
            Power::General(e) => {
                if x == 0.0 {
                    0.0
                } else {
                    x.powf(e)
                }
            }
        }
    }
}

/// The validated homogeneity degree `h > 1` together with the constants
/// derived from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homogeneity {
    h: f64,
    c_h: f64,
    d_h: f64,
    alpha: f64,
    kappa: f64,
    diffusivity: Power,
    mutation: Mutation,
}

impl Homogeneity {
    pub fn new(h: f64) -> Result<Self, OperatorError> {
        Self::mutated(h, Mutation::None)
    }

    /// Like [`Homogeneity::new`] but with one constant deliberately corrupted.
    pub fn mutated(h: f64, mutation: Mutation) -> Result<Self, OperatorError> {
        if !h.is_finite() || h <= 1.0 {
            return Err(OperatorError::InvalidHomogeneity(h));
        }
        let half_exp = match mutation {
            Mutation::AmplitudeConstant => -1.0 / (h - 1.0),
            _ => 1.0 / (h - 1.0),
        };
        let c_h = 0.5f64.powf(half_exp) * ((h - 1.0) / (h + 1.0)).powf(h / (h - 1.0));
        let wave_exp = match mutation {
            Mutation::WaveConstant => -h / (h - 1.0),
            _ => h / (h - 1.0),
        };
        let d_h = (h - 1.0).powf(wave_exp) / h;
        let alpha = (h - 1.0) / (h + 1.0);
        let kappa = (2.0 * alpha).powf(1.0 / (h + 1.0));
        Ok(Self {
            h,
            c_h,
            d_h,
            alpha,
            kappa,
            diffusivity: Power::new(h - 1.0),
            mutation,
        })
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Amplitude constant of the Barenblatt and blow-up solutions,
    /// `(1/2)^(1/(h-1)) ((h-1)/(h+1))^(h/(h-1))`.
    pub fn c_h(&self) -> f64 {
        self.c_h
    }

    /// Amplitude constant of the traveling waves, `(h-1)^(h/(h-1)) / h`.
    pub fn d_h(&self) -> f64 {
        self.d_h
    }

    /// `(h-1)/(h+1)`, the exponent of `sin` in the giant's change of variables.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The positive root of `kappa^(h+1) = 2 alpha`.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn mutation(&self) -> Mutation {
        self.mutation
    }

    /// Decay exponent `1/(2h)` of the Cauchy problem (and growth exponent of
    /// its support).
    pub fn cauchy_rate(&self) -> f64 {
        1.0 / (2.0 * self.h)
    }

    /// Decay exponent `1/(h-1)` of the homogeneous Dirichlet problem.
    pub fn dirichlet_rate(&self) -> f64 {
        1.0 / (self.h - 1.0)
    }

    /// Effective diffusivity `|q|^(h-1)` of the one-dimensional flux.
    #[inline]
    pub fn diffusivity(&self, q: f64) -> f64 {
        self.diffusivity.apply(q.abs())
    }

    /// One-dimensional flux `(1/h) |q|^(h-1) q`, whose derivative in `r` is
    /// `|v_r|^(h-1) v_rr`.
    #[inline]
    pub fn flux(&self, q: f64) -> f64 {
        let a = self.diffusivity(q) / self.h;
        match self.mutation {
            Mutation::EvenFlux => a * q.abs(),
            _ => a * q,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl SymmetricMatrix {
    /// Builds a matrix from row-major entries; rejects anything that is not
    /// exactly symmetric.
    pub fn from_row_major(dim: usize, entries: Vec<f64>) -> Result<Self, OperatorError> {
        if entries.len() != dim * dim {
            return Err(OperatorError::BadShape {
                dim,
                entries: entries.len(),
            });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(OperatorError::NonFinite("matrix"));
        }
        for row in 0..dim {
            for col in row + 1..dim {
                if entries[row * dim + col] != entries[col * dim + row] {
                    return Err(OperatorError::NotSymmetric { row, col });
                }
            }
        }
        Ok(Self { dim, entries })
    }

    /// Builds a matrix from the upper triangle of `f(i, j)`, `i <= j`.
    pub fn from_upper(dim: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self, OperatorError> {
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                entries[i * dim + j] = v;
                entries[j * dim + i] = v;
            }
        }
        Self::from_row_major(dim, entries)
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim]).expect("finite")
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self, OperatorError> {
        Self::from_upper(diag.len(), |i, j| if i == j { diag[i] } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.dim + col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Frobenius norm, an upper bound for the spectral norm.
    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `a M + b N`.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self, OperatorError> {
        if other.dim != self.dim {
            return Err(OperatorError::DimensionMismatch {
                matrix: self.dim,
                vector: other.dim,
            });
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Self::from_row_major(self.dim, entries)
    }

    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        quadratic_form(&self.entries, v)
    }

    /// Frobenius contraction `A : B`.
    pub fn contract(&self, other: &Self) -> f64 {
        self.entries.iter().zip(&other.entries).map(|(a, b)| a * b).sum()
    }
}

/// `<M v, v>` for a row-major square matrix.
#[inline]
pub(crate) fn quadratic_form(m: &[f64], v: &[f64]) -> f64 {
    let d = v.len();
    let mut acc = 0.0;
    for i in 0..d {
        let mut row = 0.0;
        for j in 0..d {
            row += m[i * d + j] * v[j];
        }
        acc += row * v[i];
    }
    acc
}

/// Euclidean norm with scaling, so tiny gradients do not underflow.
#[inline]
pub(crate) fn scaled_norm(v: &[f64]) -> f64 {
    let big = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if big == 0.0 {
        return 0.0;
    }
    big * v.iter().map(|x| (x / big) * (x / big)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector(Vec<f64>);

impl GradientVector {
    pub fn new(components: Vec<f64>) -> Result<Self, OperatorError> {
        if components.iter().any(|v| !v.is_finite()) {
            return Err(OperatorError::NonFinite("gradient"));
        }
        Ok(Self(components))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        scaled_norm(&self.0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn scaled(&self, s: f64) -> Result<Self, OperatorError> {
        Self::new(self.0.iter().map(|v| v * s).collect())
    }
}

fn check_dims(m: &SymmetricMatrix, p: &GradientVector) -> Result<(), OperatorError> {
    if m.dim() != p.dim() {
        return Err(OperatorError::DimensionMismatch {
            matrix: m.dim(),
            vector: p.dim(),
        });
    }
    Ok(())
}

/// Slice form of [`eval_operator`], shared with the grid kernels.
#[inline]
pub(crate) fn degenerate_value(m: &[f64], p: &[f64], hom: &Homogeneity) -> f64 {
    let norm = scaled_norm(p);
    if norm <= TINY_GRADIENT {
        return 0.0;
    }
    // |p|^(h-3) <Mp,p> = |p|^(h-1) <M e, e> with e = p/|p|
    let mut unit = [0.0; 8];
    let unit: &mut [f64] = if p.len() <= 8 {
        &mut unit[..p.len()]
    } else {
        return ((hom.h() - 3.0) * norm.ln()).exp() * quadratic_form(m, p);
    };
    for (u, x) in unit.iter_mut().zip(p) {
        *u = x / norm;
    }
    ((hom.h() - 1.0) * norm.ln()).exp() * quadratic_form(m, unit)
}

/// Value of the h-homogeneous infinity-Laplacian for Hessian `m` and
/// gradient `p`, with the continuous extension `0` at `p = 0`.
pub fn eval_operator(
    m: &SymmetricMatrix,
    p: &GradientVector,
    hom: &Homogeneity,
) -> Result<f64, OperatorError> {
    check_dims(m, p)?;
    Ok(degenerate_value(m.as_slice(), p.as_slice(), hom))
}

pub(crate) fn validate_regularization(
    eps: f64,
    delta: f64,
    hom: &Homogeneity,
) -> Result<(), OperatorError> {
    if !eps.is_finite() {
        return Err(OperatorError::NonFinite("eps"));
    }
    if !delta.is_finite() {
        return Err(OperatorError::NonFinite("delta"));
    }
    if eps < 0.0 {
        return Err(OperatorError::NegativeEps(eps));
    }
    if delta < 0.0 {
        return Err(OperatorError::NegativeDelta(delta));
    }
    if delta == 0.0 && hom.h() < 3.0 {
        return Err(OperatorError::SingularRegularization(hom.h()));
    }
    Ok(())
}

/// `(|p|^2 + delta^2)^((h-3)/2)`; zero when both vanish (then `p (x) p = 0`).
#[inline]
pub(crate) fn regularized_coefficient(norm_sq: f64, delta: f64, hom: &Homogeneity) -> f64 {
    let base = norm_sq + delta * delta;
    if base == 0.0 {
        return 0.0;
    }
    let e = 0.5 * (hom.h() - 3.0);
    if e == 0.0 {
        1.0
    } else {
        (e * base.ln()).exp()
    }
}

/// The coefficient matrix `eps I + (|p|^2 + delta^2)^((h-3)/2) p (x) p`.
pub fn regularized_matrix(
    p: &GradientVector,
    eps: f64,
    delta: f64,
    hom: &Homogeneity,
) -> Result<SymmetricMatrix, OperatorError> {
    validate_regularization(eps, delta, hom)?;
    let v = p.as_slice();
    let norm_sq: f64 = v.iter().map(|x| x * x).sum();
    let coef = regularized_coefficient(norm_sq, delta, hom);
    SymmetricMatrix::from_upper(v.len(), |i, j| {
        let diag = if i == j { eps } else { 0.0 };
        diag + coef * v[i] * v[j]
    })
}

/// Contraction `A^{eps,delta}(p) : M`.
pub fn eval_regularized(
    m: &SymmetricMatrix,
    p: &GradientVector,
    eps: f64,
    delta: f64,
    hom: &Homogeneity,
) -> Result<f64, OperatorError> {
    check_dims(m, p)?;
    validate_regularization(eps, delta, hom)?;
    let v = p.as_slice();
    let norm_sq: f64 = v.iter().map(|x| x * x).sum();
    let coef = regularized_coefficient(norm_sq, delta, hom);
    Ok(eps * m.trace() + coef * m.quadratic_form(v))
}

/// Admissible zero-order terms `H` with `H(0) = 0` and linear growth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceKind {
    #[default]
    Zero,
    /// `H(u) = a u`.
    Linear { a: f64 },
    /// `H(u) = a sin(u)`.
    BoundedSlope { a: f64 },
}

impl SourceKind {
    fn name(&self) -> &'static str {
        match self {
            SourceKind::Zero => "zero",
            SourceKind::Linear { .. } => "linear",
            SourceKind::BoundedSlope { .. } => "bounded_slope",
        }
    }

    fn slope(&self) -> f64 {
        match *self {
            SourceKind::Zero => 0.0,
            SourceKind::Linear { a } | SourceKind::BoundedSlope { a } => a,
        }
    }
}

/// A source term validated against its growth bound `|H(u)| <= bound |u|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Source {
    kind: SourceKind,
    bound: f64,
}

impl Source {
    pub fn new(kind: SourceKind, bound: f64) -> Result<Self, OperatorError> {
        let slope = kind.slope();
        if !slope.is_finite() || !bound.is_finite() || bound < 0.0 || slope.abs() > bound {
            return Err(OperatorError::SourceGrowth {
                kind: kind.name(),
                slope,
                bound,
            });
        }
        Ok(Self { kind, bound })
    }

    pub fn zero() -> Self {
        Self {
            kind: SourceKind::Zero,
            bound: 0.0,
        }
    }

    pub fn kind(&self) -> SourceKind {
        self.kind
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn is_zero(&self) -> bool {
        self.kind.slope() == 0.0
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match self.kind {
            SourceKind::Zero => 0.0,
            SourceKind::Linear { a } => a * u,
            SourceKind::BoundedSlope { a } => a * u.sin(),
        }
    }
}

pub fn source_term(u: f64, kind: SourceKind, bound: f64) -> Result<f64, OperatorError> {
    Ok(Source::new(kind, bound)?.eval(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hom(h: f64) -> Homogeneity {
        Homogeneity::new(h).unwrap()
    }

    fn grad(v: &[f64]) -> GradientVector {
        GradientVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn rejects_h_at_or_below_one() {
        assert!(Homogeneity::new(1.0).is_err());
        assert!(Homogeneity::new(0.5).is_err());
        assert!(Homogeneity::new(f64::NAN).is_err());
        assert!(Homogeneity::new(1.0 + 1e-9).is_ok());
    }

    #[test]
    fn derived_constants() {
        let h3 = hom(3.0);
        assert!((h3.c_h() - 0.25).abs() < 1e-15);
        assert!((h3.kappa() - 1.0).abs() < 1e-15);
        assert!((h3.alpha() - 0.5).abs() < 1e-15);
        assert!((h3.d_h() - 2f64.powf(1.5) / 3.0).abs() < 1e-15);
        let h2 = hom(2.0);
        assert!((h2.c_h() - 1.0 / 18.0).abs() < 1e-16);
        assert!((h2.d_h() - 0.5).abs() < 1e-16);
        assert!((h2.kappa() - (2.0f64 / 3.0).cbrt()).abs() < 1e-15);
        for h in [1.1, 1.5, 2.0, 2.5, 3.0, 4.0, 7.5] {
            let k = hom(h);
            assert!(k.c_h() > 0.0 && k.d_h() > 0.0);
            let rel = (k.kappa().powf(h + 1.0) - 2.0 * k.alpha()).abs() / (2.0 * k.alpha());
            assert!(rel <= 1e-14, "kappa identity off by {rel} at h = {h}");
        }
    }

    #[test]
    fn operator_examples() {
        let id = SymmetricMatrix::identity(2);
        assert_eq!(eval_operator(&id, &grad(&[1.0, 0.0]), &hom(3.0)).unwrap(), 1.0);
        assert_eq!(eval_operator(&id, &grad(&[0.0, 0.0]), &hom(1.7)).unwrap(), 0.0);
        let m = SymmetricMatrix::diagonal(&[1.0, 2.0]).unwrap();
        let v = eval_operator(&m, &grad(&[3.0, 4.0]), &hom(2.0)).unwrap();
        assert!((v - 8.2).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(GradientVector::new(vec![f64::NAN]).is_err());
        assert!(SymmetricMatrix::from_row_major(2, vec![1.0, 2.0, 3.0, 4.0]).is_err());
        assert!(SymmetricMatrix::from_row_major(2, vec![1.0, 2.0, 2.0]).is_err());
        let m = SymmetricMatrix::identity(3);
        assert!(matches!(
            eval_operator(&m, &grad(&[1.0, 0.0]), &hom(2.0)),
            Err(OperatorError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn regularized_matrix_examples() {
        let a = regularized_matrix(&grad(&[0.0, 0.0]), 0.1, 1.0, &hom(3.0)).unwrap();
        assert_eq!(a.as_slice(), &[0.1, 0.0, 0.0, 0.1]);
        let a = regularized_matrix(&grad(&[1.0, 0.0]), 0.0, 0.0, &hom(3.0)).unwrap();
        assert_eq!(a.as_slice(), &[1.0, 0.0, 0.0, 0.0]);
        let a = regularized_matrix(&grad(&[0.0, 2.0]), 1.0, 1.0, &hom(2.0)).unwrap();
        let expect = [1.0, 0.0, 0.0, 1.0 + 4.0 / 5f64.sqrt()];
        for (x, y) in a.as_slice().iter().zip(expect) {
            assert!((x - y).abs() < 1e-15);
        }
        assert_eq!(
            regularized_matrix(&grad(&[1.0, 0.0]), 0.0, 0.0, &hom(2.0)),
            Err(OperatorError::SingularRegularization(2.0))
        );
        assert!(regularized_matrix(&grad(&[1.0]), -1.0, 1.0, &hom(2.0)).is_err());
    }

    #[test]
    fn regularized_eval_examples() {
        let id = SymmetricMatrix::identity(2);
        let v = eval_regularized(&id, &grad(&[1.0, 0.0]), 0.0, 0.0, &hom(3.0)).unwrap();
        assert_eq!(v, 1.0);
        let v = eval_regularized(&id, &grad(&[0.0, 0.0]), 0.5, 1.0, &hom(2.0)).unwrap();
        assert_eq!(v, 1.0);
        let m = SymmetricMatrix::diagonal(&[2.0, -2.0]).unwrap();
        let v = eval_regularized(&m, &grad(&[1.0, 1.0]), 0.0, 0.0, &hom(3.0)).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn regularized_value_matches_matrix_contraction() {
        let m = SymmetricMatrix::from_row_major(2, vec![1.5, -0.3, -0.3, 0.7]).unwrap();
        let p = grad(&[0.4, -1.1]);
        let k = hom(2.5);
        let a = regularized_matrix(&p, 0.2, 0.3, &k).unwrap();
        let direct = eval_regularized(&m, &p, 0.2, 0.3, &k).unwrap();
        assert!((a.contract(&m) - direct).abs() < 1e-14);
    }

    #[test]
    fn regularization_converges_to_operator() {
        let m = SymmetricMatrix::from_row_major(3, vec![1.0, 0.5, -0.2, 0.5, -2.0, 0.3, -0.2, 0.3, 0.8])
            .unwrap();
        let p = grad(&[0.3, -0.5, 0.9]);
        for h in [1.5, 2.0, 3.0, 4.0] {
            let k = hom(h);
            let exact = eval_operator(&m, &p, &k).unwrap();
            let mut last = f64::INFINITY;
            for e in [1e-1, 1e-2, 1e-3, 1e-4, 1e-6] {
                let err = (eval_regularized(&m, &p, e, e, &k).unwrap() - exact).abs();
                assert!(err < last, "h = {h}, eps = delta = {e}");
                last = err;
            }
            assert!(last < 1e-5);
        }
    }

    #[test]
    fn source_examples() {
        for kind in [SourceKind::Zero, SourceKind::Linear { a: 0.5 }, SourceKind::BoundedSlope { a: 1.0 }] {
            assert_eq!(source_term(0.0, kind, 1.0).unwrap(), 0.0);
        }
        assert_eq!(source_term(2.0, SourceKind::Linear { a: 0.5 }, 1.0).unwrap(), 1.0);
        let v = source_term(std::f64::consts::PI, SourceKind::BoundedSlope { a: 1.0 }, 1.0).unwrap();
        assert!(v.abs() < 1e-15);
        assert!(Source::new(SourceKind::Linear { a: 2.0 }, 1.0).is_err());
        assert!(Source::new(SourceKind::BoundedSlope { a: -1.5 }, 1.0).is_err());
    }

    #[test]
    fn odd_flux_and_mutation() {
        let k = hom(2.5);
        assert_eq!(k.flux(-0.7), -k.flux(0.7));
        let bad = Homogeneity::mutated(2.5, Mutation::EvenFlux).unwrap();
        assert_eq!(bad.flux(-0.7), bad.flux(0.7));
        let c = Homogeneity::mutated(3.0, Mutation::AmplitudeConstant).unwrap();
        assert!((c.c_h() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn continuity_at_zero_gradient() {
        let m = SymmetricMatrix::from_row_major(2, vec![3.0, -1.0, -1.0, 2.0]).unwrap();
        for h in [1.2, 1.5, 2.0, 2.9] {
            let k = hom(h);
            for e in 1..=12 {
                let s = 10f64.powi(-e);
                let p = grad(&[0.6 * s, -0.8 * s]);
                let v = eval_operator(&m, &p, &k).unwrap();
                assert!(v.abs() <= m.norm() * s.powf(h - 1.0) * (1.0 + 1e-12));
            }
        }
    }

    proptest! {
        #[test]
        fn homogeneity_in_gradient(
            h in 1.05f64..6.0,
            s in 1e-3f64..1e3,
            a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0,
            p0 in -2.0f64..2.0, p1 in -2.0f64..2.0,
        ) {
            prop_assume!(p0.abs() + p1.abs() > 1e-3);
            let k = hom(h);
            let m = SymmetricMatrix::from_row_major(2, vec![a, b, b, c]).unwrap();
            let p = grad(&[p0, p1]);
            let base = eval_operator(&m, &p, &k).unwrap();
            let scaled = eval_operator(&m, &p.scaled(s).unwrap(), &k).unwrap();
            let expect = s.powf(h - 1.0) * base;
            let scale = (s * p.norm()).powf(h - 1.0) * m.norm();
            prop_assert!((scaled - expect).abs() <= 1e-12 * scale);
        }

        #[test]
        fn odd_symmetry_exact(
            h in 1.05f64..6.0,
            a in -3.0f64..3.0, b in -3.0f64..3.0, c in -3.0f64..3.0,
            p0 in -2.0f64..2.0, p1 in -2.0f64..2.0,
        ) {
            let k = hom(h);
            let m = SymmetricMatrix::from_row_major(2, vec![a, b, b, c]).unwrap();
            let neg = m.combine(-1.0, &m, 0.0).unwrap();
            let p = grad(&[p0, p1]);
            let v = eval_operator(&m, &p, &k).unwrap();
            let w = eval_operator(&neg, &p.scaled(-1.0).unwrap(), &k).unwrap();
            prop_assert_eq!(w, -v);
        }
    }
}

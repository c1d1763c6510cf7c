//! Explicit solver for the regularized problem
//! `u_t = A^{eps,delta}(Du) : D^2 u + H(u)` on a masked Cartesian grid.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::ExactSolution;
use crate::operator::{
    degenerate_value, regularized_coefficient, validate_regularization, GradientVector, Homogeneity, OperatorError,
    Source,
};

pub const MAX_DIM: usize = 3;
/// Below this gradient norm the degenerate term contributes nothing.
pub const GRADIENT_THRESHOLD: f64 = 1e-12;
/// Max-norm growth factor over the parabolic-boundary bound that counts as
/// an instability when `H = 0`.
pub const INSTABILITY_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid mask: {0}")]
    InvalidMask(String),
    #[error("invalid scheme parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("field has {got} values, grid has {expected} nodes")]
    SizeMismatch { expected: usize, got: usize },
    #[error("time step {dt:e} exceeds the stability limit {limit:e}")]
    DtTooLarge { dt: f64, limit: f64 },
    #[error("non-finite value at node {node} after step {step} (t = {t})")]
    NonFinite { step: u64, node: usize, t: f64 },
    #[error("instability after step {step} (t = {t}): max |u| = {max_abs:e} exceeds {factor} x boundary bound {bound:e}")]
    Unstable {
        step: u64,
        t: f64,
        max_abs: f64,
        bound: f64,
        factor: f64,
    },
    #[error("cannot evolve backwards from t = {from} to t = {to}")]
    Backwards { from: f64, to: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Interior,
    /// Carries Dirichlet data.
    Boundary,
    /// Outside the domain and not touched by any stencil.
    Exterior,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

/// Which nodes of the box are interior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MaskSpec {
    /// Every node off the faces of the box.
    Box,
    /// Nodes strictly inside the ball.
    Ball { center: Vec<f64>, radius: f64 },
    /// Nodes strictly inside at least one of the balls.
    Balls { balls: Vec<Ball> },
}

/// Uniform node-centred grid over a box with an interior mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    lower: [f64; MAX_DIM],
    spacing: [f64; MAX_DIM],
    nodes: [usize; MAX_DIM],
    strides: [usize; MAX_DIM],
    kinds: Vec<NodeKind>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
}

impl Grid {
    /// `nodes[k]` points on `[lower[k], upper[k]]` per axis.
    pub fn new(lower: &[f64], upper: &[f64], nodes: &[usize], mask: &MaskSpec) -> Result<Self, GridError> {
        let dim = lower.len();
        if dim == 0 || dim > MAX_DIM || upper.len() != dim || nodes.len() != dim {
            return Err(GridError::InvalidGrid(format!(
                "dimension must be 1..={MAX_DIM} with matching lower/upper/nodes lengths"
            )));
        }
        let mut g = Grid {
            dim,
            lower: [0.0; MAX_DIM],
            spacing: [1.0; MAX_DIM],
            nodes: [1; MAX_DIM],
            strides: [0; MAX_DIM],
            kinds: Vec::new(),
            interior: Vec::new(),
            boundary: Vec::new(),
        };
        for k in 0..dim {
            if nodes[k] < 3 {
                return Err(GridError::InvalidGrid(format!("axis {k} needs at least 3 nodes")));
            }
            let dx = (upper[k] - lower[k]) / (nodes[k] - 1) as f64;
            if !(lower[k].is_finite() && dx.is_finite() && dx > 0.0) {
                return Err(GridError::InvalidGrid(format!("axis {k} has non-positive spacing")));
            }
            g.lower[k] = lower[k];
            g.spacing[k] = dx;
            g.nodes[k] = nodes[k];
        }
        let mut stride = 1;
        for k in (0..dim).rev() {
            g.strides[k] = stride;
            stride *= g.nodes[k];
        }
        let total = stride;
        let inside: Vec<bool> = (0..total)
            .map(|i| {
                let idx = g.multi_index(i);
                let on_face = (0..dim).any(|k| idx[k] == 0 || idx[k] == g.nodes[k] - 1);
                !on_face && mask_contains(mask, &g.coords(i)[..dim])
            })
            .collect();
        g.set_mask(inside)?;
        Ok(g)
    }

    /// Interior nodes given explicitly; must avoid the box faces.
    pub fn with_interior(&self, interior: Vec<bool>) -> Result<Self, GridError> {
        if interior.len() != self.len() {
            return Err(GridError::SizeMismatch {
                expected: self.len(),
                got: interior.len(),
            });
        }
        for (i, &inside) in interior.iter().enumerate() {
            let idx = self.multi_index(i);
            if inside && (0..self.dim).any(|k| idx[k] == 0 || idx[k] == self.nodes[k] - 1) {
                return Err(GridError::InvalidMask(format!("interior node {i} lies on the box boundary")));
            }
        }
        let mut g = self.clone();
        g.set_mask(interior)?;
        Ok(g)
    }

    fn set_mask(&mut self, inside: Vec<bool>) -> Result<(), GridError> {
        let total = inside.len();
        let interior: Vec<usize> = (0..total).filter(|&i| inside[i]).collect();
        if interior.is_empty() {
            return Err(GridError::InvalidMask("mask has no interior nodes".into()));
        }
        let mut kinds = vec![NodeKind::Exterior; total];
        for &i in &interior {
            kinds[i] = NodeKind::Interior;
        }
        // Every node in the 3^d block around an interior node is read by
        // some stencil; the non-interior ones carry boundary data.
        for &i in &interior {
            for j in self.block_neighbours(i) {
                if kinds[j] == NodeKind::Exterior {
                    kinds[j] = NodeKind::Boundary;
                }
            }
        }
        self.check_connected(&inside, &interior)?;
        self.boundary = (0..total).filter(|&i| kinds[i] == NodeKind::Boundary).collect();
        self.kinds = kinds;
        self.interior = interior;
        Ok(())
    }

    fn check_connected(&self, inside: &[bool], interior: &[usize]) -> Result<(), GridError> {
        let mut seen = vec![false; inside.len()];
        let mut queue = VecDeque::from([interior[0]]);
        seen[interior[0]] = true;
        let mut count = 1;
        while let Some(i) = queue.pop_front() {
            let idx = self.multi_index(i);
            for k in 0..self.dim {
                for step in [-1i64, 1] {
                    let c = idx[k] as i64 + step;
                    if c < 0 || c >= self.nodes[k] as i64 {
                        continue;
                    }
                    let j = (i as i64 + step * self.strides[k] as i64) as usize;
                    if inside[j] && !seen[j] {
                        seen[j] = true;
                        count += 1;
                        queue.push_back(j);
                    }
                }
            }
        }
        if count != interior.len() {
            return Err(GridError::InvalidMask(format!(
                "interior is disconnected: {count} of {} nodes reachable from the first",
                interior.len()
            )));
        }
        Ok(())
    }

    fn block_neighbours(&self, i: usize) -> Vec<usize> {
        let mut out = vec![i as i64];
        for k in 0..self.dim {
            let s = self.strides[k] as i64;
            out = out.iter().flat_map(|&j| [j - s, j, j + s]).collect();
        }
        out.into_iter().map(|j| j as usize).collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes[..self.dim]
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing[..self.dim]
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower[..self.dim]
    }

    pub fn upper(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|k| self.lower[k] + (self.nodes[k] - 1) as f64 * self.spacing[k])
            .collect()
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides[..self.dim]
    }

    pub fn kind(&self, i: usize) -> NodeKind {
        self.kinds[i]
    }

    pub fn kinds(&self) -> &[NodeKind] {
        &self.kinds
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Volume of one grid cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().iter().product()
    }

    pub fn multi_index(&self, i: usize) -> [usize; MAX_DIM] {
        let mut idx = [0; MAX_DIM];
        let mut rest = i;
        for k in 0..self.dim {
            idx[k] = rest / self.strides[k];
            rest %= self.strides[k];
        }
        idx
    }

    pub fn index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(self.strides()).map(|(a, s)| a * s).sum()
    }

    /// Coordinates of node `i`; entries past `dim` are zero.
    pub fn coords(&self, i: usize) -> [f64; MAX_DIM] {
        let idx = self.multi_index(i);
        let mut x = [0.0; MAX_DIM];
        for k in 0..self.dim {
            x[k] = self.lower[k] + idx[k] as f64 * self.spacing[k];
        }
        x
    }

    /// Multilinear interpolation of `values` at `x`; `None` outside the box.
    pub fn interpolate(&self, values: &[f64], x: &[f64]) -> Option<f64> {
        if x.len() != self.dim {
            return None;
        }
        let mut base = [0usize; MAX_DIM];
        let mut frac = [0.0; MAX_DIM];
        for k in 0..self.dim {
            let pos = (x[k] - self.lower[k]) / self.spacing[k];
            let last = (self.nodes[k] - 1) as f64;
            if !(pos >= -1e-12 && pos <= last + 1e-12) {
                return None;
            }
            let pos = pos.clamp(0.0, last);
            let b = (pos.floor() as usize).min(self.nodes[k] - 2);
            base[k] = b;
            frac[k] = pos - b as f64;
        }
        let mut total = 0.0;
        for corner in 0..(1usize << self.dim) {
            let mut w = 1.0;
            let mut j = 0;
            for k in 0..self.dim {
                let bit = (corner >> k) & 1;
                w *= if bit == 1 { frac[k] } else { 1.0 - frac[k] };
                j += (base[k] + bit) * self.strides[k];
            }
            if w != 0.0 {
                total += w * values[j];
            }
        }
        Some(total)
    }
}

fn mask_contains(mask: &MaskSpec, x: &[f64]) -> bool {
    let in_ball = |center: &[f64], radius: f64| {
        let d2: f64 = x.iter().zip(center.iter().chain(std::iter::repeat(&0.0))).map(|(a, c)| (a - c) * (a - c)).sum();
        d2 < radius * radius
    };
    match mask {
        MaskSpec::Box => true,
        MaskSpec::Ball { center, radius } => in_ball(center, *radius),
        MaskSpec::Balls { balls } => balls.iter().any(|b| in_ball(&b.center, b.radius)),
    }
}

type BoundaryFn = dyn Fn(&[f64], f64) -> f64 + Send + Sync;

/// Dirichlet data `g(x, t)` on the parabolic boundary.
#[derive(Clone)]
pub struct BoundaryData(Arc<BoundaryFn>);

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("BoundaryData(..)")
    }
}

impl BoundaryData {
    pub fn zero() -> Self {
        Self::from_fn(|_, _| 0.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::from_fn(move |_, _| c)
    }

    pub fn from_fn(f: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }

    /// Samples an exact solution; evaluation errors become NaN and are
    /// caught by the solver's finiteness check.
    pub fn from_exact(solution: ExactSolution) -> Self {
        Self::from_fn(move |x, t| solution.eval(x, t).unwrap_or(f64::NAN))
    }

    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        (self.0)(x, t)
    }
}

/// Node values at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
    t: f64,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>, t: f64) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::SizeMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite { step: 0, node, t });
        }
        Ok(Self { grid, values, t })
    }

    /// Initial slice from `g(., t)` on every interior and boundary node.
    pub fn sample(grid: Arc<Grid>, g: &BoundaryData, t: f64) -> Result<Self, GridError> {
        let values = (0..grid.len())
            .map(|i| match grid.kind(i) {
                NodeKind::Exterior => 0.0,
                _ => g.eval(&grid.coords(i)[..grid.dim()], t),
            })
            .collect();
        Self::new(grid, values, t)
    }

    pub fn zeros(grid: Arc<Grid>, t: f64) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![0.0; n],
            t,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Values with the grid axes permuted/reflected by `map`, which sends
    /// a multi-index of the result to a multi-index of `self`. The grid
    /// must be invariant under the map.
    pub fn remap(&self, map: impl Fn(&[usize]) -> Vec<usize>) -> Self {
        let g = &self.grid;
        let values = (0..g.len())
            .map(|i| {
                let idx = g.multi_index(i);
                self.values[g.index(&map(&idx[..g.dim()]))]
            })
            .collect();
        Self {
            grid: self.grid.clone(),
            values,
            t: self.t,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.active().map(|(_, v)| v.abs()).fold(0.0, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.active().map(|(_, v)| v).fold(f64::INFINITY, f64::min)
    }

    /// Interior and boundary nodes with their values.
    pub fn active(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(i, _)| self.grid.kind(*i) != NodeKind::Exterior)
            .map(|(i, v)| (i, *v))
    }

    /// Cell volume times the number of nodes above `threshold`.
    pub fn support_measure(&self, threshold: f64) -> f64 {
        self.active().filter(|(_, v)| *v > threshold).count() as f64 * self.grid.cell_volume()
    }

    pub fn interpolate(&self, x: &[f64]) -> Option<f64> {
        self.grid.interpolate(&self.values, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StencilMode {
    /// Full Hessian from second and cross differences.
    Central,
    /// Second difference along `Du/|Du|` with interpolated off-grid samples.
    #[default]
    GradientAligned,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeParams {
    hom: Homogeneity,
    eps: f64,
    delta: f64,
    source: Source,
    theta: f64,
    stencil: StencilMode,
    dt_max: f64,
}

impl SchemeParams {
    pub fn new(hom: Homogeneity, eps: f64, delta: f64) -> Result<Self, GridError> {
        validate_regularization(eps, delta, &hom)?;
        Ok(Self {
            hom,
            eps,
            delta,
            source: Source::zero(),
            theta: 0.4,
            stencil: StencilMode::default(),
            dt_max: f64::INFINITY,
        })
    }

    pub fn with_source(mut self, source: Source) -> Self {
        self.source = source;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Result<Self, GridError> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(GridError::InvalidParameter {
                name: "cfl_theta",
                value: theta,
            });
        }
        self.theta = theta;
        Ok(self)
    }

    pub fn with_stencil(mut self, stencil: StencilMode) -> Self {
        self.stencil = stencil;
        self
    }

    /// Upper cap on the step, used when the stability limits are infinite.
    pub fn with_dt_max(mut self, dt_max: f64) -> Result<Self, GridError> {
        if !(dt_max > 0.0) {
            return Err(GridError::InvalidParameter {
                name: "dt_max",
                value: dt_max,
            });
        }
        self.dt_max = dt_max;
        Ok(self)
    }

    pub fn homogeneity(&self) -> &Homogeneity {
        &self.hom
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn source(&self) -> &Source {
        &self.source
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn stencil(&self) -> StencilMode {
        self.stencil
    }

    pub fn dt_max(&self) -> f64 {
        self.dt_max
    }
}

#[inline]
fn gradient_at(values: &[f64], grid: &Grid, i: usize) -> [f64; MAX_DIM] {
    let mut p = [0.0; MAX_DIM];
    for k in 0..grid.dim {
        let s = grid.strides[k];
        p[k] = (values[i + s] - values[i - s]) / (2.0 * grid.spacing[k]);
    }
    p
}

/// Central-difference gradient at interior node `node`.
pub fn grid_gradient(field: &Field, node: usize) -> GradientVector {
    let g = &field.grid;
    debug_assert_eq!(g.kind(node), NodeKind::Interior);
    let p = gradient_at(&field.values, g, node);
    GradientVector::new(p[..g.dim].to_vec()).expect("finite field values")
}

/// Value at `i + o` by multilinear interpolation within the 3^d block,
/// where `o[k] in [-1, 1]` is measured in cells. In 2-D the corner sum is
/// arranged so that swapping the axes leaves it bitwise unchanged.
#[inline]
fn block_interpolate(values: &[f64], grid: &Grid, i: usize, o: &[f64; MAX_DIM]) -> f64 {
    let mut w = [[0.0; 2]; MAX_DIM];
    let mut off = [0isize; MAX_DIM];
    for k in 0..grid.dim {
        let a = o[k].abs();
        w[k] = [1.0 - a, a];
        off[k] = if o[k] < 0.0 {
            -(grid.strides[k] as isize)
        } else {
            grid.strides[k] as isize
        };
    }
    let at = |j: isize| values[(i as isize + j) as usize];
    match grid.dim {
        1 => w[0][0] * at(0) + w[0][1] * at(off[0]),
        2 => {
            let c00 = w[0][0] * w[1][0] * at(0);
            let c11 = w[0][1] * w[1][1] * at(off[0] + off[1]);
            let c10 = w[0][1] * w[1][0] * at(off[0]);
            let c01 = w[0][0] * w[1][1] * at(off[1]);
            (c00 + c11) + (c10 + c01)
        }
        _ => {
            let mut total = 0.0;
            for corner in 0..8usize {
                let mut weight = 1.0;
                let mut j = 0;
                for k in 0..3 {
                    let bit = (corner >> k) & 1;
                    weight *= w[k][bit];
                    if bit == 1 {
                        j += off[k];
                    }
                }
                if weight != 0.0 {
                    total += weight * at(j);
                }
            }
            total
        }
    }
}

/// Degenerate term at a node whose central gradient vanishes, typically
/// the centre of a symmetric profile. The one-sided slope along the axis
/// with the largest jump stands in for `|Du|`, and the second difference
/// along that axis for the directional second derivative. The term is
/// zero only when every one-sided jump is below the gradient threshold.
#[inline]
fn critical_point_term(values: &[f64], grid: &Grid, i: usize, second: &[f64; MAX_DIM], params: &SchemeParams) -> f64 {
    let u = values[i];
    let mut best = 0.0;
    let mut axis = 0;
    for k in 0..grid.dim {
        let s = grid.strides[k];
        let slope = (values[i + s] - u).abs().max((values[i - s] - u).abs()) / grid.spacing[k];
        if slope > best {
            best = slope;
            axis = k;
        }
    }
    if best <= GRADIENT_THRESHOLD {
        return 0.0;
    }
    let norm_sq = best * best;
    regularized_coefficient(norm_sq, params.delta, &params.hom) * norm_sq * second[axis]
}

#[inline]
fn operator_at(values: &[f64], grid: &Grid, i: usize, params: &SchemeParams) -> f64 {
    let d = grid.dim;
    let u = values[i];
    let p = gradient_at(values, grid, i);
    let mut lap = 0.0;
    let mut second = [0.0; MAX_DIM];
    for k in 0..d {
        let s = grid.strides[k];
        second[k] = (values[i + s] - 2.0 * u + values[i - s]) / (grid.spacing[k] * grid.spacing[k]);
        lap += second[k];
    }
    let norm_sq: f64 = p[..d].iter().map(|x| x * x).sum();
    let norm = norm_sq.sqrt();
    let mut value = params.eps * lap;
    match params.stencil {
        StencilMode::GradientAligned => {
            if norm <= GRADIENT_THRESHOLD {
                value += critical_point_term(values, grid, i, &second, params);
            } else {
                let rho = grid.min_spacing();
                let mut plus = [0.0; MAX_DIM];
                let mut minus = [0.0; MAX_DIM];
                for k in 0..d {
                    plus[k] = rho * (p[k] / norm) / grid.spacing[k];
                    minus[k] = -plus[k];
                }
                let up = block_interpolate(values, grid, i, &plus);
                let down = block_interpolate(values, grid, i, &minus);
                let coef = regularized_coefficient(norm_sq, params.delta, &params.hom);
                value += coef * norm_sq * ((up - 2.0 * u) + down) / (rho * rho);
            }
        }
        StencilMode::Central => {
            let mut m = [0.0; MAX_DIM * MAX_DIM];
            for a in 0..d {
                m[a * d + a] = second[a];
                for b in (a + 1)..d {
                    let (sa, sb) = (grid.strides[a], grid.strides[b]);
                    let cross = (values[i + sa + sb] - values[i + sa - sb] - values[i - sa + sb] + values[i - sa - sb])
                        / (4.0 * grid.spacing[a] * grid.spacing[b]);
                    m[a * d + b] = cross;
                    m[b * d + a] = cross;
                }
            }
            if norm <= GRADIENT_THRESHOLD {
                value += critical_point_term(values, grid, i, &second, params);
            } else {
                let coef = regularized_coefficient(norm_sq, params.delta, &params.hom);
                let mut form = 0.0;
                for a in 0..d {
                    for b in 0..d {
                        form += m[a * d + b] * p[a] * p[b];
                    }
                }
                value += coef * form;
            }
        }
    }
    value + params.source.eval(u)
}

/// `A^{eps,delta}(Du) : D^2 u + H(u)` at interior node `node`.
pub fn grid_operator(field: &Field, node: usize, params: &SchemeParams) -> f64 {
    debug_assert_eq!(field.grid.kind(node), NodeKind::Interior);
    operator_at(&field.values, &field.grid, node, params)
}

/// The unregularized operator `Δ∞ʰ` from central differences at an
/// interior node.
pub(crate) fn degenerate_operator_at(values: &[f64], grid: &Grid, i: usize, hom: &Homogeneity) -> f64 {
    let d = grid.dim;
    let p = gradient_at(values, grid, i);
    let mut m = [0.0; MAX_DIM * MAX_DIM];
    for a in 0..d {
        let sa = grid.strides[a];
        m[a * d + a] = (values[i + sa] - 2.0 * values[i] + values[i - sa]) / (grid.spacing[a] * grid.spacing[a]);
        for b in (a + 1)..d {
            let sb = grid.strides[b];
            let cross = (values[i + sa + sb] - values[i + sa - sb] - values[i - sa + sb] + values[i - sa - sb])
                / (4.0 * grid.spacing[a] * grid.spacing[b]);
            m[a * d + b] = cross;
            m[b * d + a] = cross;
        }
    }
    degenerate_value(&m[..d * d], &p[..d], hom)
}

/// Stability limit of the explicit step for the current field.
pub fn grid_cfl_dt(field: &Field, params: &SchemeParams) -> f64 {
    let grid = &field.grid;
    let values = &field.values;
    let g_max = grid
        .interior
        .par_iter()
        .map(|&i| {
            let p = gradient_at(values, grid, i);
            p[..grid.dim].iter().map(|x| x * x).sum::<f64>().sqrt()
        })
        .reduce(|| 0.0, f64::max);
    let two_d = 2.0 * grid.dim as f64;
    let h = params.hom.h();
    let degenerate = if h == 3.0 {
        // (G^2 + delta^2)^1, written out so that delta = 0 is exact
        g_max * g_max + params.delta * params.delta
    } else {
        (g_max * g_max + params.delta * params.delta).powf(0.5 * (h - 1.0))
    };
    let denom = two_d * params.eps + two_d * degenerate;
    let dx = grid.min_spacing();
    let diffusion = if denom > 0.0 {
        params.theta * dx * dx / denom
    } else {
        f64::INFINITY
    };
    let slope = params.source.bound();
    let source = if slope > 0.0 { 1.0 / (2.0 * slope) } else { f64::INFINITY };
    diffusion.min(source).min(params.dt_max)
}

/// Explicit Euler evolution with Dirichlet data.
#[derive(Debug, Clone)]
pub struct GridSolver {
    params: SchemeParams,
    boundary: BoundaryData,
}

/// Per-step record passed to the diagnostics callback of
/// [`GridSolver::evolve_with_diagnostics`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridDiagnostics {
    pub t: f64,
    pub max_abs: f64,
    pub min_u: f64,
    pub support_measure: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridEvolveStats {
    pub steps: u64,
    pub min_dt: f64,
    pub max_dt: f64,
    /// Largest `|u|` seen on the parabolic boundary.
    pub boundary_bound: f64,
}

impl GridSolver {
    pub fn new(params: SchemeParams, boundary: BoundaryData) -> Self {
        Self { params, boundary }
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn boundary(&self) -> &BoundaryData {
        &self.boundary
    }

    pub fn cfl_dt(&self, field: &Field) -> f64 {
        grid_cfl_dt(field, &self.params)
    }

    /// One checked step.
    pub fn step(&self, field: &mut Field, dt: f64) -> Result<(), GridError> {
        let limit = self.cfl_dt(field);
        if !(dt >= 0.0 && dt <= limit * (1.0 + 1e-12)) {
            return Err(GridError::DtTooLarge { dt, limit });
        }
        let mut scratch = Vec::new();
        self.step_into(field, dt, &mut scratch, 0)
    }

    fn step_into(&self, field: &mut Field, dt: f64, scratch: &mut Vec<f64>, step: u64) -> Result<(), GridError> {
        let grid = field.grid.clone();
        let params = &self.params;
        {
            let values = &field.values;
            grid.interior
                .par_iter()
                .map(|&i| values[i] + dt * operator_at(values, &grid, i, params))
                .collect_into_vec(scratch);
        }
        for (&i, &v) in grid.interior.iter().zip(scratch.iter()) {
            field.values[i] = v;
        }
        let t_new = field.t + dt;
        for &i in &grid.boundary {
            field.values[i] = self.boundary.eval(&grid.coords(i)[..grid.dim], t_new);
        }
        field.t = t_new;
        if let Some(k) = grid
            .interior
            .iter()
            .chain(&grid.boundary)
            .position(|&i| !field.values[i].is_finite())
        {
            let node = if k < grid.interior.len() {
                grid.interior[k]
            } else {
                grid.boundary[k - grid.interior.len()]
            };
            return Err(GridError::NonFinite { step, node, t: t_new });
        }
        Ok(())
    }

    fn boundary_max(field: &Field) -> f64 {
        field.grid.boundary.iter().map(|&i| field.values[i].abs()).fold(0.0, f64::max)
    }

    pub fn evolve(
        &self,
        field: &mut Field,
        t_end: f64,
        times: &[f64],
        observer: impl FnMut(&Field),
    ) -> Result<GridEvolveStats, GridError> {
        self.evolve_with_diagnostics(field, t_end, times, observer, |_| {})
    }

    /// Steps to `t_end`, landing exactly on each of `times` inside
    /// `(t, t_end]` and calling `observer` there; `diagnostics` is called
    /// after every step.
    pub fn evolve_with_diagnostics(
        &self,
        field: &mut Field,
        t_end: f64,
        times: &[f64],
        mut observer: impl FnMut(&Field),
        mut diagnostics: impl FnMut(&GridDiagnostics),
    ) -> Result<GridEvolveStats, GridError> {
        if !(t_end >= field.t) {
            return Err(GridError::Backwards {
                from: field.t,
                to: t_end,
            });
        }
        let mut stops: Vec<f64> = times.iter().copied().filter(|&s| s > field.t && s <= t_end).collect();
        stops.sort_by(f64::total_cmp);
        stops.dedup();
        if stops.last() != Some(&t_end) && t_end > field.t {
            stops.push(t_end);
        }
        let mut stats = GridEvolveStats {
            steps: 0,
            min_dt: f64::INFINITY,
            max_dt: 0.0,
            boundary_bound: field.max_abs(),
        };
        let guard = self.params.source.is_zero();
        let mut scratch = Vec::with_capacity(field.grid.interior.len());
        for stop in stops {
            while field.t < stop {
                let remaining = stop - field.t;
                let cfl = self.cfl_dt(field);
                let landing = cfl >= remaining;
                let dt = if landing { remaining } else { cfl };
                self.step_into(field, dt, &mut scratch, stats.steps + 1)?;
                if landing {
                    field.t = stop;
                }
                stats.steps += 1;
                stats.min_dt = stats.min_dt.min(dt);
                stats.max_dt = stats.max_dt.max(dt);
                stats.boundary_bound = stats.boundary_bound.max(Self::boundary_max(field));
                let max_abs = field.max_abs();
                if guard && max_abs > INSTABILITY_FACTOR * stats.boundary_bound && max_abs > f64::MIN_POSITIVE {
                    return Err(GridError::Unstable {
                        step: stats.steps,
                        t: field.t,
                        max_abs,
                        bound: stats.boundary_bound,
                        factor: INSTABILITY_FACTOR,
                    });
                }
                diagnostics(&GridDiagnostics {
                    t: field.t,
                    max_abs,
                    min_u: field.min_value(),
                    support_measure: field.support_measure(1e-10),
                    dt,
                });
            }
            if times.contains(&stop) {
                observer(field);
            }
        }
        Ok(stats)
    }
}

/// Smooth cutoff equal to 1 on `|y| <= 1/2` and 0 on `|y| >= 1`.
pub fn cutoff(y: f64) -> f64 {
    let y = y.abs();
    if y <= 0.5 {
        return 1.0;
    }
    if y >= 1.0 {
        return 0.0;
    }
    let s = 2.0 * (y - 0.5);
    let f = |z: f64| if z > 0.0 { (-1.0 / z).exp() } else { 0.0 };
    f(1.0 - s) / (f(1.0 - s) + f(s))
}

/// Bounded problem on `B_R` (inside the box `[-R, R]^d`) standing in for
/// the Cauchy problem with data `g`.
#[derive(Debug, Clone)]
pub struct Truncated {
    pub grid: Arc<Grid>,
    pub boundary: BoundaryData,
    pub radius: f64,
}

impl Truncated {
    pub fn initial_field(&self, t: f64) -> Result<Field, GridError> {
        Field::sample(self.grid.clone(), &self.boundary, t)
    }
}

/// Builds the ball `|x| < R` on `nodes_per_axis^d` nodes and the data
/// `g_R(x,t) = chi(|x|/R) g(x,t)`, which vanishes on `|x| = R`.
pub fn truncate_unbounded(g: BoundaryData, dim: usize, radius: f64, nodes_per_axis: usize) -> Result<Truncated, GridError> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(GridError::InvalidParameter {
            name: "R",
            value: radius,
        });
    }
    let lower = vec![-radius; dim];
    let upper = vec![radius; dim];
    let nodes = vec![nodes_per_axis; dim];
    let mask = MaskSpec::Ball {
        center: vec![0.0; dim],
        radius,
    };
    let grid = Arc::new(Grid::new(&lower, &upper, &nodes, &mask)?);
    let boundary = BoundaryData::from_fn(move |x, t| {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let c = cutoff(r / radius);
        if c == 0.0 {
            0.0
        } else {
            c * g.eval(x, t)
        }
    });
    Ok(Truncated {
        grid,
        boundary,
        radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{eval_regularized, SourceKind, SymmetricMatrix};

    fn hom(h: f64) -> Homogeneity {
        Homogeneity::new(h).unwrap()
    }

    fn square(n: usize, half: f64) -> Arc<Grid> {
        Arc::new(Grid::new(&[-half, -half], &[half, half], &[n, n], &MaskSpec::Box).unwrap())
    }

    fn field_from(grid: &Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Field {
        let values = (0..grid.len()).map(|i| f(&grid.coords(i)[..grid.dim()])).collect();
        Field::new(grid.clone(), values, 0.0).unwrap()
    }

    fn centre(grid: &Grid) -> usize {
        let idx: Vec<usize> = grid.nodes().iter().map(|n| n / 2).collect();
        grid.index(&idx)
    }

    #[test]
    fn gradient_examples() {
        let g = square(11, 1.0);
        let lin = field_from(&g, |x| 3.0 * x[0] - 2.0 * x[1]);
        let p = grid_gradient(&lin, centre(&g));
        assert!((p.as_slice()[0] - 3.0).abs() < 1e-14 && (p.as_slice()[1] + 2.0).abs() < 1e-14);
        let c = field_from(&g, |_| 4.0);
        assert_eq!(grid_gradient(&c, centre(&g)).norm(), 0.0);
        let line = Arc::new(Grid::new(&[0.0], &[2.0], &[21], &MaskSpec::Box).unwrap());
        let q = field_from(&line, |x| x[0] * x[0]);
        let i = line.index(&[10]);
        assert!((line.coords(i)[0] - 1.0).abs() < 1e-15);
        assert!((grid_gradient(&q, i).as_slice()[0] - 2.0).abs() < 1e-13);
    }

    #[test]
    fn operator_on_quadratic_matches_pointwise() {
        let g = square(21, 2.0);
        let f = field_from(&g, |x| 0.5 * (x[0] * x[0] + x[1] * x[1]));
        let i = g.index(&[15, 10]);
        assert_eq!(&g.coords(i)[..2], &[1.0, 0.0]);
        let expect = eval_regularized(
            &SymmetricMatrix::identity(2),
            &GradientVector::new(vec![1.0, 0.0]).unwrap(),
            0.0,
            0.0,
            &hom(3.0),
        )
        .unwrap();
        assert_eq!(expect, 1.0);
        for mode in [StencilMode::Central, StencilMode::GradientAligned] {
            let params = SchemeParams::new(hom(3.0), 0.0, 0.0).unwrap().with_stencil(mode);
            assert!((grid_operator(&f, i, &params) - 1.0).abs() < 1e-12, "{mode:?}");
        }
    }

    #[test]
    fn constant_field_gives_source() {
        let g = square(9, 1.0);
        let f = field_from(&g, |_| 2.0);
        let params = SchemeParams::new(hom(2.0), 0.1, 0.5)
            .unwrap()
            .with_source(Source::new(SourceKind::Linear { a: 0.5 }, 1.0).unwrap());
        assert_eq!(grid_operator(&f, centre(&g), &params), 1.0);
    }

    #[test]
    fn cfl_examples() {
        let g = Arc::new(Grid::new(&[0.0, 0.0], &[1.0, 1.0], &[11, 11], &MaskSpec::Box).unwrap());
        let zero = Field::zeros(g.clone(), 0.0);
        let params = SchemeParams::new(hom(3.0), 0.1, 1.0).unwrap();
        let dt = grid_cfl_dt(&zero, &params);
        assert!((dt - 0.4 * 0.01 / 4.4).abs() < 1e-15);
        assert!((dt - 9.09e-4).abs() < 1e-6);

        let degenerate = SchemeParams::new(hom(3.0), 0.0, 0.0).unwrap();
        assert_eq!(grid_cfl_dt(&zero, &degenerate), f64::INFINITY);
        assert_eq!(grid_cfl_dt(&zero, &degenerate.with_dt_max(0.5).unwrap()), 0.5);

        let coarse = Arc::new(Grid::new(&[0.0, 0.0], &[2.0, 2.0], &[11, 11], &MaskSpec::Box).unwrap());
        let ratio = grid_cfl_dt(&Field::zeros(coarse, 0.0), &params) / dt;
        assert!((ratio - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_data_stay_zero() {
        let g = square(17, 1.0);
        let mut f = Field::zeros(g, 0.0);
        let params = SchemeParams::new(hom(2.0), 0.0, 0.1).unwrap();
        let solver = GridSolver::new(params.with_dt_max(0.1).unwrap(), BoundaryData::zero());
        solver.evolve(&mut f, 5.0, &[], |_| {}).unwrap();
        assert!(f.values().iter().all(|&v| v == 0.0));
        assert_eq!(f.time(), 5.0);
    }

    #[test]
    fn ball_mask_kinds() {
        let g = Grid::new(
            &[-1.0, -1.0],
            &[1.0, 1.0],
            &[21, 21],
            &MaskSpec::Ball {
                center: vec![0.0, 0.0],
                radius: 0.75,
            },
        )
        .unwrap();
        for &i in g.interior() {
            let x = g.coords(i);
            assert!(x[0] * x[0] + x[1] * x[1] < 0.75 * 0.75);
        }
        assert!(!g.boundary().is_empty());
        assert_eq!(g.kind(0), NodeKind::Exterior);
    }

    #[test]
    fn rejects_disconnected_and_empty_masks() {
        let balls = MaskSpec::Balls {
            balls: vec![
                Ball {
                    center: vec![-0.6, 0.0],
                    radius: 0.2,
                },
                Ball {
                    center: vec![0.6, 0.0],
                    radius: 0.2,
                },
            ],
        };
        assert!(matches!(
            Grid::new(&[-1.0, -1.0], &[1.0, 1.0], &[41, 41], &balls),
            Err(GridError::InvalidMask(_))
        ));
        let empty = MaskSpec::Ball {
            center: vec![5.0, 5.0],
            radius: 0.1,
        };
        assert!(Grid::new(&[-1.0, -1.0], &[1.0, 1.0], &[11, 11], &empty).is_err());
        assert!(Grid::new(&[0.0], &[1.0], &[2], &MaskSpec::Box).is_err());
    }

    #[test]
    fn oversized_step_rejected() {
        let g = square(11, 1.0);
        let mut f = field_from(&g, |x| (1.0 - x[0] * x[0]) * (1.0 - x[1] * x[1]));
        let solver = GridSolver::new(SchemeParams::new(hom(2.0), 0.0, 0.1).unwrap(), BoundaryData::zero());
        let limit = solver.cfl_dt(&f);
        assert!(matches!(solver.step(&mut f, 3.0 * limit), Err(GridError::DtTooLarge { .. })));
        solver.step(&mut f, limit).unwrap();
    }

    #[test]
    fn cutoff_profile() {
        assert_eq!(cutoff(0.3), 1.0);
        assert_eq!(cutoff(0.5), 1.0);
        assert_eq!(cutoff(1.0), 0.0);
        assert!((cutoff(0.75) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for k in 0..=100 {
            let c = cutoff(0.5 + 0.005 * k as f64);
            assert!(c <= prev);
            prev = c;
        }
    }

    #[test]
    fn truncation_keeps_data_inside_half_ball() {
        let t = truncate_unbounded(BoundaryData::constant(1.0), 2, 2.0, 41).unwrap();
        let f = t.initial_field(0.0).unwrap();
        for (i, v) in f.active() {
            let x = t.grid.coords(i);
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            if r <= 1.0 {
                assert_eq!(v, 1.0);
            }
            if r >= 2.0 {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn interpolation_is_exact_on_bilinear() {
        let g = square(9, 1.0);
        let f = field_from(&g, |x| 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[1]);
        let v = f.interpolate(&[0.3, -0.7]).unwrap();
        assert!((v - (1.0 + 0.6 + 0.7 - 0.105)).abs() < 1e-14);
        assert!(f.interpolate(&[1.5, 0.0]).is_none());
    }
}

//! Node-centered tensor-product grids with homogeneous Neumann closure.
//!
//! Quadrature uses trapezoidal weights (half weight on boundary nodes), the
//! Laplacian uses reflected ghost nodes, and the gradient lives on cell
//! edges. With these choices `‖∇f‖² = ⟨−Δf, f⟩` holds exactly.

use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    dims: Vec<usize>,
    spacing: Vec<f64>,
    origin: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    pub fn new(dims: &[usize], spacing: &[f64], origin: &[f64]) -> Result<Self> {
        if dims.is_empty() || dims.len() > 3 {
            return Err(Error::invalid("dims", format!("need 1 to 3 axes, got {}", dims.len())));
        }
        if spacing.len() != dims.len() || origin.len() != dims.len() {
            return Err(Error::invalid("spacing", "axis count mismatch"));
        }
        if let Some(n) = dims.iter().find(|&&n| n < 3) {
            return Err(Error::invalid("dims", format!("every axis needs at least 3 nodes, got {n}")));
        }
        if spacing.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::invalid("spacing", "spacings must be positive and finite"));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::NonFinite("grid origin"));
        }
        let mut grid = Grid {
            dims: dims.to_vec(),
            spacing: spacing.to_vec(),
            origin: origin.to_vec(),
            weights: Vec::new(),
        };
        grid.weights = (0..grid.len())
            .map(|k| {
                let idx = grid.unravel(k);
                (0..grid.ndim()).map(|d| grid.axis_weight(d, idx[d])).product()
            })
            .collect();
        Ok(grid)
    }

    /// Grid with `dims[d]` nodes covering `[0, lengths[d]]`.
    pub fn with_lengths(dims: &[usize], lengths: &[f64]) -> Result<Self> {
        if lengths.len() != dims.len() {
            return Err(Error::invalid("lengths", "axis count mismatch"));
        }
        let spacing: Vec<f64> = dims
            .iter()
            .zip(lengths)
            .map(|(&n, &l)| l / (n.max(2) - 1) as f64)
            .collect();
        Grid::new(dims, &spacing, &vec![0.0; dims.len()])
    }

    /// Unit interval / square / cube.
    pub fn unit(dims: &[usize]) -> Result<Self> {
        Grid::with_lengths(dims, &vec![1.0; dims.len()])
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.dims
            .iter()
            .zip(&self.spacing)
            .map(|(&n, &h)| (n - 1) as f64 * h)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn measure(&self) -> f64 {
        self.lengths().iter().product()
    }

    /// Row-major strides (last axis fastest).
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.ndim()];
        for d in (0..self.ndim().saturating_sub(1)).rev() {
            s[d] = s[d + 1] * self.dims[d + 1];
        }
        s
    }

    pub fn unravel(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for d in (0..self.ndim()).rev() {
            idx[d] = flat % self.dims[d];
            flat /= self.dims[d];
        }
        idx
    }

    pub fn coords(&self, flat: usize) -> [f64; 3] {
        let idx = self.unravel(flat);
        let mut x = [0.0; 3];
        for d in 0..self.ndim() {
            x[d] = self.origin[d] + idx[d] as f64 * self.spacing[d];
        }
        x
    }

    /// One-dimensional trapezoidal weight of node `i` along axis `d`.
    pub fn axis_weight(&self, d: usize, i: usize) -> f64 {
        let h = self.spacing[d];
        if i == 0 || i == self.dims[d] - 1 {
            0.5 * h
        } else {
            h
        }
    }

    /// Trapezoidal quadrature weights for all nodes.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Real nodal values on a grid.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.same_grid(other) && self.values == other.values
    }
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(
                "values",
                format!("expected {} values, got {}", grid.len(), values.len()),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field values"));
        }
        Ok(Field { grid, values })
    }

    /// Construct without the finiteness scan; used on solver-internal paths.
    pub(crate) fn from_raw(grid: Arc<Grid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Field { grid, values }
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        Field::from_raw(grid, vec![0.0; n])
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Self {
        let n = grid.len();
        Field::from_raw(grid, vec![c; n])
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn([f64; 3]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|k| f(grid.coords(k))).collect();
        Field::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn same_grid(&self, other: &Field) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub(crate) fn check_grid(&self, other: &Field) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_raw(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// Element-wise combination; panics on grid mismatch (internal use).
    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        assert_eq!(self.values.len(), other.values.len(), "field length mismatch");
        Field::from_raw(
            self.grid.clone(),
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        )
    }

    pub fn add(&self, other: &Field) -> Field {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }

    /// `self + c · other`.
    pub fn axpy(&self, c: f64, other: &Field) -> Field {
        self.zip_map(other, |a, b| a + c * b)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Discrete Neumann Laplacian with reflected ghost nodes.
pub fn laplacian_apply(f: &Field) -> Result<Field> {
    if !f.is_finite() {
        return Err(Error::NonFinite("laplacian input"));
    }
    Ok(laplacian_unchecked(f))
}

pub(crate) fn laplacian_unchecked(f: &Field) -> Field {
    let grid = f.grid();
    let strides = grid.strides();
    let v = f.values();
    let mut out = vec![0.0; v.len()];
    for d in 0..grid.ndim() {
        let n = grid.dims()[d];
        let s = strides[d];
        let inv_h2 = 1.0 / (grid.spacing()[d] * grid.spacing()[d]);
        for (k, o) in out.iter_mut().enumerate() {
            let i = (k / s) % n;
            let lap = if i == 0 {
                2.0 * (v[k + s] - v[k])
            } else if i == n - 1 {
                2.0 * (v[k - s] - v[k])
            } else {
                v[k - s] - 2.0 * v[k] + v[k + s]
            };
            *o += lap * inv_h2;
        }
    }
    Field::from_raw(grid.clone(), out)
}

pub fn inner_h(f: &Field, g: &Field) -> Result<f64> {
    f.check_grid(g)?;
    Ok(inner_unchecked(f, g))
}

pub(crate) fn inner_unchecked(f: &Field, g: &Field) -> f64 {
    f.grid()
        .weights()
        .iter()
        .zip(f.values().iter().zip(g.values()))
        .map(|(w, (a, b))| w * a * b)
        .sum()
}

pub fn norm_h(f: &Field) -> f64 {
    inner_unchecked(f, f).max(0.0).sqrt()
}

/// `‖∇f‖²_H` from forward differences on cell edges.
///
/// An edge along axis `d` carries weight `h_d` times the trapezoidal weights
/// of the remaining axes.
pub fn grad_norm_sq(f: &Field) -> f64 {
    let grid = f.grid();
    let strides = grid.strides();
    let v = f.values();
    let mut sum = 0.0;
    for d in 0..grid.ndim() {
        let n = grid.dims()[d];
        let s = strides[d];
        let h = grid.spacing()[d];
        for k in 0..v.len() {
            let i = (k / s) % n;
            if i == n - 1 {
                continue;
            }
            let w = h * grid.weights()[k] / grid.axis_weight(d, i);
            let g = (v[k + s] - v[k]) / h;
            sum += w * g * g;
        }
    }
    sum
}

/// `‖f‖²_V = ‖∇f‖²_H + ‖f‖²_H`.
pub fn norm_v(f: &Field) -> f64 {
    (grad_norm_sq(f) + inner_unchecked(f, f)).max(0.0).sqrt()
}

/// Integral of a field (trapezoidal rule).
pub fn integral(f: &Field) -> f64 {
    f.grid()
        .weights()
        .iter()
        .zip(f.values())
        .map(|(w, v)| w * v)
        .sum()
}

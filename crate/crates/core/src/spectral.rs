//! Cosine-basis diagonalization of the discrete Neumann Laplacian.
//!
//! On a node-centered axis with `n` nodes the eigenvectors of the
//! ghost-reflected Laplacian are `v_k(i) = cos(π k i / (n−1))` with symbol
//! `κ_k = (4/h²) sin²(π k / (2(n−1)))`. They are orthogonal for the
//! trapezoidal inner product, so analysis/synthesis are both DCT-I, computed
//! here through an FFT of the even extension.

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

struct AxisPlan {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    eigenvalues: Vec<f64>,
}

impl AxisPlan {
    fn new(planner: &mut FftPlanner<f64>, n: usize, h: f64) -> Self {
        let m = n - 1;
        let eigenvalues = (0..n)
            .map(|k| {
                let s = (PI * k as f64 / (2.0 * m as f64)).sin();
                4.0 * s * s / (h * h)
            })
            .collect();
        AxisPlan {
            n,
            fft: planner.plan_fft_forward(2 * m),
            eigenvalues,
        }
    }

    /// Unnormalized DCT-I: `y_k = x_0 + (−1)^k x_m + 2 Σ_{j=1}^{m−1} x_j cos(π jk/m)`.
    fn dct1(&self, line: &mut [f64], buf: &mut [Complex<f64>], scratch: &mut [Complex<f64>]) {
        let m = self.n - 1;
        for j in 0..=m {
            buf[j] = Complex::new(line[j], 0.0);
        }
        for j in 1..m {
            buf[2 * m - j] = Complex::new(line[j], 0.0);
        }
        self.fft.process_with_scratch(buf, scratch);
        for k in 0..=m {
            line[k] = buf[k].re;
        }
    }
}

/// Precomputed symbols and transforms for one grid.
pub struct SpectralPlan {
    grid: Arc<Grid>,
    axes: Vec<AxisPlan>,
    symbol: Vec<f64>,
}

impl fmt::Debug for SpectralPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralPlan")
            .field("dims", &self.grid.dims())
            .field("modes", &self.symbol.len())
            .finish()
    }
}

impl SpectralPlan {
    pub fn new(grid: Arc<Grid>) -> Self {
        let mut planner = FftPlanner::new();
        let axes: Vec<AxisPlan> = (0..grid.ndim())
            .map(|d| AxisPlan::new(&mut planner, grid.dims()[d], grid.spacing()[d]))
            .collect();
        let symbol = (0..grid.len())
            .map(|k| {
                let idx = grid.unravel(k);
                (0..grid.ndim()).map(|d| axes[d].eigenvalues[idx[d]]).sum()
            })
            .collect();
        SpectralPlan { grid, axes, symbol }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Symbol `κ ≥ 0` of `−Δ_h` for every mode, in row-major mode order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.symbol
    }

    pub fn axis_eigenvalues(&self, axis: usize) -> &[f64] {
        &self.axes[axis].eigenvalues
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.symbol.iter().cloned().fold(0.0, f64::max)
    }

    fn check(&self, f: &Field) -> Result<()> {
        if Arc::ptr_eq(f.grid(), &self.grid) || **f.grid() == *self.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    fn apply_dct_all_axes(&self, data: &mut [f64], endpoint_half: bool) {
        let strides = self.grid.strides();
        for (d, axis) in self.axes.iter().enumerate() {
            let n = axis.n;
            let s = strides[d];
            let m = n - 1;
            let mut buf = vec![Complex::new(0.0, 0.0); 2 * m];
            let mut scratch = vec![Complex::new(0.0, 0.0); axis.fft.get_inplace_scratch_len()];
            let mut line = vec![0.0; n];
            let total = data.len();
            let block = n * s;
            for base in (0..total).step_by(block) {
                for off in 0..s {
                    let start = base + off;
                    for (i, l) in line.iter_mut().enumerate() {
                        *l = data[start + i * s];
                    }
                    if endpoint_half {
                        // Synthesis: interior coefficients enter the DCT-I with weight 1/2.
                        for l in line.iter_mut().take(m).skip(1) {
                            *l *= 0.5;
                        }
                    }
                    axis.dct1(&mut line, &mut buf, &mut scratch);
                    if !endpoint_half {
                        // Analysis: c_k = ⟨f, v_k⟩ / ⟨v_k, v_k⟩, with ⟨v_k,v_k⟩ = h·m (ends) or h·m/2.
                        for (k, l) in line.iter_mut().enumerate() {
                            let norm = if k == 0 || k == m { m as f64 } else { 0.5 * m as f64 };
                            *l *= 0.5 / norm;
                        }
                    }
                    for (i, l) in line.iter().enumerate() {
                        data[start + i * s] = *l;
                    }
                }
            }
        }
    }

    /// Cosine coefficients `c` with `f = Σ c_k v_k`.
    pub fn transform(&self, f: &Field) -> Result<Vec<f64>> {
        self.check(f)?;
        Ok(self.forward_unchecked(f.values()))
    }

    pub fn inverse_transform(&self, coeffs: &[f64]) -> Result<Field> {
        if coeffs.len() != self.grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Field::from_raw(self.grid.clone(), self.inverse_unchecked(coeffs)))
    }

    pub(crate) fn forward_unchecked(&self, values: &[f64]) -> Vec<f64> {
        let mut data = values.to_vec();
        self.apply_dct_all_axes(&mut data, false);
        data
    }

    pub(crate) fn inverse_unchecked(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut data = coeffs.to_vec();
        self.apply_dct_all_axes(&mut data, true);
        data
    }

    /// Applies the Fourier multiplier `m(κ)` to `f`.
    pub fn apply_symbol(&self, f: &Field, m: impl Fn(f64) -> f64) -> Result<Field> {
        self.check(f)?;
        Ok(self.apply_symbol_unchecked(f, m))
    }

    pub(crate) fn apply_symbol_unchecked(&self, f: &Field, m: impl Fn(f64) -> f64) -> Field {
        let mut c = self.forward_unchecked(f.values());
        for (ck, &kappa) in c.iter_mut().zip(&self.symbol) {
            *ck *= m(kappa);
        }
        Field::from_raw(self.grid.clone(), self.inverse_unchecked(&c))
    }
}

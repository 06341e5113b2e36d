//! Periodic grids, discrete Fourier transforms and the linear spectral
//! operators built on them.
//!
//! Transforms follow the unnormalized convention: `forward` computes
//! `û_k = Σ_x u_x e^{-i k·x}` and `inverse` divides by `N^dim`, so
//! `‖forward(u)‖² = N^dim ‖u‖²` (Parseval).
//!
//! Wavenumbers on each axis are `2π m / L` for `m = -N/2 .. N/2-1`, stored in
//! FFT order (`m = 0, 1, .., N/2-1, -N/2, .., -1`). The Nyquist mode keeps its
//! even multipliers (`|k|^α`, `-k²`) but all odd ones (`i k`, `-k_x k_y`) are
//! zeroed so real fields stay real.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic grid on `[-L/2, L/2)^dim`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: usize,
    length: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dim must be 1 or 2, got {dim}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {n}"
            )));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidGrid(format!("box length must be positive, got {length}")));
        }
        Ok(Self { dim, n, length })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Total number of samples, `N^dim`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Physical coordinate of axis index `i`.
    pub fn coordinate(&self, i: usize) -> f64 {
        -0.5 * self.length + i as f64 * self.spacing()
    }

    /// Signed mode number `m` of FFT-ordered index `j`.
    pub fn mode_number(&self, j: usize) -> i64 {
        let n = self.n as i64;
        let j = j as i64;
        if j < n / 2 {
            j
        } else {
            j - n
        }
    }

    pub fn wavenumber(&self, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.mode_number(j) as f64 / self.length
    }

    /// Per-axis wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.wavenumber(j)).collect()
    }

    /// Axis indices of a flat (row-major) index; the second entry is 0 in 1D.
    pub fn indices(&self, flat: usize) -> (usize, usize) {
        if self.dim == 1 {
            (flat, 0)
        } else {
            (flat / self.n, flat % self.n)
        }
    }

    /// Position of a flat index; `y = 0` in 1D.
    pub fn point(&self, flat: usize) -> [f64; 2] {
        let (i, j) = self.indices(flat);
        if self.dim == 1 {
            [self.coordinate(i), 0.0]
        } else {
            [self.coordinate(i), self.coordinate(j)]
        }
    }

    pub fn distance(&self, flat: usize, center: [f64; 2]) -> f64 {
        let p = self.point(flat);
        (p[0] - center[0]).hypot(p[1] - center[1])
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}D grid, N = {}, L = {}", self.dim, self.n, self.length)
    }
}

/// Real samples on a grid at a given time.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
    time: f64,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "field has {} values, grid expects {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite value at index {i}")));
        }
        if !(time >= 0.0) {
            return Err(Error::InvalidParameter(format!("time must be >= 0, got {time}")));
        }
        Ok(Self { grid, values, time })
    }

    pub fn from_fn(grid: Grid, time: f64, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|k| f(grid.point(k))).collect();
        Self::new(grid, values, time)
    }

    pub fn constant(grid: Grid, value: f64, time: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.len()], time)
    }

    /// Unchecked constructor for values produced by trusted transforms.
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>, time: f64) -> Self {
        Self { grid, values, time }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Pointwise magnitudes of the spectral derivatives of one field, computed
/// from a single forward transform.
#[derive(Clone, Debug)]
pub struct DerivativeNorms {
    /// `|∇u|` per grid point.
    pub grad: Vec<f64>,
    /// Frobenius norm of the Hessian per grid point.
    pub hess: Vec<f64>,
    /// `Λ^α u` per grid point (signed).
    pub frac: Vec<f64>,
}

/// Fourier multiplier tables and FFT plans for one grid and one `α`.
///
/// Immutable after construction; share it behind an `Arc` across threads.
pub struct SpectralOperator {
    grid: Grid,
    alpha: f64,
    frac: Vec<f64>,
    // per-axis wavenumbers (even multipliers) and odd-derivative wavenumbers
    // with the Nyquist entry zeroed
    k_even: Vec<f64>,
    k_odd: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralOperator")
            .field("grid", &self.grid)
            .field("alpha", &self.alpha)
            .finish()
    }
}

impl SpectralOperator {
    pub fn new(grid: Grid, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::InvalidAlpha(alpha));
        }
        let n = grid.n();
        let k_even = grid.wavenumbers();
        let mut k_odd = k_even.clone();
        k_odd[n / 2] = 0.0;

        let half = 0.5 * alpha;
        let frac = (0..grid.len())
            .map(|flat| {
                let (i, j) = grid.indices(flat);
                let k2 = if grid.dim() == 1 {
                    k_even[i] * k_even[i]
                } else {
                    k_even[i] * k_even[i] + k_even[j] * k_even[j]
                };
                if k2 == 0.0 {
                    0.0
                } else {
                    k2.powf(half)
                }
            })
            .collect();

        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        Ok(Self {
            grid,
            alpha,
            frac,
            k_even,
            k_odd,
            fft,
            ifft,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `|k|^α` per mode, FFT order.
    pub fn frac_multiplier(&self) -> &[f64] {
        &self.frac
    }

    /// `i k_axis` at a flat mode index (zero on the Nyquist line of that axis).
    pub fn grad_multiplier(&self, axis: usize, flat: usize) -> Complex64 {
        let (i, j) = self.grid.indices(flat);
        let k = if axis == 0 { self.k_odd[i] } else { self.k_odd[j] };
        Complex64::new(0.0, k)
    }

    /// `-k_a k_b` at a flat mode index.
    pub fn hess_multiplier(&self, a: usize, b: usize, flat: usize) -> f64 {
        let (i, j) = self.grid.indices(flat);
        let idx = [i, j];
        if a == b {
            let k = self.k_even[idx[a]];
            -k * k
        } else {
            -self.k_odd[idx[a]] * self.k_odd[idx[b]]
        }
    }

    /// Whether a mode survives 2/3-rule truncation.
    pub fn dealias_keep(&self, flat: usize) -> bool {
        let (i, j) = self.grid.indices(flat);
        let cut = (self.grid.n() / 3) as i64;
        self.grid.mode_number(i).abs() <= cut && self.grid.mode_number(j).abs() <= cut
    }

    fn check(&self, field: &Field) -> Result<()> {
        if field.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    fn transform(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.grid.n();
        let plan = if inverse { &self.ifft } else { &self.fft };
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(buf, &mut scratch);
        if self.grid.dim() == 2 {
            let mut t = vec![Complex64::default(); buf.len()];
            transpose(buf, &mut t, n);
            plan.process_with_scratch(&mut t, &mut scratch);
            transpose(&t, buf, n);
        }
    }

    /// Unnormalized forward DFT of real samples.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, false);
        buf
    }

    /// Normalized inverse DFT, returning complex samples.
    pub fn inverse_complex(&self, mut spectrum: Vec<Complex64>) -> Vec<Complex64> {
        self.transform(&mut spectrum, true);
        let scale = 1.0 / self.grid.len() as f64;
        for c in spectrum.iter_mut() {
            *c *= scale;
        }
        spectrum
    }

    /// Normalized inverse DFT keeping the real part.
    pub fn inverse(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut spectrum, true);
        let scale = 1.0 / self.grid.len() as f64;
        spectrum.into_iter().map(|c| c.re * scale).collect()
    }

    fn filtered(&self, spectrum: &[Complex64], mult: impl Fn(usize) -> Complex64) -> Vec<f64> {
        let out = spectrum
            .iter()
            .enumerate()
            .map(|(k, &c)| c * mult(k))
            .collect();
        self.inverse(out)
    }

    /// `Λ^α u = F⁻¹(|k|^α û)`.
    pub fn apply_frac_laplacian(&self, field: &Field) -> Result<Field> {
        self.check(field)?;
        let spec = self.forward(field.values());
        let values = self.filtered(&spec, |k| Complex64::new(self.frac[k], 0.0));
        Ok(Field::from_raw(self.grid, values, field.time()))
    }

    /// Spectral gradient, one field per axis.
    pub fn gradient(&self, field: &Field) -> Result<Vec<Field>> {
        self.check(field)?;
        let spec = self.forward(field.values());
        Ok((0..self.grid.dim())
            .map(|axis| {
                let v = self.filtered(&spec, |k| self.grad_multiplier(axis, k));
                Field::from_raw(self.grid, v, field.time())
            })
            .collect())
    }

    /// Spectral Hessian components: `[u_xx]` in 1D, `[u_xx, u_xy, u_yy]` in 2D.
    pub fn hessian(&self, field: &Field) -> Result<Vec<Field>> {
        self.check(field)?;
        let spec = self.forward(field.values());
        Ok(self
            .hessian_pairs()
            .iter()
            .map(|&(a, b)| {
                let v = self.filtered(&spec, |k| Complex64::new(self.hess_multiplier(a, b, k), 0.0));
                Field::from_raw(self.grid, v, field.time())
            })
            .collect())
    }

    fn hessian_pairs(&self) -> Vec<(usize, usize)> {
        if self.grid.dim() == 1 {
            vec![(0, 0)]
        } else {
            vec![(0, 0), (0, 1), (1, 1)]
        }
    }

    /// Maximum over the grid of the Frobenius norm of the spectral Hessian.
    pub fn hessian_sup(&self, field: &Field) -> Result<f64> {
        let d = self.derivative_norms(field)?;
        Ok(d.hess.iter().copied().fold(0.0, f64::max))
    }

    /// Gradient magnitude, Hessian Frobenius norm and `Λ^α u` in one pass.
    pub fn derivative_norms(&self, field: &Field) -> Result<DerivativeNorms> {
        self.check(field)?;
        let spec = self.forward(field.values());
        let len = self.grid.len();

        let mut grad = vec![0.0; len];
        for axis in 0..self.grid.dim() {
            let g = self.filtered(&spec, |k| self.grad_multiplier(axis, k));
            for (acc, v) in grad.iter_mut().zip(g) {
                *acc += v * v;
            }
        }
        grad.iter_mut().for_each(|v| *v = v.sqrt());

        let mut hess = vec![0.0; len];
        for (a, b) in self.hessian_pairs() {
            let weight = if a == b { 1.0 } else { 2.0 };
            let h = self.filtered(&spec, |k| Complex64::new(self.hess_multiplier(a, b, k), 0.0));
            for (acc, v) in hess.iter_mut().zip(h) {
                *acc += weight * v * v;
            }
        }
        hess.iter_mut().for_each(|v| *v = v.sqrt());

        let frac = self.filtered(&spec, |k| Complex64::new(self.frac[k], 0.0));
        Ok(DerivativeNorms { grad, hess, frac })
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    const BLOCK: usize = 32;
    for ib in (0..n).step_by(BLOCK) {
        for jb in (0..n).step_by(BLOCK) {
            for i in ib..(ib + BLOCK).min(n) {
                for j in jb..(jb + BLOCK).min(n) {
                    dst[j * n + i] = src[i * n + j];
                }
            }
        }
    }
}

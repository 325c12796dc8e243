//! Fourier transforms of periodic sampled fields on the uniform grid
//! `x_i = i / N` of the unit circle.
//!
//! Fields are `N × d` arrays, one column per ambient component. Frequencies
//! are indexed by integers in `[-N/2, N/2)`; the Nyquist bin `-N/2` is dropped
//! by odd-order derivatives so that real fields stay real.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array2, ArrayView2};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(n), p.plan_fft_inverse(n))
    })
}

/// Signed frequency of FFT bin `j` on an `n`-point grid.
#[inline]
pub fn frequency(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Normalized Fourier coefficients of a real periodic field, stored
/// component-major: `coeffs[c * n + j]` is bin `j` of component `c`.
#[derive(Debug, Clone)]
pub struct SpectralCoeffs {
    n: usize,
    dim: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralCoeffs {
    pub fn forward(f: ArrayView2<f64>) -> Self {
        let (n, dim) = f.dim();
        let (fwd, _) = plans(n);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n * dim];
        let scale = 1.0 / n as f64;
        for c in 0..dim {
            let block = &mut coeffs[c * n..(c + 1) * n];
            for (z, &x) in block.iter_mut().zip(f.column(c)) {
                *z = Complex64::new(x, 0.0);
            }
            fwd.process(block);
            block.iter_mut().for_each(|z| *z *= scale);
        }
        Self { n, dim, coeffs }
    }

    pub(crate) fn from_raw(n: usize, dim: usize, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), n * dim);
        Self { n, dim, coeffs }
    }

    pub(crate) fn raw(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn raw_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Multiplies bin `j` of every component by `weights[j]` in place.
    pub(crate) fn scale_bins(&mut self, weights: &[Complex64]) {
        for block in self.coeffs.chunks_exact_mut(self.n) {
            block.iter_mut().zip(weights).for_each(|(z, w)| *z *= w);
        }
    }

    /// `self += s * other`.
    pub(crate) fn axpy(&mut self, s: f64, other: &Self) {
        self.coeffs.iter_mut().zip(&other.coeffs).for_each(|(z, o)| *z += o * s);
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coefficient of frequency `k` (in `[-N/2, N/2)`) of component `c`.
    pub fn coeff(&self, c: usize, k: i64) -> Complex64 {
        let j = k.rem_euclid(self.n as i64) as usize;
        self.coeffs[c * self.n + j]
    }

    /// Applies a per-frequency multiplier and transforms back.
    pub fn synthesize_with(&self, multiplier: impl Fn(i64) -> Complex64) -> Array2<f64> {
        let n = self.n;
        let (_, inv) = plans(n);
        let mut out = Array2::zeros((n, self.dim));
        let weights: Vec<Complex64> = (0..n).map(|j| multiplier(frequency(j, n))).collect();
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for c in 0..self.dim {
            for (j, z) in buf.iter_mut().enumerate() {
                *z = self.coeffs[c * n + j] * weights[j];
            }
            inv.process(&mut buf);
            for (o, z) in out.column_mut(c).iter_mut().zip(&buf) {
                *o = z.re;
            }
        }
        out
    }

    /// Same as [`synthesize_with`](Self::synthesize_with) for a real multiplier.
    pub fn synthesize_real(&self, multiplier: impl Fn(i64) -> f64) -> Array2<f64> {
        self.synthesize_with(|k| Complex64::new(multiplier(k), 0.0))
    }

    pub fn to_field(&self) -> Array2<f64> {
        self.synthesize_real(|_| 1.0)
    }

    /// Derivative of the given order; the Nyquist bin is dropped for odd orders.
    pub fn derivative(&self, order: u32) -> Array2<f64> {
        let n = self.n as i64;
        self.synthesize_with(|k| derivative_symbol(k, n, order))
    }
}

/// Fourier symbol `(2πik)^order` of `∂_x^order`.
pub fn derivative_symbol(k: i64, n: i64, order: u32) -> Complex64 {
    if order == 0 {
        return Complex64::new(1.0, 0.0);
    }
    if order % 2 == 1 && 2 * k == -n {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::new(0.0, 2.0 * PI * k as f64).powu(order)
}

/// Spectral derivative of a periodic sampled field.
pub fn spectral_derivative(f: ArrayView2<f64>, order: u32) -> Array2<f64> {
    SpectralCoeffs::forward(f).derivative(order)
}

/// Zeroes every Fourier mode with `|k| > max_mode`.
pub fn truncate_modes(f: ArrayView2<f64>, max_mode: usize) -> Array2<f64> {
    let m = max_mode as i64;
    SpectralCoeffs::forward(f).synthesize_real(|k| if k.abs() <= m { 1.0 } else { 0.0 })
}

/// Uniform-grid trapezoid rule for `∫_0^1 Σ_c f_c g_c dx`.
pub fn l2_inner(f: ArrayView2<f64>, g: ArrayView2<f64>) -> f64 {
    let n = f.nrows() as f64;
    f.iter().zip(g.iter()).map(|(a, b)| a * b).sum::<f64>() / n
}

pub fn l2_norm(f: ArrayView2<f64>) -> f64 {
    l2_inner(f, f).sqrt()
}

//! Single-step integrators acting on the periodic part of the state.
//!
//! A constant-coefficient operator `L` (the dispersive part plus the complex
//! structure frozen at its mean along the curve) is treated exactly in Fourier
//! space; the remainder `N(v) = F(π ∘ v) - L(π ∘ v)` is explicit and truncated
//! to modes `|k| ≤ dealias`. On the manifold `Lv + N(v)` is the regularized
//! right-hand side.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2};
use rustfft::num_complex::Complex64;

use super::config::FlowConfig;
use super::rhs::flow_field;
use crate::curve::ClosedCurve;
use crate::error::{Error, Result};
use crate::manifold::{Manifold, OFF_MANIFOLD_TOL};
use crate::spectral::{derivative_symbol, frequency, SpectralCoeffs};

/// Result of one step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: ClosedCurve,
    /// Largest distance from the target before the final projection.
    pub off_manifold: f64,
    pub picard_iterations: Option<usize>,
}

/// Symbol of `a ∂³ - ε ∂⁴` at frequency `k` on an `n`-point grid.
pub(crate) fn linear_symbol(a: f64, epsilon: f64, k: i64, n: usize) -> Complex64 {
    let n = n as i64;
    let d3 = derivative_symbol(k, n, 3);
    let w4 = derivative_symbol(k, n, 4).re;
    d3 * a - epsilon * w4
}

pub(crate) struct Lift {
    manifold: Manifold,
    winding: Array1<f64>,
}

impl Lift {
    pub(crate) fn of(curve: &ClosedCurve) -> Self {
        Self { manifold: curve.manifold(), winding: curve.winding().clone() }
    }

    /// Curve whose periodic part has the given coefficients (tube check only).
    pub(crate) fn curve(&self, coeffs: &SpectralCoeffs) -> Result<ClosedCurve> {
        let mut points = coeffs.to_field();
        if self.winding.iter().any(|w| *w != 0.0) {
            let n = points.nrows() as f64;
            for (i, mut row) in points.rows_mut().into_iter().enumerate() {
                row.scaled_add(i as f64 / n, &self.winding);
            }
        }
        ClosedCurve::in_tube(points, self.manifold, self.winding.clone())
    }
}

/// `L = a ∂³ + J̄ ∂² - ε ∂⁴` with `J̄` the mean complex structure along the
/// step's initial state, diagonalized per mode: `J̄ = U diag(-iμ) U*`.
pub(crate) struct Linear {
    dim: usize,
    n: usize,
    u: DMatrix<Complex64>,
    u_adj: DMatrix<Complex64>,
    /// `[j * n + bin]`: symbol of `L` on eigendirection `j`, bin `bin`.
    symbols: Vec<Complex64>,
    /// `symbols` without the dissipative part.
    disp: Vec<Complex64>,
}

impl Linear {
    pub(crate) fn new(c: &ClosedCurve, cfg: &FlowConfig) -> Self {
        let (n, dim) = (c.len(), c.dim());
        let m = c.manifold();
        let mut jbar = vec![0.0; dim * dim];
        let mut e = vec![0.0; dim];
        let mut col = vec![0.0; dim];
        for i in 0..n {
            let p = m.nearest_point(c.point(i)).unwrap_or_else(|| c.point(i).to_vec());
            for k in 0..dim {
                e.iter_mut().enumerate().for_each(|(r, x)| *x = if r == k { 1.0 } else { 0.0 });
                m.complex_structure_into(&p, &e, &mut col);
                for r in 0..dim {
                    jbar[r * dim + k] += col[r] / n as f64;
                }
            }
        }
        let skew: Vec<f64> = (0..dim * dim)
            .map(|idx| 0.5 * (jbar[idx] - jbar[(idx % dim) * dim + idx / dim]))
            .collect();
        // i J̄ is Hermitian; its eigenvalues μ give J̄ u = -iμ u.
        let h = DMatrix::from_fn(dim, dim, |r, k| Complex64::new(0.0, skew[r * dim + k]));
        let eig = SymmetricEigen::new(h);
        let u = eig.eigenvectors;
        let u_adj = u.adjoint();
        let mut symbols = Vec::with_capacity(dim * n);
        let mut disp = Vec::with_capacity(dim * n);
        for &mu in eig.eigenvalues.iter() {
            for bin in 0..n {
                let k = frequency(bin, n);
                let d2 = derivative_symbol(k, n as i64, 2);
                let l = linear_symbol(cfg.a, 0.0, k, n) + d2 * Complex64::new(0.0, -mu);
                disp.push(l);
                symbols.push(l + linear_symbol(0.0, cfg.epsilon, k, n));
            }
        }
        Self { dim, n, u, u_adj, symbols, disp }
    }

    fn mix(&self, m: &DMatrix<Complex64>, v: &SpectralCoeffs) -> SpectralCoeffs {
        let (n, dim) = (self.n, self.dim);
        let src = v.raw();
        let mut out = vec![Complex64::new(0.0, 0.0); n * dim];
        for r in 0..dim {
            for k in 0..dim {
                let w = m[(r, k)];
                if w == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let (dst, from) = (&mut out[r * n..(r + 1) * n], &src[k * n..(k + 1) * n]);
                dst.iter_mut().zip(from).for_each(|(o, x)| *o += w * x);
            }
        }
        SpectralCoeffs::from_raw(n, dim, out)
    }

    /// Ambient coefficients to eigen-coordinates.
    pub(crate) fn to_eigen(&self, v: &SpectralCoeffs) -> SpectralCoeffs {
        self.mix(&self.u_adj, v)
    }

    pub(crate) fn to_ambient(&self, w: &SpectralCoeffs) -> SpectralCoeffs {
        self.mix(&self.u, w)
    }

    /// `f(λ)` for every symbol `λ`.
    fn table(&self, f: impl Fn(Complex64) -> Complex64) -> Vec<Complex64> {
        self.symbols.iter().map(|&l| f(l)).collect()
    }
}

pub(crate) struct Explicit<'a> {
    cfg: &'a FlowConfig,
    lift: &'a Lift,
    linear: &'a Linear,
    mask: Vec<Complex64>,
}

impl<'a> Explicit<'a> {
    pub(crate) fn new(cfg: &'a FlowConfig, lift: &'a Lift, linear: &'a Linear) -> Self {
        let n = linear.n;
        let cut = cfg.dealias_mode() as i64;
        let mask = (0..n)
            .map(|j| Complex64::new(if frequency(j, n).abs() <= cut { 1.0 } else { 0.0 }, 0.0))
            .collect();
        Self { cfg, lift, linear, mask }
    }

    /// `N(v)` in eigen-coordinates, for `w` in eigen-coordinates.
    pub(crate) fn eval(&self, w: &SpectralCoeffs) -> Result<SpectralCoeffs> {
        let state = self.lift.curve(&self.linear.to_ambient(w))?;
        let p = state.projected()?;
        let f: Array2<f64> = flow_field(&p, self.cfg.a, self.cfg.b, self.cfg.epsilon, true);
        let mut out = self.linear.to_eigen(&SpectralCoeffs::forward(f.view()));
        let lin = scale_all(&self.linear.to_eigen(&p.spectrum()), &self.linear.disp);
        out.axpy(-1.0, &lin);
        out.scale_bins(&self.mask);
        Ok(out)
    }
}

fn scale_all(v: &SpectralCoeffs, w: &[Complex64]) -> SpectralCoeffs {
    let mut out = v.clone();
    out.raw_mut().iter_mut().zip(w).for_each(|(z, w)| *z *= w);
    out
}

fn finish(lift: &Lift, linear: &Linear, w: &SpectralCoeffs, picard_iterations: Option<usize>) -> Result<StepOutcome> {
    let raw = lift.curve(&linear.to_ambient(w))?;
    let off_manifold = raw.off_manifold();
    Ok(StepOutcome { state: raw.projected()?, off_manifold, picard_iterations })
}

/// `φ₁, φ₂, φ₃` at `z`, with `φ_k(z) = Σ_j z^j / (j + k)!`.
fn phi(z: Complex64) -> [Complex64; 3] {
    if z.norm() < 1.0 {
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for (k, o) in out.iter_mut().enumerate() {
            let mut term = Complex64::new(1.0 / (1..=k + 1).product::<usize>() as f64, 0.0);
            for j in 0..24 {
                *o += term;
                term *= z / (j + k + 2) as f64;
            }
        }
        return out;
    }
    let e = z.exp();
    let p1 = (e - 1.0) / z;
    let p2 = (p1 - 1.0) / z;
    let p3 = (p2 - 0.5) / z;
    [p1, p2, p3]
}

/// One fourth-order exponential Runge–Kutta step of size `h` (Cox–Matthews).
pub(crate) fn rk4_step(c: &ClosedCurve, cfg: &FlowConfig, h: f64) -> Result<StepOutcome> {
    let lift = Lift::of(c);
    let linear = Linear::new(c, cfg);
    let ex = Explicit::new(cfg, &lift, &linear);
    let e_half = linear.table(|l| (l * (0.5 * h)).exp());
    let e_full = linear.table(|l| (l * h).exp());
    let q_half = linear.table(|l| phi(l * (0.5 * h))[0] * (0.5 * h));
    let f1 = linear.table(|l| {
        let [p1, p2, p3] = phi(l * h);
        (p1 - 3.0 * p2 + 4.0 * p3) * h
    });
    let f2 = linear.table(|l| {
        let [_, p2, p3] = phi(l * h);
        (p2 - 2.0 * p3) * (2.0 * h)
    });
    let f3 = linear.table(|l| {
        let [_, p2, p3] = phi(l * h);
        (4.0 * p3 - p2) * h
    });

    let w0 = linear.to_eigen(&c.spectrum());
    let e_w0 = scale_all(&w0, &e_half);
    let n0 = ex.eval(&w0)?;
    let mut wa = e_w0.clone();
    wa.axpy(1.0, &scale_all(&n0, &q_half));
    let na = ex.eval(&wa)?;
    let mut wb = e_w0;
    wb.axpy(1.0, &scale_all(&na, &q_half));
    let nb = ex.eval(&wb)?;
    let mut wc = scale_all(&wa, &e_half);
    let mut rhs = nb.clone();
    rhs.axpy(1.0, &nb);
    rhs.axpy(-1.0, &n0);
    wc.axpy(1.0, &scale_all(&rhs, &q_half));
    let nc = ex.eval(&wc)?;

    let mut mid = na;
    mid.axpy(1.0, &nb);
    let mut w1 = scale_all(&w0, &e_full);
    w1.axpy(1.0, &scale_all(&n0, &f1));
    w1.axpy(1.0, &scale_all(&mid, &f2));
    w1.axpy(1.0, &scale_all(&nc, &f3));
    finish(&lift, &linear, &w1, None)
}

/// One implicit-explicit midpoint step of size `h`:
/// `v* = (I - h/2 L)⁻¹ (v + h/2 N(v))`, `v₁ = v + h (L v* + N(v*))`.
pub(crate) fn imex_step(c: &ClosedCurve, cfg: &FlowConfig, h: f64) -> Result<StepOutcome> {
    let lift = Lift::of(c);
    let linear = Linear::new(c, cfg);
    let ex = Explicit::new(cfg, &lift, &linear);
    let solve = linear.table(|l| 1.0 / (1.0 - 0.5 * h * l));

    let w0 = linear.to_eigen(&c.spectrum());
    let mut star = w0.clone();
    star.axpy(0.5 * h, &ex.eval(&w0)?);
    let star = scale_all(&star, &solve);
    let n_star = ex.eval(&star)?;
    let l_star = scale_all(&star, &linear.symbols);
    let mut w1 = w0;
    w1.axpy(h, &l_star);
    w1.axpy(h, &n_star);
    finish(&lift, &linear, &w1, None)
}

/// One projected RK4 step with `cfg.dt`.
pub fn step_projected_rk4(c: &ClosedCurve, cfg: &FlowConfig) -> Result<ClosedCurve> {
    cfg.validate()?;
    check_state(c, cfg)?;
    check_on_manifold(c)?;
    Ok(rk4_step(c, cfg, cfg.dt)?.state)
}

/// One IMEX step with `cfg.dt`.
pub fn step_imex(c: &ClosedCurve, cfg: &FlowConfig) -> Result<ClosedCurve> {
    cfg.validate()?;
    check_state(c, cfg)?;
    check_on_manifold(c)?;
    Ok(imex_step(c, cfg, cfg.dt)?.state)
}

pub(crate) fn check_state(c: &ClosedCurve, cfg: &FlowConfig) -> Result<()> {
    if c.len() != cfg.grid {
        return Err(Error::InvalidConfig(format!(
            "curve has {} samples but the configuration asks for {}",
            c.len(),
            cfg.grid
        )));
    }
    Ok(())
}

fn check_on_manifold(c: &ClosedCurve) -> Result<()> {
    let residual = c.off_manifold();
    if residual > OFF_MANIFOLD_TOL {
        return Err(Error::PointOffManifold { residual });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::oracle_latitude_circle;
    use crate::presets::{constant, latitude, random_smooth, torus_geodesic};
    use std::f64::consts::PI;

    fn sup_distance(a: &ClosedCurve, b: &ClosedCurve) -> f64 {
        (&a.points() - &b.points()).iter().fold(0.0, |m: f64, x| m.max(x.abs()))
    }

    #[test]
    fn phi_series_and_closed_form_agree_at_the_switch() {
        for z in [Complex64::new(0.999, 0.0), Complex64::new(0.0, 0.9999), Complex64::new(-0.6, 0.7)] {
            let lo = phi(z);
            let hi = phi(z * 1.0002);
            for k in 0..3 {
                assert!((lo[k] - hi[k]).norm() < 1e-3 * lo[k].norm());
            }
        }
        let [p1, p2, p3] = phi(Complex64::new(1e-9, 0.0));
        assert!((p1.re - 1.0).abs() < 1e-8 && (p2.re - 0.5).abs() < 1e-8 && (p3.re - 1.0 / 6.0).abs() < 1e-8);
    }

    #[test]
    fn constant_curve_is_a_fixed_point() {
        for m in [Manifold::Sphere2, Manifold::CliffordTorus2, Manifold::ChartFlatTorus2] {
            let c = constant(32, m).unwrap();
            let cfg = FlowConfig::new(1.0, 0.5, 32, 1e-3, 1.0).with_epsilon(1e-2);
            let next = step_projected_rk4(&c, &cfg).unwrap();
            assert!(sup_distance(&c, &next) < 1e-15);
            let next = step_imex(&c, &cfg).unwrap();
            assert!(sup_distance(&c, &next) < 1e-15);
        }
    }

    #[test]
    fn chart_line_translates_exactly() {
        let c = torus_geodesic(32, Manifold::ChartFlatTorus2, 1, 0).unwrap();
        let dt = 1e-4;
        let cfg = FlowConfig::new(1.0, 0.5, 32, dt, 1.0);
        let next = step_projected_rk4(&c, &cfg).unwrap();
        for i in 0..32 {
            let x = i as f64 / 32.0;
            assert!((next.point(i)[0] - (x + 0.5 * dt)).abs() < 1e-12);
            assert!(next.point(i)[1].abs() < 1e-12);
        }
    }

    #[test]
    fn travelling_circle_local_error_is_high_order() {
        let theta = PI / 3.0;
        let c = latitude(64, theta).unwrap();
        let errs: Vec<f64> = [2e-3, 1e-3, 5e-4]
            .iter()
            .map(|&dt| {
                let cfg = FlowConfig::new(1.0, 0.5, 64, dt, 1.0);
                let next = step_projected_rk4(&c, &cfg).unwrap();
                sup_distance(&next, &oracle_latitude_circle(theta, dt, 1.0, 0.5, 64).unwrap())
            })
            .collect();
        // Local error O(dt⁵): each halving gains well over a factor 16.
        assert!(errs.windows(2).all(|w| w[1] < w[0] / 16.0), "{errs:?}");
        assert!(errs[2] < 1e-9, "{errs:?}");
    }

    #[test]
    fn steps_stay_on_the_target() {
        let c = random_smooth(64, Manifold::Sphere2, 5, 1.0).unwrap();
        let cfg = FlowConfig::new(1.0, 0.5, 64, 1e-5, 1.0);
        let out = rk4_step(&c, &cfg, cfg.dt).unwrap();
        assert!(out.state.off_manifold() < 1e-14);
        assert!(out.off_manifold > 0.0 && out.off_manifold < 1e-6);
    }

    #[test]
    fn rejects_off_manifold_and_mismatched_input() {
        let c = latitude(32, 1.0).unwrap();
        let cfg = FlowConfig::new(1.0, 0.5, 64, 1e-4, 1.0);
        assert!(matches!(step_projected_rk4(&c, &cfg), Err(Error::InvalidConfig(_))));
        let pts = c.points().mapv(|x| 1.01 * x);
        let off = ClosedCurve::in_tube(pts, Manifold::Sphere2, c.winding().clone()).unwrap();
        let cfg = FlowConfig::new(1.0, 0.5, 32, 1e-4, 1.0);
        assert!(matches!(step_imex(&off, &cfg), Err(Error::PointOffManifold { .. })));
    }
}

//! The heat-type semigroup `S_ε(t) = exp(-ε t ∂_x⁴)` on periodic fields.

use ndarray::{Array2, ArrayView2};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spectral::SpectralCoeffs;

/// Fourier multiplier `exp(-ε t (2πk)⁴)`.
#[inline]
pub fn semigroup_multiplier(epsilon: f64, t: f64, k: i64) -> f64 {
    let w = 2.0 * PI * k as f64;
    (-epsilon * t * w.powi(4)).exp()
}

fn check(epsilon: f64, t: f64) -> Result<()> {
    if !(epsilon >= 0.0 && t >= 0.0) || !epsilon.is_finite() || !t.is_finite() {
        return Err(Error::InvalidConfig(format!("semigroup needs ε >= 0 and t >= 0, got ε = {epsilon}, t = {t}")));
    }
    Ok(())
}

/// Applies `S_ε(t)` columnwise to a periodic field.
pub fn semigroup_apply(field: ArrayView2<f64>, epsilon: f64, t: f64) -> Result<Array2<f64>> {
    check(epsilon, t)?;
    if epsilon * t == 0.0 {
        return Ok(field.to_owned());
    }
    Ok(SpectralCoeffs::forward(field).synthesize_real(|k| semigroup_multiplier(epsilon, t, k)))
}

/// `max_{ξ ≥ 0} ξ³ exp(-ξ⁴)` by golden-section search after a coarse scan.
pub fn smoothing_constant() -> f64 {
    let f = |x: f64| x.powi(3) * (-x.powi(4)).exp();
    let (mut lo, mut hi) = {
        let h = 1e-3;
        let best = (0..4000).map(|i| i as f64 * h).fold(0.0, |b: f64, x| if f(x) > f(b) { x } else { b });
        ((best - h).max(0.0), best + h)
    };
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if f(x1) < f(x2) {
            lo = x1;
        } else {
            hi = x2;
        }
    }
    f(0.5 * (lo + hi))
}

/// `(εt)^{3/4} sup_{1 ≤ |k| ≤ max_mode} |2πk|³ exp(-εt (2πk)⁴)` over integer modes.
pub fn scaled_mode_sup(epsilon: f64, t: f64, max_mode: usize) -> Result<f64> {
    check(epsilon, t)?;
    let s = epsilon * t;
    Ok((1..=max_mode as i64)
        .map(|k| {
            let w = 2.0 * PI * k as f64;
            s.powf(0.75) * w.powi(3) * semigroup_multiplier(epsilon, t, k)
        })
        .fold(0.0, f64::max))
}

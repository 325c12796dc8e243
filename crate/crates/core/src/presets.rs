//! Named initial curves.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::curve::ClosedCurve;
use crate::error::{Error, Result};
use crate::flow::semigroup_apply;
use crate::manifold::{clifford_embed, Manifold};

const TAU: f64 = 2.0 * PI;

/// Highest Fourier mode drawn by [`random_smooth`].
pub const RANDOM_MAX_MODE: usize = 16;
pub const DEFAULT_DECAY: f64 = 0.5;
/// Size of the random displacement from the north pole on the sphere, relative
/// to the sum of the coefficient envelope.
pub const SPHERE_AMPLITUDE: f64 = 0.125;

/// Initial-condition descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum Preset {
    GreatCircle,
    Latitude { theta: f64 },
    TorusGeodesic { m1: i64, m2: i64 },
    RandomSmooth {
        seed: u64,
        #[serde(default = "default_decay")]
        decay: f64,
    },
    Constant,
}

fn default_decay() -> f64 {
    DEFAULT_DECAY
}

impl Preset {
    pub fn build(&self, n: usize, manifold: Manifold) -> Result<ClosedCurve> {
        match *self {
            Preset::GreatCircle => {
                require(manifold, Manifold::Sphere2)?;
                latitude(n, PI / 2.0)
            }
            Preset::Latitude { theta } => {
                require(manifold, Manifold::Sphere2)?;
                latitude(n, theta)
            }
            Preset::TorusGeodesic { m1, m2 } => torus_geodesic(n, manifold, m1, m2),
            Preset::RandomSmooth { seed, decay } => random_smooth(n, manifold, seed, decay),
            Preset::Constant => constant(n, manifold),
        }
    }
}

fn require(found: Manifold, expected: Manifold) -> Result<()> {
    if found != expected {
        return Err(Error::WrongManifold { expected, found });
    }
    Ok(())
}

/// `(cos 2πx, sin 2πx, 0)`.
pub fn great_circle(n: usize) -> Result<ClosedCurve> {
    latitude(n, PI / 2.0)
}

/// `(sin θ cos 2πx, sin θ sin 2πx, cos θ)`.
pub fn latitude(n: usize, theta: f64) -> Result<ClosedCurve> {
    if !(theta > 0.0 && theta < PI) {
        return Err(Error::InvalidConfig(format!("latitude angle must lie in (0, π), got {theta}")));
    }
    let (s, c) = theta.sin_cos();
    ClosedCurve::from_fn(n, Manifold::Sphere2, |x| vec![s * (TAU * x).cos(), s * (TAU * x).sin(), c])
}

/// A point curve at the first basis point of the target.
pub fn constant(n: usize, manifold: Manifold) -> Result<ClosedCurve> {
    let p = match manifold {
        Manifold::Sphere2 => vec![0.0, 0.0, 1.0],
        Manifold::CliffordTorus2 => clifford_embed(&[0.0, 0.0]).to_vec(),
        Manifold::ChartFlatTorus2 => vec![0.0, 0.0],
    };
    ClosedCurve::from_fn(n, manifold, |_| p.clone())
}

/// Closed geodesic `x ↦ x (m1, m2)` of the flat torus, in the chart or embedded.
pub fn torus_geodesic(n: usize, manifold: Manifold, m1: i64, m2: i64) -> Result<ClosedCurve> {
    chart_curve(n, manifold, [m1 as f64, m2 as f64], |_| [0.0, 0.0])
}

fn chart_curve(n: usize, manifold: Manifold, winding: [f64; 2], wobble: impl Fn(f64) -> [f64; 2]) -> Result<ClosedCurve> {
    let lift = |x: f64| {
        let w = wobble(x);
        [x * winding[0] + w[0], x * winding[1] + w[1]]
    };
    match manifold {
        Manifold::ChartFlatTorus2 => {
            let pts = Array2::from_shape_fn((n, 2), |(i, j)| lift(i as f64 / n as f64)[j]);
            ClosedCurve::with_winding(pts, manifold, Array1::from(winding.to_vec()))
        }
        Manifold::CliffordTorus2 => ClosedCurve::from_fn(n, manifold, |x| clifford_embed(&lift(x)).to_vec()),
        Manifold::Sphere2 => Err(Error::WrongManifold { expected: Manifold::ChartFlatTorus2, found: manifold }),
    }
}

/// Random band-limited Fourier series: `dim` components, modes `1..=RANDOM_MAX_MODE`,
/// coefficients standard normal times `e^{-decay k}`.
struct RandomSeries {
    /// `[component][k - 1]` as (cos, sin) amplitudes.
    coeffs: Vec<Vec<(f64, f64)>>,
}

impl RandomSeries {
    fn draw(rng: &mut ChaCha8Rng, dim: usize, decay: f64) -> Self {
        let coeffs = (0..dim)
            .map(|_| {
                (1..=RANDOM_MAX_MODE)
                    .map(|k| {
                        let w = (-decay * k as f64).exp();
                        let c: f64 = rng.sample(StandardNormal);
                        let s: f64 = rng.sample(StandardNormal);
                        (w * c, w * s)
                    })
                    .collect()
            })
            .collect();
        Self { coeffs }
    }

    fn eval(&self, x: f64) -> Vec<f64> {
        self.coeffs
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(i, &(c, s))| {
                        let (sn, cs) = (TAU * (i + 1) as f64 * x).sin_cos();
                        c * cs + s * sn
                    })
                    .sum()
            })
            .collect()
    }
}

/// Smooth pseudo-random closed curve determined by `seed` and `decay` alone
/// (the same continuous curve is sampled on every grid).
///
/// On the sphere a random series displaces the north pole and the result is
/// normalized pointwise. On the tori a small random wobble is added to the
/// `(1, 0)` geodesic. The result is then smoothed once
/// by the semigroup at scale `(2π · RANDOM_MAX_MODE)⁻⁴` and projected again.
pub fn random_smooth(n: usize, manifold: Manifold, seed: u64, decay: f64) -> Result<ClosedCurve> {
    if !(decay > 0.0) || !decay.is_finite() {
        return Err(Error::InvalidConfig(format!("decay must be > 0, got {decay}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = match manifold {
        Manifold::Sphere2 => {
            let amp = SPHERE_AMPLITUDE / envelope(decay);
            let series = RandomSeries::draw(&mut rng, 3, decay);
            ClosedCurve::from_fn(n, manifold, |x| {
                let w = series.eval(x);
                let p = [amp * w[0], amp * w[1], 1.0 + amp * w[2]];
                let r = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                p.iter().map(|v| v / r).collect()
            })?
        }
        Manifold::CliffordTorus2 | Manifold::ChartFlatTorus2 => {
            let series = RandomSeries::draw(&mut rng, 2, decay);
            let scale = 0.02 / envelope(decay);
            chart_curve(n, manifold, [1.0, 0.0], |x| {
                let w = series.eval(x);
                [scale * w[0], scale * w[1]]
            })?
        }
    };
    resmooth(&raw)
}

fn envelope(decay: f64) -> f64 {
    (1..=RANDOM_MAX_MODE).map(|k| (-decay * k as f64).exp()).sum()
}

fn resmooth(c: &ClosedCurve) -> Result<ClosedCurve> {
    let tau = (TAU * RANDOM_MAX_MODE as f64).powi(-4);
    let periodic = semigroup_apply(c.periodic_part().view(), 1.0, tau)?;
    let mut pts = periodic;
    let n = pts.nrows() as f64;
    for (i, mut row) in pts.rows_mut().into_iter().enumerate() {
        row.scaled_add(i as f64 / n, c.winding());
    }
    c.with_points(pts)?.projected()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SpectralCoeffs;

    #[test]
    fn presets_lie_on_their_targets() {
        for m in [Manifold::Sphere2, Manifold::CliffordTorus2, Manifold::ChartFlatTorus2] {
            let c = random_smooth(64, m, 7, DEFAULT_DECAY).unwrap();
            assert!(c.off_manifold() < 1e-14);
            assert!(constant(16, m).unwrap().off_manifold() < 1e-14);
        }
        assert!(torus_geodesic(32, Manifold::CliffordTorus2, 1, 2).unwrap().off_manifold() < 1e-15);
        assert!(matches!(
            Preset::GreatCircle.build(16, Manifold::ChartFlatTorus2),
            Err(Error::WrongManifold { .. })
        ));
    }

    #[test]
    fn random_smooth_is_deterministic_and_grid_independent() {
        let a = random_smooth(128, Manifold::Sphere2, 3, 0.5).unwrap();
        let b = random_smooth(128, Manifold::Sphere2, 3, 0.5).unwrap();
        assert_eq!(a, b);
        let fine = random_smooth(256, Manifold::Sphere2, 3, 0.5).unwrap();
        for i in 0..128 {
            for k in 0..3 {
                let d = (a.point(i)[k] - fine.point(2 * i)[k]).abs();
                assert!(d < 1e-13, "{d}");
            }
        }
        assert_ne!(a, random_smooth(128, Manifold::Sphere2, 4, 0.5).unwrap());
    }

    #[test]
    fn random_smooth_spectrum_is_resolved() {
        let c = random_smooth(256, Manifold::Sphere2, 11, 0.5).unwrap();
        let s = SpectralCoeffs::forward(c.points());
        let tail = (0..3).map(|k| s.coeff(k, 100).norm()).fold(0.0, f64::max);
        assert!(tail < 1e-13, "{tail}");
    }
}

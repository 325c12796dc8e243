//! Concrete Kähler targets with closed-form extrinsic geometry.
//!
//! Three targets are provided:
//!
//! * [`Manifold::Sphere2`]: the unit sphere in R³, Gaussian curvature 1.
//! * [`Manifold::CliffordTorus2`]: the flat torus R²/Z² embedded isometrically
//!   in R⁴ as the product of two circles of radius 1/(2π).
//! * [`Manifold::ChartFlatTorus2`]: the same flat torus in its global chart,
//!   with coordinates kept as an unwrapped lift (reduced mod 1 only on output).
//!
//! Every operator takes ambient coordinates. The second fundamental form uses
//! the convention `II(X, Y) = normal part of D_X Y`, so on the unit sphere
//! `II(X, Y) = -(X·Y) y`. The complex structure on the sphere is `J_y X = y × X`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radius of each factor circle of the Clifford torus.
pub const CLIFFORD_RADIUS: f64 = 1.0 / (2.0 * PI);

/// Hard off-manifold threshold for operators that need an on-manifold base point.
pub const OFF_MANIFOLD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Manifold {
    Sphere2,
    CliffordTorus2,
    ChartFlatTorus2,
}

impl fmt::Display for Manifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Manifold::Sphere2 => "sphere2",
            Manifold::CliffordTorus2 => "clifford_torus2",
            Manifold::ChartFlatTorus2 => "chart_flat_torus2",
        };
        f.write_str(name)
    }
}

impl Manifold {
    pub fn ambient_dim(self) -> usize {
        match self {
            Manifold::Sphere2 => 3,
            Manifold::CliffordTorus2 => 4,
            Manifold::ChartFlatTorus2 => 2,
        }
    }

    pub fn gaussian_curvature(self) -> f64 {
        match self {
            Manifold::Sphere2 => 1.0,
            Manifold::CliffordTorus2 | Manifold::ChartFlatTorus2 => 0.0,
        }
    }

    /// Radius of the tubular neighbourhood on which the nearest-point
    /// projection is used. The chart has no normal directions.
    pub fn tubular_radius(self) -> f64 {
        match self {
            Manifold::Sphere2 => 0.5,
            Manifold::CliffordTorus2 => 0.5 * CLIFFORD_RADIUS,
            Manifold::ChartFlatTorus2 => f64::INFINITY,
        }
    }

    /// Euclidean distance from `q` to the embedded target.
    pub fn distance(self, q: &[f64]) -> f64 {
        debug_assert_eq!(q.len(), self.ambient_dim());
        match self {
            Manifold::Sphere2 => (norm(q) - 1.0).abs(),
            Manifold::CliffordTorus2 => {
                let d1 = q[0].hypot(q[1]) - CLIFFORD_RADIUS;
                let d2 = q[2].hypot(q[3]) - CLIFFORD_RADIUS;
                d1.hypot(d2)
            }
            Manifold::ChartFlatTorus2 => 0.0,
        }
    }

    /// Values of the implicit defining functions `G^j` at `q`.
    pub fn constraint(self, q: &[f64]) -> Vec<f64> {
        match self {
            Manifold::Sphere2 => vec![dot(q, q) - 1.0],
            Manifold::CliffordTorus2 => {
                let r2 = CLIFFORD_RADIUS * CLIFFORD_RADIUS;
                vec![q[0] * q[0] + q[1] * q[1] - r2, q[2] * q[2] + q[3] * q[3] - r2]
            }
            Manifold::ChartFlatTorus2 => Vec::new(),
        }
    }

    fn check_dim(self, v: &[f64]) -> Result<()> {
        if v.len() != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                found: v.len(),
            });
        }
        Ok(())
    }

    fn check_on(self, y: &[f64]) -> Result<()> {
        self.check_dim(y)?;
        let residual = self.distance(y);
        if residual > OFF_MANIFOLD_TOL {
            return Err(Error::PointOffManifold { residual });
        }
        Ok(())
    }

    /// Nearest-point projection onto the target.
    pub fn project(self, q: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(q)?;
        let mut out = q.to_vec();
        self.project_in_place(&mut out)?;
        Ok(out)
    }

    pub(crate) fn project_in_place(self, q: &mut [f64]) -> Result<()> {
        let distance = self.distance(q);
        let radius = self.tubular_radius();
        if !(distance < radius) {
            return Err(Error::OutOfTubularNeighborhood { distance, radius });
        }
        self.nearest_point_in_place(q);
        Ok(())
    }

    /// Closest point of the target without the tubular-neighbourhood check.
    /// Returns `None` on the focal set, where the minimizer is not unique.
    pub fn nearest_point(self, q: &[f64]) -> Option<Vec<f64>> {
        if q.len() != self.ambient_dim() {
            return None;
        }
        let focal = match self {
            Manifold::Sphere2 => norm(q) == 0.0,
            Manifold::CliffordTorus2 => q[0].hypot(q[1]) == 0.0 || q[2].hypot(q[3]) == 0.0,
            Manifold::ChartFlatTorus2 => false,
        };
        if focal {
            return None;
        }
        let mut out = q.to_vec();
        self.nearest_point_in_place(&mut out);
        Some(out)
    }

    fn nearest_point_in_place(self, q: &mut [f64]) {
        match self {
            Manifold::Sphere2 => {
                let r = norm(q);
                q.iter_mut().for_each(|c| *c /= r);
            }
            Manifold::CliffordTorus2 => {
                for pair in q.chunks_exact_mut(2) {
                    let s = CLIFFORD_RADIUS / pair[0].hypot(pair[1]);
                    pair[0] *= s;
                    pair[1] *= s;
                }
            }
            Manifold::ChartFlatTorus2 => {}
        }
    }

    /// Orthogonal projection `p(y)X` onto `T_y`.
    pub fn tangent_project(self, y: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        self.check_on(y)?;
        self.check_dim(x)?;
        let mut out = x.to_vec();
        self.tangent_project_in_place(y, &mut out);
        Ok(out)
    }

    /// Orthogonal projection `n(y)X = X - p(y)X` onto the normal space.
    pub fn normal_project(self, y: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        let t = self.tangent_project(y, x)?;
        Ok(x.iter().zip(&t).map(|(a, b)| a - b).collect())
    }

    pub(crate) fn tangent_project_in_place(self, y: &[f64], x: &mut [f64]) {
        match self {
            Manifold::Sphere2 => {
                let s = dot(x, y) / dot(y, y);
                x.iter_mut().zip(y).for_each(|(c, yc)| *c -= s * yc);
            }
            Manifold::CliffordTorus2 => {
                for (xp, yp) in x.chunks_exact_mut(2).zip(y.chunks_exact(2)) {
                    let s = (xp[0] * yp[0] + xp[1] * yp[1]) / (yp[0] * yp[0] + yp[1] * yp[1]);
                    xp[0] -= s * yp[0];
                    xp[1] -= s * yp[1];
                }
            }
            Manifold::ChartFlatTorus2 => {}
        }
    }

    /// Size of the normal component of `x` at `y`.
    pub(crate) fn normal_size(self, y: &[f64], x: &[f64]) -> f64 {
        match self {
            Manifold::Sphere2 => (dot(x, y) / norm(y)).abs(),
            Manifold::CliffordTorus2 => {
                let n1 = (x[0] * y[0] + x[1] * y[1]) / y[0].hypot(y[1]);
                let n2 = (x[2] * y[2] + x[3] * y[3]) / y[2].hypot(y[3]);
                n1.hypot(n2)
            }
            Manifold::ChartFlatTorus2 => 0.0,
        }
    }

    /// Second fundamental form `II(y)(X, Y)`: the normal part of the ambient
    /// derivative of an extension of `Y` in direction `X`.
    pub fn second_fundamental_form(self, y: &[f64], x: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        self.check_on(y)?;
        self.check_dim(x)?;
        self.check_dim(z)?;
        let mut out = vec![0.0; y.len()];
        self.sff_into(y, x, z, &mut out);
        Ok(out)
    }

    /// Bilinear in ambient arguments; agrees with the second fundamental form
    /// on tangent arguments.
    pub(crate) fn sff_into(self, y: &[f64], x: &[f64], z: &[f64], out: &mut [f64]) {
        match self {
            Manifold::Sphere2 => {
                let s = -dot(x, z);
                out.iter_mut().zip(y).for_each(|(o, yc)| *o = s * yc);
            }
            Manifold::CliffordTorus2 => {
                let inv_r2 = 1.0 / (CLIFFORD_RADIUS * CLIFFORD_RADIUS);
                for k in 0..2 {
                    let s = -(x[2 * k] * z[2 * k] + x[2 * k + 1] * z[2 * k + 1]) * inv_r2;
                    out[2 * k] = s * y[2 * k];
                    out[2 * k + 1] = s * y[2 * k + 1];
                }
            }
            Manifold::ChartFlatTorus2 => out.iter_mut().for_each(|o| *o = 0.0),
        }
    }

    /// Complex structure transported to the embedded tangent plane.
    pub fn complex_structure(self, y: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        self.check_on(y)?;
        self.check_dim(x)?;
        let mut out = vec![0.0; y.len()];
        self.complex_structure_into(y, x, &mut out);
        Ok(out)
    }

    pub(crate) fn complex_structure_into(self, y: &[f64], x: &[f64], out: &mut [f64]) {
        match self {
            Manifold::Sphere2 => {
                out[0] = y[1] * x[2] - y[2] * x[1];
                out[1] = y[2] * x[0] - y[0] * x[2];
                out[2] = y[0] * x[1] - y[1] * x[0];
            }
            Manifold::CliffordTorus2 => {
                // e1 = (-y1, y0, 0, 0)/r1, e2 = (0, 0, -y3, y2)/r2; J e1 = e2.
                let r1 = y[0].hypot(y[1]);
                let r2 = y[2].hypot(y[3]);
                let c1 = (-x[0] * y[1] + x[1] * y[0]) / r1;
                let c2 = (-x[2] * y[3] + x[3] * y[2]) / r2;
                out[0] = c2 * y[1] / r1;
                out[1] = -c2 * y[0] / r1;
                out[2] = -c1 * y[3] / r2;
                out[3] = c1 * y[2] / r2;
            }
            Manifold::ChartFlatTorus2 => {
                out[0] = -x[1];
                out[1] = x[0];
            }
        }
    }
}

/// Isometric embedding of the chart torus into R⁴.
pub fn clifford_embed(chart: &[f64]) -> [f64; 4] {
    let (s1, c1) = (2.0 * PI * chart[0]).sin_cos();
    let (s2, c2) = (2.0 * PI * chart[1]).sin_cos();
    [
        CLIFFORD_RADIUS * c1,
        CLIFFORD_RADIUS * s1,
        CLIFFORD_RADIUS * c2,
        CLIFFORD_RADIUS * s2,
    ]
}

/// Push a chart tangent vector at `chart` forward into R⁴.
pub fn clifford_pushforward(chart: &[f64], v: &[f64]) -> [f64; 4] {
    let (s1, c1) = (2.0 * PI * chart[0]).sin_cos();
    let (s2, c2) = (2.0 * PI * chart[1]).sin_cos();
    [-s1 * v[0], c1 * v[0], -s2 * v[1], c2 * v[1]]
}

/// Chart coordinates in [0, 1)² of a point on the Clifford torus.
pub fn clifford_chart(p: &[f64]) -> [f64; 2] {
    let wrap = |a: f64| (a / (2.0 * PI)).rem_euclid(1.0);
    [wrap(p[1].atan2(p[0])), wrap(p[3].atan2(p[2]))]
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

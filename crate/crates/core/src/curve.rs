//! Sampled closed curves and tangent fields along them.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::manifold::{Manifold, OFF_MANIFOLD_TOL};
use crate::spectral::SpectralCoeffs;

/// Uniformly sampled closed curve `x_i = i / N` in ambient coordinates.
///
/// For the chart torus the samples are an unwrapped lift: `winding` holds the
/// integer period vector `u(x + 1) - u(x)`; it is zero for embedded targets.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedCurve {
    points: Array2<f64>,
    manifold: Manifold,
    winding: Array1<f64>,
}

pub(crate) fn check_grid(n: usize) -> Result<()> {
    if n < 16 || !n.is_power_of_two() {
        return Err(Error::InvalidGrid(n));
    }
    Ok(())
}

impl ClosedCurve {
    /// Builds an on-manifold curve; every sample must lie on the target to 1e-8.
    pub fn new(points: Array2<f64>, manifold: Manifold) -> Result<Self> {
        let d = manifold.ambient_dim();
        Self::with_winding(points, manifold, Array1::zeros(d))
    }

    pub fn with_winding(points: Array2<f64>, manifold: Manifold, winding: Array1<f64>) -> Result<Self> {
        let curve = Self::in_tube(points, manifold, winding)?;
        let residual = curve.off_manifold();
        if residual > OFF_MANIFOLD_TOL {
            return Err(Error::PointOffManifold { residual });
        }
        Ok(curve)
    }

    /// Builds a curve whose samples need only lie inside the tubular
    /// neighbourhood (states of the regularized flow before projection).
    pub fn in_tube(points: Array2<f64>, manifold: Manifold, winding: Array1<f64>) -> Result<Self> {
        let (n, d) = points.dim();
        check_grid(n)?;
        if d != manifold.ambient_dim() {
            return Err(Error::DimensionMismatch { expected: manifold.ambient_dim(), found: d });
        }
        if winding.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: winding.len() });
        }
        if manifold != Manifold::ChartFlatTorus2 && winding.iter().any(|w| *w != 0.0) {
            return Err(Error::InvalidConfig("only the chart torus admits winding lifts".into()));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite sample".into()));
        }
        let radius = manifold.tubular_radius();
        for row in points.rows() {
            let distance = manifold.distance(row.as_slice().expect("row-major"));
            if !(distance < radius) {
                return Err(Error::OutOfTubularNeighborhood { distance, radius });
            }
        }
        let points = points.as_standard_layout().into_owned();
        Ok(Self { points, manifold, winding })
    }

    /// Samples `f` at the grid nodes.
    pub fn from_fn(n: usize, manifold: Manifold, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        let d = manifold.ambient_dim();
        let mut points = Array2::zeros((n, d));
        for (i, mut row) in points.rows_mut().into_iter().enumerate() {
            let p = f(i as f64 / n as f64);
            if p.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: p.len() });
            }
            row.iter_mut().zip(p).for_each(|(r, v)| *r = v);
        }
        Self::new(points, manifold)
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn points(&self) -> ArrayView2<'_, f64> {
        self.points.view()
    }

    pub fn into_points(self) -> Array2<f64> {
        self.points
    }

    pub fn winding(&self) -> &Array1<f64> {
        &self.winding
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.points.row(i).to_slice().expect("row-major")
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 / self.len() as f64
    }

    /// Largest distance of a sample from the target.
    pub fn off_manifold(&self) -> f64 {
        self.points
            .rows()
            .into_iter()
            .map(|r| self.manifold.distance(r.as_slice().expect("row-major")))
            .fold(0.0, f64::max)
    }

    /// Replaces the samples keeping manifold and winding (tube check only).
    pub fn with_points(&self, points: Array2<f64>) -> Result<Self> {
        Self::in_tube(points, self.manifold, self.winding.clone())
    }

    /// Periodic part `u(x) - x w` of the lift.
    pub fn periodic_part(&self) -> Array2<f64> {
        let mut p = self.points.clone();
        if self.winding.iter().any(|w| *w != 0.0) {
            let n = self.len() as f64;
            for (i, mut row) in p.rows_mut().into_iter().enumerate() {
                row.scaled_add(-(i as f64) / n, &self.winding);
            }
        }
        p
    }

    pub fn spectrum(&self) -> SpectralCoeffs {
        SpectralCoeffs::forward(self.periodic_part().view())
    }

    /// `∂_x^order u` for `order >= 1` (periodic even for winding lifts).
    pub fn derivative(&self, order: u32) -> Array2<f64> {
        self.derivatives(order).pop().expect("order >= 1")
    }

    /// `[u_x, u_xx, …]` up to `max_order`, sharing one forward transform.
    pub fn derivatives(&self, max_order: u32) -> Vec<Array2<f64>> {
        let spec = self.spectrum();
        (1..=max_order)
            .map(|k| {
                let mut d = spec.derivative(k);
                if k == 1 {
                    d += &self.winding.view().insert_axis(Axis(0));
                }
                d
            })
            .collect()
    }

    /// Nearest-point projection of every sample.
    pub fn projected(&self) -> Result<Self> {
        let mut points = self.points.clone();
        for mut row in points.rows_mut() {
            self.manifold.project_in_place(row.as_slice_mut().expect("row-major"))?;
        }
        Ok(Self { points, manifold: self.manifold, winding: self.winding.clone() })
    }

    /// Reparametrization `x -> x + s / N` by a circular shift of samples.
    pub fn shifted(&self, s: usize) -> Self {
        let n = self.len();
        let mut points = Array2::zeros(self.points.dim());
        for i in 0..n {
            let j = (i + s) % n;
            let mut row = points.row_mut(i);
            row.assign(&self.points.row(j));
            if i + s >= n {
                row += &self.winding;
            }
        }
        Self { points, manifold: self.manifold, winding: self.winding.clone() }
    }

    /// Samples reduced to the fundamental domain (chart torus coordinates mod 1).
    pub fn wrapped(&self) -> Array2<f64> {
        match self.manifold {
            Manifold::ChartFlatTorus2 => self.points.mapv(|v| v.rem_euclid(1.0)),
            _ => self.points.clone(),
        }
    }
}

/// Ambient vectors attached to the samples of a base curve.
#[derive(Debug, Clone)]
pub struct TangentField<'c> {
    base: &'c ClosedCurve,
    vectors: Array2<f64>,
}

/// Relative tangency tolerance for fields declared tangent.
pub const TANGENCY_TOL: f64 = 1e-8;

impl<'c> TangentField<'c> {
    /// Checks pointwise tangency to `TANGENCY_TOL · max|V|`.
    pub fn new(base: &'c ClosedCurve, vectors: Array2<f64>) -> Result<Self> {
        let field = Self::unchecked(base, vectors)?;
        let residual = field.tangency_residual();
        if residual > TANGENCY_TOL * field.max_norm().max(f64::MIN_POSITIVE) {
            return Err(Error::TangencyViolation { residual });
        }
        Ok(field)
    }

    pub(crate) fn unchecked(base: &'c ClosedCurve, vectors: Array2<f64>) -> Result<Self> {
        if vectors.dim() != base.points.dim() {
            return Err(Error::DimensionMismatch { expected: base.dim(), found: vectors.ncols() });
        }
        Ok(Self { base, vectors: vectors.as_standard_layout().into_owned() })
    }

    /// Tangent projection of arbitrary ambient vectors.
    pub fn projected(base: &'c ClosedCurve, mut vectors: Array2<f64>) -> Result<Self> {
        let residual = base.off_manifold();
        if residual > OFF_MANIFOLD_TOL {
            return Err(Error::PointOffManifold { residual });
        }
        for (i, mut row) in vectors.rows_mut().into_iter().enumerate() {
            base.manifold.tangent_project_in_place(base.point(i), row.as_slice_mut().expect("row-major"));
        }
        Self::unchecked(base, vectors)
    }

    pub fn zeros(base: &'c ClosedCurve) -> Self {
        Self { base, vectors: Array2::zeros(base.points.dim()) }
    }

    pub fn base(&self) -> &'c ClosedCurve {
        self.base
    }

    pub fn vectors(&self) -> ArrayView2<'_, f64> {
        self.vectors.view()
    }

    pub fn into_vectors(self) -> Array2<f64> {
        self.vectors
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        self.vectors.row(i).to_slice().expect("row-major")
    }

    pub fn max_norm(&self) -> f64 {
        self.vectors
            .rows()
            .into_iter()
            .map(|r| r.dot(&r).sqrt())
            .fold(0.0, f64::max)
    }

    /// Largest pointwise normal component.
    pub fn tangency_residual(&self) -> f64 {
        let m = self.base.manifold;
        (0..self.vectors.nrows())
            .map(|i| m.normal_size(self.base.point(i), self.vector(i)))
            .fold(0.0, f64::max)
    }

    pub(crate) fn same_base(&self, other: &TangentField<'_>) -> bool {
        std::ptr::eq(self.base, other.base) || self.base == other.base
    }
}

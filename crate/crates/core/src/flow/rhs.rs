//! Right-hand sides of the dispersive flow and of its regularization.
//!
//! With `A(y)(X, Y) = -II(y)(X, Y)` and `κ = v_xx + A(v_x, v_x)`,
//!
//! ```text
//! F(v) = a { v_xxx + [A(v_x, v_x)]_x + A(κ, v_x) } + J̃ κ + b |v_x|² v_x
//!      - ε { [A(v_x, v_x)]_xx + [A(κ, v_x)]_x + A(v_xxx + [A(v_x, v_x)]_x + A(κ, v_x), v_x) }
//! ```
//!
//! and the regularized equation is `v_t = -ε v_xxxx + F(π ∘ v)`.

use ndarray::{Array2, ArrayView2, Zip};

use crate::curve::ClosedCurve;
use crate::error::{Error, Result};
use crate::manifold::{Manifold, OFF_MANIFOLD_TOL};
use crate::spectral::spectral_derivative;

/// Relative tangency tolerance for the dispersive right-hand side.
pub const RHS_TANGENCY_TOL: f64 = 1e-6;

/// Rowwise `A(y)(X, Y) = -II(y)(X, Y)`.
fn shape(curve: &ClosedCurve, x: ArrayView2<f64>, y: ArrayView2<f64>) -> Array2<f64> {
    let m = curve.manifold();
    let mut out = Array2::zeros(x.dim());
    if m == Manifold::ChartFlatTorus2 {
        return out;
    }
    for (i, mut row) in out.rows_mut().into_iter().enumerate() {
        let o = row.as_slice_mut().expect("row-major");
        let xi = x.row(i);
        let yi = y.row(i);
        m.sff_into(curve.point(i), xi.as_slice().expect("row-major"), yi.as_slice().expect("row-major"), o);
        o.iter_mut().for_each(|v| *v = -*v);
    }
    out
}

fn complex_rows(curve: &ClosedCurve, x: ArrayView2<f64>) -> Array2<f64> {
    let m = curve.manifold();
    let mut out = Array2::zeros(x.dim());
    for (i, mut row) in out.rows_mut().into_iter().enumerate() {
        let xi = x.row(i);
        m.complex_structure_into(curve.point(i), xi.as_slice().expect("row-major"), row.as_slice_mut().expect("row-major"));
    }
    out
}

/// `F(v)` for an on-manifold curve, without validation. With
/// `include_linear = false` the term `a v_xxx` is left out.
pub(crate) fn flow_field(curve: &ClosedCurve, a: f64, b: f64, epsilon: f64, include_linear: bool) -> Array2<f64> {
    let d = curve.derivatives(3);
    let (v1, v2, v3) = (&d[0], &d[1], &d[2]);
    let flat = curve.manifold() == Manifold::ChartFlatTorus2;

    let a1 = shape(curve, v1.view(), v1.view());
    let kappa = v2 + &a1;
    let da1 = if flat { Array2::zeros(a1.dim()) } else { spectral_derivative(a1.view(), 1) };
    let bk = shape(curve, kappa.view(), v1.view());
    // ∇_x² u_x in ambient form.
    let third = v3 + &da1 + &bk;

    let mut out = complex_rows(curve, kappa.view());
    if a != 0.0 {
        if include_linear {
            out.scaled_add(a, &third);
        } else {
            out.scaled_add(a, &(&third - v3));
        }
    }
    if b != 0.0 {
        for (mut row, vx) in out.rows_mut().into_iter().zip(v1.rows()) {
            let s = b * vx.dot(&vx);
            row.scaled_add(s, &vx);
        }
    }
    if epsilon != 0.0 && !flat {
        let dda1 = spectral_derivative(a1.view(), 2);
        let dbk = spectral_derivative(bk.view(), 1);
        let c = shape(curve, third.view(), v1.view());
        Zip::from(&mut out)
            .and(&dda1)
            .and(&dbk)
            .and(&c)
            .for_each(|o, p, q, r| *o -= epsilon * (p + q + r));
    }
    out
}

/// `a ∇_x² u_x + J ∇_x u_x + b |u_x|² u_x` for an on-manifold curve.
pub fn dispersive_rhs(curve: &ClosedCurve, a: f64, b: f64) -> Result<Array2<f64>> {
    let residual = curve.off_manifold();
    if residual > OFF_MANIFOLD_TOL {
        return Err(Error::PointOffManifold { residual });
    }
    let rhs = flow_field(curve, a, b, 0.0, true);
    check_tangent(curve, &rhs)?;
    Ok(rhs)
}

fn check_tangent(curve: &ClosedCurve, rhs: &Array2<f64>) -> Result<()> {
    let m = curve.manifold();
    let mut residual: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for (i, row) in rhs.rows().into_iter().enumerate() {
        let r = row.as_slice().expect("row-major");
        residual = residual.max(m.normal_size(curve.point(i), r));
        scale = scale.max(row.dot(&row).sqrt());
    }
    if residual > RHS_TANGENCY_TOL * scale {
        return Err(Error::TangencyViolation { residual });
    }
    Ok(())
}

/// `-ε v_xxxx + F(π ∘ v)` for a tube-valued state.
pub fn regularized_rhs(state: &ClosedCurve, a: f64, b: f64, epsilon: f64) -> Result<Array2<f64>> {
    let projected = state.projected()?;
    let mut out = flow_field(&projected, a, b, epsilon, true);
    if epsilon != 0.0 {
        out.scaled_add(-epsilon, &state.derivative(4));
    }
    Ok(out)
}

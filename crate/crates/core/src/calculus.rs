//! Covariant calculus along sampled curves.
//!
//! The covariant derivative along `u` is discretized as `p(u) ∘ ∂_x` with the
//! spectral derivative; `L²` inner products use the uniform trapezoid rule.

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curve::{ClosedCurve, TangentField};
use crate::error::{Error, Result};
use crate::manifold::{dot, OFF_MANIFOLD_TOL};
use crate::spectral::{l2_inner, spectral_derivative};

pub const MAX_TOWER_ORDER: usize = 6;
pub const MAX_SOBOLEV_ORDER: usize = 5;

/// Tangent projection of each row of `vectors` at the matching sample of `curve`.
pub(crate) fn project_rows(curve: &ClosedCurve, vectors: &mut Array2<f64>) {
    let m = curve.manifold();
    for (i, mut row) in vectors.rows_mut().into_iter().enumerate() {
        m.tangent_project_in_place(curve.point(i), row.as_slice_mut().expect("row-major"));
    }
}

fn ensure_on_manifold(curve: &ClosedCurve) -> Result<()> {
    let residual = curve.off_manifold();
    if residual > OFF_MANIFOLD_TOL {
        return Err(Error::PointOffManifold { residual });
    }
    Ok(())
}

/// `u_x` as a tangent field.
pub fn velocity(curve: &ClosedCurve) -> TangentField<'_> {
    TangentField::unchecked(curve, curve.derivative(1)).expect("shape matches")
}

/// `∇_x V = p(u) ∂_x V`.
pub fn covariant_derivative<'c>(field: &TangentField<'c>) -> Result<TangentField<'c>> {
    let base = field.base();
    ensure_on_manifold(base)?;
    let residual = field.tangency_residual();
    if residual > crate::curve::TANGENCY_TOL * field.max_norm().max(1.0) {
        return Err(Error::TangencyViolation { residual });
    }
    Ok(covariant_derivative_unchecked(field))
}

pub(crate) fn covariant_derivative_unchecked<'c>(field: &TangentField<'c>) -> TangentField<'c> {
    let base = field.base();
    let mut d = spectral_derivative(field.vectors(), 1);
    project_rows(base, &mut d);
    TangentField::unchecked(base, d).expect("shape matches")
}

/// `[u_x, ∇_x u_x, …, ∇_x^j u_x]`.
pub fn covariant_tower(curve: &ClosedCurve, j: usize) -> Result<Vec<TangentField<'_>>> {
    if j > MAX_TOWER_ORDER {
        return Err(Error::OrderTooLarge { order: j, max: MAX_TOWER_ORDER });
    }
    ensure_on_manifold(curve)?;
    Ok(tower_unchecked(curve, j))
}

pub(crate) fn tower_unchecked(curve: &ClosedCurve, j: usize) -> Vec<TangentField<'_>> {
    let mut tower = Vec::with_capacity(j + 1);
    tower.push(velocity(curve));
    for k in 0..j {
        let next = covariant_derivative_unchecked(&tower[k]);
        tower.push(next);
    }
    tower
}

/// `‖X‖²_{L²}` of a field.
pub fn l2_norm_sq(field: &TangentField<'_>) -> f64 {
    l2_inner(field.vectors(), field.vectors())
}

pub fn l2_pairing(x: &TangentField<'_>, y: &TangentField<'_>) -> f64 {
    l2_inner(x.vectors(), y.vectors())
}

/// Bundle-valued Sobolev norm `(Σ_{j≤m} ‖∇_x^j u_x‖²)^{1/2}`.
pub fn sobolev_norm(curve: &ClosedCurve, m: usize) -> Result<f64> {
    Ok(sobolev_norms(curve, m)?.pop().expect("m + 1 entries"))
}

/// `[‖u_x‖_{H^0}, ‖u_x‖_{H^1}, …, ‖u_x‖_{H^m}]` from a single tower.
pub fn sobolev_norms(curve: &ClosedCurve, m: usize) -> Result<Vec<f64>> {
    if m > MAX_SOBOLEV_ORDER {
        return Err(Error::OrderTooLarge { order: m, max: MAX_SOBOLEV_ORDER });
    }
    let tower = covariant_tower(curve, m)?;
    let mut acc = 0.0;
    Ok(tower
        .iter()
        .map(|f| {
            acc += l2_norm_sq(f);
            acc.sqrt()
        })
        .collect())
}

/// `R(X, Y)Z = K {g(Y, Z) X - g(X, Z) Y}` for constant curvature `K`.
pub fn curvature_apply<'c>(
    k: f64,
    x: &TangentField<'c>,
    y: &TangentField<'c>,
    z: &TangentField<'c>,
) -> Result<TangentField<'c>> {
    if !x.same_base(y) || !x.same_base(z) {
        return Err(Error::BaseMismatch);
    }
    let mut out = Array2::zeros(x.vectors().dim());
    for i in 0..out.nrows() {
        let (xi, yi, zi) = (x.vector(i), y.vector(i), z.vector(i));
        let gyz = dot(yi, zi);
        let gxz = dot(xi, zi);
        for c in 0..out.ncols() {
            out[[i, c]] = k * (gyz * xi[c] - gxz * yi[c]);
        }
    }
    TangentField::unchecked(x.base(), out)
}

/// Pointwise complex structure of a tangent field.
pub fn complex_structure_field<'c>(field: &TangentField<'c>) -> TangentField<'c> {
    let base = field.base();
    let m = base.manifold();
    let mut out = Array2::zeros(field.vectors().dim());
    for (i, mut row) in out.rows_mut().into_iter().enumerate() {
        m.complex_structure_into(base.point(i), field.vector(i), row.as_slice_mut().expect("row-major"));
    }
    TangentField::unchecked(base, out).expect("shape matches")
}

/// Integration-by-parts residuals of a smooth curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResiduals {
    /// `|∫ g(∇_x^{l+3} u_x, ∇_x^l u_x) dx|` for `l = 0, 1, 2`.
    pub third_order: [f64; 3],
    /// `|∫ g(∇_x^{l+1} J ∇_x u_x, ∇_x^l u_x) dx|` for `l = 0, 1, 2`.
    pub complex: [f64; 3],
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        self.third_order.iter().chain(&self.complex).fold(0.0, |m, r| m.max(*r))
    }
}

/// Residuals of the identities that vanish on every smooth closed curve.
pub fn identity_residuals(curve: &ClosedCurve) -> Result<IdentityResiduals> {
    ensure_on_manifold(curve)?;
    let tower = tower_unchecked(curve, 5);
    let mut j_tower = vec![complex_structure_field(&tower[1])];
    for k in 0..3 {
        let next = covariant_derivative_unchecked(&j_tower[k]);
        j_tower.push(next);
    }
    let mut out = IdentityResiduals { third_order: [0.0; 3], complex: [0.0; 3] };
    for l in 0..3 {
        out.third_order[l] = l2_pairing(&tower[l + 3], &tower[l]).abs();
        out.complex[l] = l2_pairing(&j_tower[l + 1], &tower[l]).abs();
    }
    Ok(out)
}

/// Largest `|g(R(X,Y)Z, W) - g(R(W,Z)Y, X)|` over `samples` random quadruples
/// of tangent fields along `curve`, with entries drawn from `[-1, 1]`.
pub fn curvature_symmetry_residual(curve: &ClosedCurve, k: f64, samples: usize, seed: u64) -> Result<f64> {
    ensure_on_manifold(curve)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, d) = (curve.len(), curve.dim());
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let mut draw = || {
            let raw = Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..=1.0));
            TangentField::projected(curve, raw)
        };
        let (x, y, z, w) = (draw()?, draw()?, draw()?, draw()?);
        let lhs = curvature_apply(k, &x, &y, &z)?;
        let rhs = curvature_apply(k, &w, &z, &y)?;
        for i in 0..n {
            worst = worst.max((dot(lhs.vector(i), w.vector(i)) - dot(rhs.vector(i), x.vector(i))).abs());
        }
    }
    Ok(worst)
}

/// Sup-norm residual of
/// `∇_t ∇_x^l u_x = ∇_x^{l+1} u_t + Σ_{j<l} ∇_x^j [R(u_t, u_x) ∇_x^{l-j-1} u_x]`
/// at time `t` of the one-parameter family `path`, with `∂_t` replaced by the
/// centred difference of step `h`.
pub fn commutator_residual(
    path: impl Fn(f64) -> Result<ClosedCurve>,
    t: f64,
    h: f64,
    l: usize,
) -> Result<f64> {
    if l + 1 > MAX_TOWER_ORDER {
        return Err(Error::OrderTooLarge { order: l + 1, max: MAX_TOWER_ORDER });
    }
    let (before, here, after) = (path(t - h)?, path(t)?, path(t + h)?);
    for c in [&before, &here, &after] {
        ensure_on_manifold(c)?;
    }
    let k = here.manifold().gaussian_curvature();
    let centred = |f: ArrayView2<f64>, g: ArrayView2<f64>| (&f - &g) / (2.0 * h);

    let top = |c: &ClosedCurve| tower_unchecked(c, l).pop().expect("l + 1 entries").into_vectors();
    let lhs = TangentField::projected(&here, centred(top(&after).view(), top(&before).view()))?;

    let ut = TangentField::projected(&here, centred(after.periodic_part().view(), before.periodic_part().view()))?;
    let tower = tower_unchecked(&here, l);
    let mut rhs = ut.clone();
    for _ in 0..=l {
        rhs = covariant_derivative_unchecked(&rhs);
    }
    let mut rhs = rhs.into_vectors();
    for j in 0..l {
        let mut term = curvature_apply(k, &ut, &tower[0], &tower[l - j - 1])?;
        for _ in 0..j {
            term = covariant_derivative_unchecked(&term);
        }
        rhs += &term.vectors();
    }
    Ok((&lhs.vectors() - &rhs).iter().fold(0.0, |m: f64, v| m.max(v.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::Manifold;
    use ndarray::Array1;
    use std::f64::consts::PI;

    const TAU: f64 = 2.0 * PI;

    fn great_circle(n: usize) -> ClosedCurve {
        ClosedCurve::from_fn(n, Manifold::Sphere2, |x| vec![(TAU * x).cos(), (TAU * x).sin(), 0.0]).unwrap()
    }

    fn latitude(n: usize, theta: f64) -> ClosedCurve {
        ClosedCurve::from_fn(n, Manifold::Sphere2, |x| {
            vec![theta.sin() * (TAU * x).cos(), theta.sin() * (TAU * x).sin(), theta.cos()]
        })
        .unwrap()
    }

    /// Midpoint-rule quadrature of |p(u) u_xx|² for the latitude circle using
    /// closed-form derivatives, independent of the spectral machinery.
    fn latitude_curvature_quadrature(theta: f64, nodes: usize) -> f64 {
        let (s, c) = theta.sin_cos();
        let mut acc = 0.0;
        for i in 0..nodes {
            let x = (i as f64 + 0.5) / nodes as f64;
            let u = [s * (TAU * x).cos(), s * (TAU * x).sin(), c];
            let uxx = [-s * TAU * TAU * (TAU * x).cos(), -s * TAU * TAU * (TAU * x).sin(), 0.0];
            let nrm = dot(&uxx, &u);
            let t: Vec<f64> = (0..3).map(|k| uxx[k] - nrm * u[k]).collect();
            acc += dot(&t, &t);
        }
        acc / nodes as f64
    }

    #[test]
    fn great_circle_is_a_geodesic() {
        let c = great_circle(64);
        let tower = covariant_tower(&c, 3).unwrap();
        assert!((l2_norm_sq(&tower[0]).sqrt() - TAU).abs() < 1e-12);
        // Rounding noise is amplified by at most the largest wavenumber per derivative.
        let kmax = PI * 64.0;
        for (k, f) in tower.iter().enumerate().skip(1) {
            assert!(f.max_norm() < 1e-13 * TAU * kmax.powi(k as i32), "order {k}: {}", f.max_norm());
        }
    }

    #[test]
    fn straight_chart_line_has_zero_acceleration() {
        let n = 32;
        let pts = Array2::from_shape_fn((n, 2), |(i, j)| if j == 0 { i as f64 / n as f64 } else { 0.0 });
        let c = ClosedCurve::with_winding(pts, Manifold::ChartFlatTorus2, Array1::from(vec![1.0, 0.0])).unwrap();
        let d = covariant_derivative(&velocity(&c)).unwrap();
        assert!(d.max_norm() < 1e-12);
    }

    #[test]
    fn constant_curve_tower_vanishes() {
        let c = ClosedCurve::from_fn(16, Manifold::Sphere2, |_| vec![0.0, 0.0, 1.0]).unwrap();
        for f in covariant_tower(&c, 4).unwrap() {
            assert!(f.max_norm() < 1e-14);
        }
        for m in 0..=5 {
            assert!(sobolev_norm(&c, m).unwrap() < 1e-14);
        }
    }

    #[test]
    fn latitude_acceleration_matches_closed_form_and_quadrature() {
        let theta = 1.1;
        let c = latitude(64, theta);
        let tower = covariant_tower(&c, 1).unwrap();
        let got = l2_norm_sq(&tower[1]);
        let closed = TAU.powi(4) * theta.sin().powi(2) * theta.cos().powi(2);
        let quad = latitude_curvature_quadrature(theta, 997);
        assert!((quad - closed).abs() < 1e-10 * closed);
        assert!((got - closed).abs() < 1e-10 * closed);
        let h1 = sobolev_norm(&c, 1).unwrap();
        let expected = (TAU.powi(2) * theta.sin().powi(2) + closed).sqrt();
        assert!((h1 - expected).abs() < 1e-10 * expected);
    }

    #[test]
    fn great_circle_sobolev_norm() {
        let c = great_circle(64);
        assert!((sobolev_norm(&c, 2).unwrap() - TAU).abs() < 1e-9);
    }

    #[test]
    fn intrinsic_and_extrinsic_acceleration_agree() {
        // p(u) u_xx = u_xx - II(u_x, u_x) on a tilted, wobbling sphere curve.
        let c = ClosedCurve::from_fn(128, Manifold::Sphere2, |x| {
            let p = [
                (TAU * x).cos() + 0.2 * (2.0 * TAU * x).sin(),
                (TAU * x).sin(),
                0.4 + 0.3 * (3.0 * TAU * x).cos(),
            ];
            let r = dot(&p, &p).sqrt();
            p.iter().map(|v| v / r).collect()
        })
        .unwrap();
        let d = c.derivatives(2);
        let cov = covariant_derivative(&velocity(&c)).unwrap();
        let m = c.manifold();
        let mut worst: f64 = 0.0;
        for i in 0..c.len() {
            let ux = d[0].row(i).to_vec();
            let ii = m.second_fundamental_form(c.point(i), &ux, &ux).unwrap();
            for k in 0..3 {
                worst = worst.max((d[1][[i, k]] - ii[k] - cov.vector(i)[k]).abs());
            }
        }
        assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn sobolev_norms_are_monotone() {
        let c = latitude(64, 0.7);
        let norms = sobolev_norms(&c, 5).unwrap();
        assert!(norms.windows(2).all(|w| w[1] >= w[0]));
        assert!(matches!(sobolev_norms(&c, 6), Err(Error::OrderTooLarge { .. })));
        assert!(matches!(covariant_tower(&c, 7), Err(Error::OrderTooLarge { .. })));
    }

    #[test]
    fn curvature_tensor_examples() {
        let c = latitude(16, 0.9);
        let v = velocity(&c);
        let jv = complex_structure_field(&v);
        // X = Y gives zero.
        let r = curvature_apply(1.0, &v, &v, &jv).unwrap();
        assert!(r.max_norm() < 1e-14);
        // K = 0 gives zero.
        let r = curvature_apply(0.0, &v, &jv, &jv).unwrap();
        assert!(r.max_norm() == 0.0);
        // Orthonormal X ⊥ Z with Y = Z returns X.
        let scale = 1.0 / l2_norm_sq(&v).sqrt();
        let x = TangentField::unchecked(&c, v.vectors().mapv(|a| a * scale)).unwrap();
        let z = complex_structure_field(&x);
        let r = curvature_apply(1.0, &x, &z, &z).unwrap();
        let diff = &r.vectors() - &x.vectors();
        assert!(diff.iter().all(|d| d.abs() < 1e-14));
    }

    #[test]
    fn curvature_rejects_mixed_bases() {
        let c1 = latitude(16, 0.9);
        let c2 = latitude(16, 0.8);
        let v1 = velocity(&c1);
        let v2 = velocity(&c2);
        assert_eq!(curvature_apply(1.0, &v1, &v2, &v1).unwrap_err(), Error::BaseMismatch);
    }

    #[test]
    fn identities_vanish_on_the_great_circle() {
        let r = identity_residuals(&great_circle(64)).unwrap();
        assert!(r.third_order[0] < 1e-10 && r.complex[0] < 1e-10, "{r:?}");
    }

    #[test]
    fn integration_by_parts_identity_is_exact_up_to_rounding() {
        // The spectral differentiation matrix is skew, so once both arguments
        // are tangent (l ≥ 1) the pairing vanishes on every grid.
        for n in [32usize, 64] {
            let c = crate::presets::random_smooth(n, Manifold::Sphere2, 3, 0.5).unwrap();
            let tower = tower_unchecked(&c, 5);
            let r = identity_residuals(&c).unwrap();
            for l in 1..3 {
                let scale = l2_norm_sq(&tower[l + 3]).sqrt() * l2_norm_sq(&tower[l]).sqrt();
                assert!(r.third_order[l] < 1e-14 * scale, "l={l}: {r:?}");
            }
        }
    }

    #[test]
    fn complex_identity_converges_spectrally() {
        let coarse = identity_residuals(&crate::presets::random_smooth(64, Manifold::Sphere2, 3, 0.5).unwrap()).unwrap();
        let fine = identity_residuals(&crate::presets::random_smooth(128, Manifold::Sphere2, 3, 0.5).unwrap()).unwrap();
        assert!(fine.complex[2] < 1e-4 * coarse.complex[2], "{coarse:?} {fine:?}");
    }

    #[test]
    fn curvature_symmetry_holds_pointwise() {
        for m in [Manifold::Sphere2, Manifold::CliffordTorus2] {
            let c = crate::presets::random_smooth(32, m, 1, 0.5).unwrap();
            assert!(curvature_symmetry_residual(&c, 1.0, 20, 9).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn commutator_residual_is_second_order_in_the_step() {
        let m = Manifold::Sphere2;
        let c = crate::presets::random_smooth(64, m, 3, 1.0).unwrap();
        let d = crate::presets::random_smooth(64, m, 4, 1.0).unwrap();
        let path = |t: f64| {
            let pts = &c.points() + &((&d.points() - &c.points()) * (t * t + t));
            ClosedCurve::in_tube(pts, m, c.winding().clone())?.projected()
        };
        for l in 0..2 {
            let r: Vec<f64> = [4e-4, 2e-4, 1e-4].iter().map(|&h| commutator_residual(path, 0.3, h, l).unwrap()).collect();
            for w in r.windows(2) {
                assert!((w[0] / w[1]).log2() > 1.8, "l={l}: {r:?}");
            }
        }
        assert!(commutator_residual(path, 0.3, 1e-4, 6).is_err());
    }

    #[test]
    fn complex_structure_is_kahler_along_curves() {
        for m in [Manifold::Sphere2, Manifold::CliffordTorus2, Manifold::ChartFlatTorus2] {
            let c = crate::presets::random_smooth(64, m, 2, 1.0).unwrap();
            let tower = tower_unchecked(&c, 2);
            let (x, y) = (&tower[1], &tower[2]);
            let (jx, jy) = (complex_structure_field(x), complex_structure_field(y));
            let jjx = complex_structure_field(&jx);
            for i in 0..64 {
                assert!((dot(jx.vector(i), jy.vector(i)) - dot(x.vector(i), y.vector(i))).abs() < 1e-10);
                assert!(dot(jx.vector(i), x.vector(i)).abs() < 1e-10);
                for k in 0..c.dim() {
                    assert!((jjx.vector(i)[k] + x.vector(i)[k]).abs() < 1e-10);
                }
            }
            // ∇_x J = J ∇_x.
            let lhs = covariant_derivative_unchecked(&jx);
            let rhs = complex_structure_field(&covariant_derivative_unchecked(x));
            let err = (&lhs.vectors() - &rhs.vectors()).iter().fold(0.0, |m: f64, v| m.max(v.abs()));
            assert!(err < 1e-8 * x.max_norm().max(1.0), "{m}: {err}");
        }
    }

    #[test]
    fn chart_and_clifford_norms_agree() {
        let lift = |x: f64| [x + 0.05 * (TAU * 3.0 * x).sin(), 2.0 * x + 0.1 * (TAU * x).cos()];
        let n = 128;
        let pts = Array2::from_shape_fn((n, 2), |(i, j)| lift(i as f64 / n as f64)[j]);
        let chart = ClosedCurve::with_winding(pts, Manifold::ChartFlatTorus2, Array1::from(vec![1.0, 2.0])).unwrap();
        let embedded =
            ClosedCurve::from_fn(n, Manifold::CliffordTorus2, |x| crate::manifold::clifford_embed(&lift(x)).to_vec()).unwrap();
        let a = sobolev_norms(&chart, 4).unwrap();
        let b = sobolev_norms(&embedded, 4).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-8 * x, "{a:?} {b:?}");
        }
    }
}

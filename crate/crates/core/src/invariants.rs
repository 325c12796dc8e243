//! Conserved quantities, drift monitoring and exact latitude-circle solutions.

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::calculus::{l2_norm_sq, tower_unchecked};
use crate::curve::ClosedCurve;
use crate::error::{Error, Result};
use crate::flow::Trajectory;
use crate::manifold::{dot, Manifold, OFF_MANIFOLD_TOL};

const TAU: f64 = 2.0 * PI;

/// Highest Sobolev order recorded in reports.
pub const REPORT_ORDER: usize = 3;

/// Invariants of one snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub t: f64,
    /// `‖u_x‖²_{L²}`.
    pub l2_ux: f64,
    #[serde(rename = "E")]
    pub energy: f64,
    /// `‖u_x‖_{H^k}` for `k = 0..=REPORT_ORDER`.
    pub hm_norms: Vec<f64>,
    pub off_manifold: f64,
    pub nt_quantity: Option<f64>,
}

fn on_manifold(c: &ClosedCurve) -> Result<ClosedCurve> {
    if c.off_manifold() > OFF_MANIFOLD_TOL {
        c.projected()
    } else {
        Ok(c.clone())
    }
}

fn mean(n: usize, f: impl Fn(usize) -> f64) -> f64 {
    (0..n).map(f).sum::<f64>() / n as f64
}

/// `E(u) = ‖∇²u_x‖² + (K²/8)∫|u_x|⁶ - K∫g(u_x, ∇u_x)² - (3K/2)∫|u_x|²|∇u_x|²`.
pub fn energy_e(c: &ClosedCurve, k: f64) -> Result<f64> {
    let residual = c.off_manifold();
    if residual > OFF_MANIFOLD_TOL {
        return Err(Error::PointOffManifold { residual });
    }
    Ok(energy_unchecked(c, k))
}

fn energy_unchecked(c: &ClosedCurve, k: f64) -> f64 {
    let t = tower_unchecked(c, 2);
    let n = c.len();
    let sextic = mean(n, |i| dot(t[0].vector(i), t[0].vector(i)).powi(3));
    let cross = mean(n, |i| dot(t[0].vector(i), t[1].vector(i)).powi(2));
    let mixed = mean(n, |i| dot(t[0].vector(i), t[0].vector(i)) * dot(t[1].vector(i), t[1].vector(i)));
    l2_norm_sq(&t[2]) + k * k / 8.0 * sextic - k * cross - 1.5 * k * mixed
}

/// `‖u_xxx‖² - (7/2)‖|u_x||u_xx|‖² - 14‖u_x·u_xx‖² + (21/8)‖|u_x|³‖²` for curves on the sphere.
pub fn nt_quantity(c: &ClosedCurve) -> Result<f64> {
    if c.manifold() != Manifold::Sphere2 {
        return Err(Error::WrongManifold { expected: Manifold::Sphere2, found: c.manifold() });
    }
    let d = c.derivatives(3);
    let n = c.len();
    let row = |a: &Array2<f64>, i: usize| a.row(i).to_vec();
    Ok(mean(n, |i| {
        let (u1, u2, u3) = (row(&d[0], i), row(&d[1], i), row(&d[2], i));
        let s11 = dot(&u1, &u1);
        let s22 = dot(&u2, &u2);
        let s12 = dot(&u1, &u2);
        dot(&u3, &u3) - 3.5 * s11 * s22 - 14.0 * s12 * s12 + 21.0 / 8.0 * s11.powi(3)
    }))
}

/// Invariants of `state` at time `t`; tube-valued states are projected first and
/// their distance to the target is recorded.
pub fn energy_report(t: f64, state: &ClosedCurve) -> Result<EnergyReport> {
    let off_manifold = state.off_manifold();
    let c = on_manifold(state)?;
    let tower = tower_unchecked(&c, REPORT_ORDER);
    let mut acc = 0.0;
    let hm_norms: Vec<f64> = tower
        .iter()
        .map(|f| {
            acc += l2_norm_sq(f);
            acc.sqrt()
        })
        .collect();
    let nt = if c.manifold() == Manifold::Sphere2 { Some(nt_quantity(&c)?) } else { None };
    Ok(EnergyReport {
        t,
        l2_ux: l2_norm_sq(&tower[0]),
        energy: energy_unchecked(&c, c.manifold().gaussian_curvature()),
        hm_norms,
        off_manifold,
        nt_quantity: nt,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftRow {
    pub t: f64,
    pub l2_drift: f64,
    pub energy_drift: f64,
    pub off_manifold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftReport {
    pub rows: Vec<DriftRow>,
    pub max_l2_drift: f64,
    pub max_energy_drift: f64,
    pub max_off_manifold: f64,
}

fn relative(value: f64, reference: f64) -> f64 {
    let d = (value - reference).abs();
    if reference != 0.0 {
        d / reference.abs()
    } else {
        d
    }
}

/// Drifts of `‖u_x‖²` and `E` relative to the first snapshot.
pub fn drift_report(traj: &Trajectory) -> Result<DriftReport> {
    let reports = traj
        .snapshots
        .iter()
        .map(|s| energy_report(s.t, &s.state))
        .collect::<Result<Vec<_>>>()?;
    Ok(drift_from_reports(&reports))
}

pub fn drift_from_reports(reports: &[EnergyReport]) -> DriftReport {
    let Some(first) = reports.first() else {
        return DriftReport { rows: Vec::new(), max_l2_drift: 0.0, max_energy_drift: 0.0, max_off_manifold: 0.0 };
    };
    let rows: Vec<DriftRow> = reports
        .iter()
        .map(|r| DriftRow {
            t: r.t,
            l2_drift: relative(r.l2_ux, first.l2_ux),
            energy_drift: relative(r.energy, first.energy),
            off_manifold: r.off_manifold,
        })
        .collect();
    let max = |f: fn(&DriftRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    DriftReport {
        max_l2_drift: max(|r| r.l2_drift),
        max_energy_drift: max(|r| r.energy_drift),
        max_off_manifold: max(|r| r.off_manifold),
        rows,
    }
}

/// Rotation rate for the `θ = π/3`, `a = 1`, `b = 1/2` latitude circle: `-2π²`.
pub const FM_OMEGA_PI_3: f64 = -2.0 * PI * PI;
/// Translation speed for the same circle: `π²/2`.
pub const FM_SPEED_PI_3: f64 = PI * PI / 2.0;

/// `(ω, c)` such that `R_z(ωt) u₀(x + ct)` solves the flow from the latitude
/// circle at angle `θ`.
pub fn latitude_coefficients(theta: f64, a: f64, b: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    (-TAU * TAU * c, TAU * TAU * (b * s * s - a * c * c))
}

fn supported(a: f64, b: f64) -> bool {
    (a == 0.0 && b == 0.0) || (b - 0.5 * a).abs() <= 1e-12 * a.abs().max(1.0)
}

/// Exact rotating and travelling latitude circle at time `t`, sampled on `n` nodes.
pub fn oracle_latitude_circle(theta: f64, t: f64, a: f64, b: f64, n: usize) -> Result<ClosedCurve> {
    if !supported(a, b) {
        return Err(Error::UnsupportedCoefficients { a, b });
    }
    if !(theta > 0.0 && theta < PI) {
        return Err(Error::InvalidConfig(format!("latitude angle must lie in (0, π), got {theta}")));
    }
    let (omega, speed) = latitude_coefficients(theta, a, b);
    let (s, c) = theta.sin_cos();
    let rot = omega * t;
    ClosedCurve::from_fn(n, Manifold::Sphere2, |x| {
        let phase = TAU * (x + speed * t) + rot;
        vec![s * phase.cos(), s * phase.sin(), c]
    })
}

/// `‖u_t - RHS(u)‖_{L²}` for the oracle state at `n` quadrature nodes, with
/// `u_t` from the ansatz and the extrinsic right-hand side evaluated on the
/// closed-form jet `(u, u_x, u_xx, u_xxx)` of the circle.
pub fn oracle_residual(theta: f64, t: f64, a: f64, b: f64, n: usize) -> Result<f64> {
    if !supported(a, b) {
        return Err(Error::UnsupportedCoefficients { a, b });
    }
    let (omega, speed) = latitude_coefficients(theta, a, b);
    let (s, c) = theta.sin_cos();
    let rate = TAU * speed + omega;
    let mut acc = 0.0;
    for i in 0..n {
        let phase = TAU * (i as f64 / n as f64 + speed * t) + omega * t;
        let (sp, cp) = phase.sin_cos();
        let v = [s * cp, s * sp, c];
        let v1 = [-TAU * s * sp, TAU * s * cp, 0.0];
        let v2 = [-TAU * TAU * s * cp, -TAU * TAU * s * sp, 0.0];
        let v3 = [TAU.powi(3) * s * sp, -TAU.powi(3) * s * cp, 0.0];
        let rhs = sphere_rhs_from_jet(&v, &v1, &v2, &v3, a, b);
        let ut = [-s * rate * sp, s * rate * cp, 0.0];
        acc += (0..3).map(|k| (ut[k] - rhs[k]).powi(2)).sum::<f64>();
    }
    Ok((acc / n as f64).sqrt())
}

/// Extrinsic right-hand side on the unit sphere from a pointwise jet, with
/// `A(X, Y) = (X·Y) v`.
fn sphere_rhs_from_jet(v: &[f64; 3], v1: &[f64; 3], v2: &[f64; 3], v3: &[f64; 3], a: f64, b: f64) -> [f64; 3] {
    let s11 = dot(v1, v1);
    let s12 = dot(v1, v2);
    let kappa: Vec<f64> = (0..3).map(|k| v2[k] + s11 * v[k]).collect();
    let kv = dot(&kappa, v1);
    let mut out = [0.0; 3];
    let cross = [
        v[1] * kappa[2] - v[2] * kappa[1],
        v[2] * kappa[0] - v[0] * kappa[2],
        v[0] * kappa[1] - v[1] * kappa[0],
    ];
    for k in 0..3 {
        let da1 = 2.0 * s12 * v[k] + s11 * v1[k];
        out[k] = a * (v3[k] + da1 + kv * v[k]) + cross[k] + b * s11 * v1[k];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{constant, great_circle, latitude, random_smooth, DEFAULT_DECAY};

    #[test]
    fn constant_curve_has_zero_energy() {
        let c = constant(16, Manifold::Sphere2).unwrap();
        assert_eq!(energy_e(&c, 1.0).unwrap(), 0.0);
        assert_eq!(nt_quantity(&c).unwrap(), 0.0);
    }

    #[test]
    fn great_circle_energy() {
        let c = great_circle(64).unwrap();
        let expected = TAU.powi(6) / 8.0;
        assert!((energy_e(&c, 1.0).unwrap() - expected).abs() < 1e-9 * expected);
        assert!((nt_quantity(&c).unwrap() - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn flat_energy_is_third_derivative_norm() {
        let c = random_smooth(64, Manifold::ChartFlatTorus2, 5, DEFAULT_DECAY).unwrap();
        let u3 = c.derivative(3);
        let expected = crate::spectral::l2_inner(u3.view(), u3.view());
        assert!((energy_e(&c, 0.0).unwrap() - expected).abs() < 1e-10 * expected);
    }

    #[test]
    fn energy_is_quadratic_in_curvature() {
        let c = random_smooth(64, Manifold::Sphere2, 2, DEFAULT_DECAY).unwrap();
        let t = tower_unchecked(&c, 1);
        let n = c.len();
        let sextic = mean(n, |i| dot(t[0].vector(i), t[0].vector(i)).powi(3));
        let cross = mean(n, |i| dot(t[0].vector(i), t[1].vector(i)).powi(2));
        let mixed = mean(n, |i| dot(t[0].vector(i), t[0].vector(i)) * dot(t[1].vector(i), t[1].vector(i)));
        let k = 0.7;
        let h = 1e-3;
        let fd = (energy_e(&c, k + h).unwrap() - energy_e(&c, k - h).unwrap()) / (2.0 * h);
        let exact = k / 4.0 * sextic - cross - 1.5 * mixed;
        assert!((fd - exact).abs() < 1e-8 * exact.abs().max(1.0), "{fd} vs {exact}");
    }

    #[test]
    fn shift_invariance() {
        let c = random_smooth(64, Manifold::Sphere2, 9, DEFAULT_DECAY).unwrap();
        let s = c.shifted(13);
        let (e0, e1) = (energy_e(&c, 1.0).unwrap(), energy_e(&s, 1.0).unwrap());
        assert!((e0 - e1).abs() <= 1e-12 * e0.abs());
        let (n0, n1) = (nt_quantity(&c).unwrap(), nt_quantity(&s).unwrap());
        assert!((n0 - n1).abs() <= 1e-12 * n0.abs());
    }

    #[test]
    fn nt_quantity_needs_the_sphere() {
        let c = constant(16, Manifold::ChartFlatTorus2).unwrap();
        assert!(matches!(nt_quantity(&c), Err(Error::WrongManifold { .. })));
    }

    #[test]
    fn oracle_families() {
        assert!(matches!(oracle_latitude_circle(1.0, 0.0, 1.0, 0.2, 16), Err(Error::UnsupportedCoefficients { .. })));
        let eq = oracle_latitude_circle(PI / 2.0, 0.3, 0.0, 0.0, 32).unwrap();
        let g = great_circle(32).unwrap();
        for (p, q) in eq.points().iter().zip(g.points().iter()) {
            assert!((p - q).abs() < 1e-14);
        }
        let (omega, speed) = latitude_coefficients(PI / 3.0, 1.0, 0.5);
        assert!((omega - FM_OMEGA_PI_3).abs() < 1e-12);
        assert!((speed - FM_SPEED_PI_3).abs() < 1e-12);
        assert_eq!(latitude_coefficients(PI / 3.0, 0.0, 0.0).1, 0.0);
    }

    #[test]
    fn discrete_rhs_reproduces_oracle_velocity() {
        // Spectral third derivatives amplify sample rounding by (πN)³.
        let n = 128;
        for &(a, b) in &[(0.0, 0.0), (1.0, 0.5)] {
            let theta = PI / 3.0;
            let u = oracle_latitude_circle(theta, 0.002, a, b, n).unwrap();
            let rhs = crate::flow::dispersive_rhs(&u, a, b).unwrap();
            let (omega, speed) = latitude_coefficients(theta, a, b);
            let ux = u.derivative(1);
            let mut acc = 0.0;
            for i in 0..n {
                let p = u.point(i);
                let ut = [-omega * p[1] + speed * ux[[i, 0]], omega * p[0] + speed * ux[[i, 1]], speed * ux[[i, 2]]];
                acc += (0..3).map(|k| (ut[k] - rhs[[i, k]]).powi(2)).sum::<f64>();
            }
            let r = (acc / n as f64).sqrt();
            let budget = 1e-15 * (PI * n as f64).powi(if a == 0.0 { 2 } else { 3 });
            assert!(r <= budget, "a={a}: {r} > {budget}");
        }
    }

    #[test]
    fn oracle_residuals_vanish() {
        for &(a, b) in &[(0.0, 0.0), (1.0, 0.5), (-0.4, -0.2)] {
            for &theta in &[PI / 3.0, 0.4, 2.5] {
                let r = oracle_residual(theta, 0.013, a, b, 128).unwrap();
                assert!(r <= 1e-10, "θ={theta} a={a} b={b}: {r}");
            }
        }
        assert_eq!(latitude(16, PI / 3.0).unwrap(), oracle_latitude_circle(PI / 3.0, 0.0, 1.0, 0.5, 16).unwrap());
    }
}

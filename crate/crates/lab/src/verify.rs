//! Property suites behind `dcl verify`.

use std::f64::consts::PI;

use clap::ValueEnum;
use dcl_core::calculus::{commutator_residual, curvature_symmetry_residual, identity_residuals};
use dcl_core::flow::{evolve_strided, scaled_mode_sup, smoothing_constant, FlowConfig, Integrator};
use dcl_core::invariants::{oracle_latitude_circle, oracle_residual};
use dcl_core::manifold::clifford_embed;
use dcl_core::presets::{latitude, random_smooth, torus_geodesic};
use dcl_core::spectral::{l2_norm, spectral_derivative};
use dcl_core::{ClosedCurve, Manifold};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Identities,
    Projections,
    Oracles,
    Maxprinciple,
    Smoothing,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Projections => "projections",
            Suite::Oracles => "oracles",
            Suite::Maxprinciple => "maxprinciple",
            Suite::Smoothing => "smoothing",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
}

/// One measured quantity; checks without a bound are informational.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub grid: usize,
    pub value: f64,
    pub bound: Option<Bound>,
}

impl Check {
    fn new(name: impl Into<String>, grid: usize, value: f64, bound: Option<Bound>) -> Self {
        Self { name: name.into(), grid, value, bound }
    }

    pub fn passed(&self) -> Option<bool> {
        self.bound.map(|b| match b {
            Bound::AtMost(x) => self.value <= x,
            Bound::AtLeast(x) => self.value >= x,
        })
    }

    pub fn cells(&self, suite: Suite) -> Vec<String> {
        let bound = match self.bound {
            Some(Bound::AtMost(x)) => format!("<= {x:e}"),
            Some(Bound::AtLeast(x)) => format!(">= {x:e}"),
            None => String::new(),
        };
        let pass = self.passed().map_or_else(String::new, |p| p.to_string());
        vec![suite.name().into(), self.name.clone(), self.grid.to_string(), format!("{:e}", self.value), bound, pass]
    }
}

pub const CHECK_COLUMNS: [&str; 6] = ["suite", "check", "grid", "value", "bound", "pass"];

pub fn run_suite(suite: Suite, grids: &[usize]) -> Result<Vec<Check>> {
    if grids.is_empty() {
        return Err(LabError::config("at least one grid size is required"));
    }
    let mut sorted = grids.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    for &n in &sorted {
        if n < 16 || !n.is_power_of_two() {
            return Err(LabError::config(format!("grid size {n} is not a power of two >= 16")));
        }
    }
    let solver = |e: dcl_core::Error| LabError::Solver(e);
    match suite {
        Suite::Identities => identities(&sorted).map_err(solver),
        Suite::Projections => Ok(projections(&sorted)),
        Suite::Oracles => oracles(&sorted).map_err(solver),
        Suite::Maxprinciple => maxprinciple(&sorted).map_err(solver),
        Suite::Smoothing => smoothing(&sorted).map_err(solver),
    }
}

type CoreResult<T> = dcl_core::Result<T>;

fn identities(grids: &[usize]) -> CoreResult<Vec<Check>> {
    let mut out = Vec::new();
    let mut previous: Option<(usize, [f64; 6])> = None;
    for &n in grids {
        let r = identity_residuals(&random_smooth(n, Manifold::Sphere2, 3, 0.5)?)?;
        let values = [r.third_order[0], r.third_order[1], r.third_order[2], r.complex[0], r.complex[1], r.complex[2]];
        let label = |i: usize| format!("{} l={}", if i < 3 { "third_order" } else { "complex" }, i % 3);
        for (i, v) in values.iter().enumerate() {
            out.push(Check::new(format!("{} residual", label(i)), n, *v, None));
        }
        if let Some((m, prev)) = previous {
            let doublings = (n as f64 / m as f64).log2();
            for i in 0..6 {
                let decades = (prev[i] / values[i]).log10() / doublings;
                out.push(Check::new(format!("{} decades per doubling", label(i)), n, decades, Some(Bound::AtLeast(4.0))));
            }
        }
        previous = Some((n, values));

        for m in [Manifold::Sphere2, Manifold::CliffordTorus2] {
            let c = random_smooth(n, m, 1, 0.5)?;
            let v = curvature_symmetry_residual(&c, m.gaussian_curvature(), 10, 9)?;
            out.push(Check::new(format!("curvature symmetry {m:?}"), n, v, Some(Bound::AtMost(1e-12))));
        }

        let c = random_smooth(n, Manifold::Sphere2, 3, 1.0)?;
        let d = random_smooth(n, Manifold::Sphere2, 4, 1.0)?;
        let path = |t: f64| {
            let pts = &c.points() + &((&d.points() - &c.points()) * (t * t + t));
            ClosedCurve::in_tube(pts, Manifold::Sphere2, c.winding().clone())?.projected()
        };
        // Rounding in the difference quotient grows with the grid, so the
        // steps grow with it.
        let h0 = 1e-4 * (n as f64 / 64.0).max(1.0);
        for l in 0..2 {
            let r = [4.0 * h0, 2.0 * h0, h0]
                .iter()
                .map(|&h| commutator_residual(path, 0.3, h, l))
                .collect::<CoreResult<Vec<f64>>>()?;
            let slope = r.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min);
            out.push(Check::new(format!("commutator l={l} slope"), n, slope, Some(Bound::AtLeast(1.8))));
        }
    }
    Ok(out)
}

fn projections(grids: &[usize]) -> Vec<Check> {
    let mut out = Vec::new();
    for &n in grids {
        for m in [Manifold::Sphere2, Manifold::CliffordTorus2, Manifold::ChartFlatTorus2] {
            let c = random_smooth(n, m, 2, 0.5).expect("preset exists on every target");
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            let (mut split, mut idempotent, mut complex) = (0.0f64, 0.0f64, 0.0f64);
            for i in 0..n {
                let y = c.point(i);
                let x: Vec<f64> = (0..c.dim()).map(|_| rng.random_range(-1.0..=1.0)).collect();
                let p = m.tangent_project(y, &x).expect("on-manifold base");
                let q = m.normal_project(y, &x).expect("on-manifold base");
                let pp = m.tangent_project(y, &p).expect("on-manifold base");
                let jjp = m.complex_structure(y, &m.complex_structure(y, &p).expect("on-manifold base")).expect("on-manifold base");
                for k in 0..c.dim() {
                    split = split.max((p[k] + q[k] - x[k]).abs());
                    idempotent = idempotent.max((pp[k] - p[k]).abs());
                    complex = complex.max((jjp[k] + p[k]).abs());
                }
            }
            out.push(Check::new(format!("p + n = I {m:?}"), n, split, Some(Bound::AtMost(1e-12))));
            out.push(Check::new(format!("p^2 = p {m:?}"), n, idempotent, Some(Bound::AtMost(1e-12))));
            out.push(Check::new(format!("J^2 = -I {m:?}"), n, complex, Some(Bound::AtMost(1e-12))));
        }
    }
    out
}

fn sup_distance(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    (a - b).iter().fold(0.0, |m: f64, x| m.max(x.abs()))
}

fn run(u0: &ClosedCurve, cfg: &FlowConfig) -> CoreResult<ClosedCurve> {
    let traj = evolve_strided(u0, cfg, usize::MAX)?;
    match traj.failure {
        Some(e) => Err(e),
        None => Ok(traj.final_state().clone()),
    }
}

/// The explicit part of the step is stable for `dt ∝ N⁻²`.
fn scaled_dt(base: f64, reference: usize, n: usize) -> f64 {
    base * (reference as f64 / n as f64).powi(2)
}

fn oracles(grids: &[usize]) -> CoreResult<Vec<Check>> {
    let theta = PI / 3.0;
    let mut out = Vec::new();
    for &n in grids {
        let u0 = latitude(n, theta)?;
        // The Schrödinger-map run needs a much smaller step on fine grids.
        let dt = (2e-5 * (128.0 / n as f64).powi(4)).min(1e-4);
        let cfg = FlowConfig::new(0.0, 0.0, n, dt, 0.01);
        let d = sup_distance(&run(&u0, &cfg)?.points().to_owned(), &oracle_latitude_circle(theta, 0.01, 0.0, 0.0, n)?.points().to_owned());
        out.push(Check::new("rotating latitude circle", n, d, Some(Bound::AtMost(1e-6))));

        let cfg = FlowConfig::new(1.0, 0.5, n, scaled_dt(1e-5, 128, n).min(5e-5), 0.005);
        let d = sup_distance(&run(&u0, &cfg)?.points().to_owned(), &oracle_latitude_circle(theta, 0.005, 1.0, 0.5, n)?.points().to_owned());
        out.push(Check::new("travelling latitude circle", n, d, Some(Bound::AtMost(1e-5))));
        out.push(Check::new("travelling ansatz residual", n, oracle_residual(theta, 0.005, 1.0, 0.5, n)?, Some(Bound::AtMost(1e-10))));

        let t = 0.1;
        let chart = run(&torus_geodesic(n, Manifold::ChartFlatTorus2, 1, 0)?, &FlowConfig::new(1.0, 0.7, n, 1e-4, t))?;
        let exact = Array2::from_shape_fn((n, 2), |(i, j)| if j == 0 { i as f64 / n as f64 + 0.7 * t } else { 0.0 });
        out.push(Check::new("chart torus translation", n, sup_distance(&chart.points().to_owned(), &exact), Some(Bound::AtMost(1e-10))));

        let t = 0.01;
        let cfg = FlowConfig::new(1.0, 0.7, n, scaled_dt(1e-5, 64, n).min(1e-5), t);
        let chart = run(&torus_geodesic(n, Manifold::ChartFlatTorus2, 1, 0)?, &cfg)?;
        let embedded = run(&torus_geodesic(n, Manifold::CliffordTorus2, 1, 0)?, &cfg)?;
        let image = Array2::from_shape_fn((n, 4), |(i, k)| clifford_embed(chart.point(i))[k]);
        out.push(Check::new("clifford vs chart", n, sup_distance(&embedded.points().to_owned(), &image), Some(Bound::AtMost(1e-8))));
    }
    Ok(out)
}

fn maxprinciple(grids: &[usize]) -> CoreResult<Vec<Check>> {
    let eps = 1e-2;
    let mut out = Vec::new();
    for &n in grids {
        let base = random_smooth(n, Manifold::Sphere2, 8, 1.0)?;
        let mut pts = base.points().to_owned();
        for (i, mut row) in pts.rows_mut().into_iter().enumerate() {
            row *= 1.0 + 1e-4 * (6.0 * PI * i as f64 / n as f64).cos();
        }
        let v0 = ClosedCurve::in_tube(pts, Manifold::Sphere2, base.winding().clone())?;
        let dt = scaled_dt(1e-5, 64, n).min(1e-5);
        let stride = (1e-4 / dt).round() as usize;
        let cfg = FlowConfig::new(1.0, 0.5, n, dt, 1e-3).with_epsilon(eps).with_integrator(Integrator::DuhamelPicard);
        let traj = evolve_strided(&v0, &cfg, stride)?;
        if let Some(e) = traj.failure {
            return Err(e);
        }
        let samples = traj
            .snapshots
            .iter()
            .map(|s| {
                let rho = &s.state.points() - &s.state.projected()?.points();
                Ok((s.t, l2_norm(rho.view()), l2_norm(spectral_derivative(rho.view(), 2).view())))
            })
            .collect::<CoreResult<Vec<(f64, f64, f64)>>>()?;
        let mut increases = 0;
        let mut worst: f64 = 0.0;
        for w in samples.windows(2) {
            let ((t0, r0, xx0), (t1, r1, xx1)) = (w[0], w[1]);
            if r1 >= r0 {
                increases += 1;
            }
            let rate = (0.5 * r1 * r1 - 0.5 * r0 * r0) / (t1 - t0);
            let predicted = -eps * 0.5 * (xx0 * xx0 + xx1 * xx1);
            worst = worst.max((rate / predicted - 1.0).abs());
        }
        out.push(Check::new("snapshots where |rho| does not decrease", n, increases as f64, Some(Bound::AtMost(0.0))));
        out.push(Check::new("relative decay-rate mismatch", n, worst, Some(Bound::AtMost(0.1))));
    }
    Ok(out)
}

fn smoothing(grids: &[usize]) -> CoreResult<Vec<Check>> {
    let c = smoothing_constant();
    let levels = [1e-3, 1e-2, 1e-1];
    let mut out = vec![Check::new("scalar maximum", 0, c, None)];
    for &n in grids {
        for eps in levels {
            for t in levels {
                let s = scaled_mode_sup(eps, t, n / 2)?;
                out.push(Check::new(format!("relative gap eps={eps:e} t={t:e}"), n, (s / c - 1.0).abs(), Some(Bound::AtMost(0.01))));
            }
        }
    }
    Ok(out)
}

//! Fixed point of the Duhamel map
//! `Lv(t) = S_ε(t) v₀ + ∫₀ᵗ S_ε(t - s) F(π ∘ v)(s) ds` over one step.
//!
//! `v` is collocated at `q` Gauss–Legendre nodes of `[0, h]`; `F` is replaced by
//! its Lagrange interpolant through the nodes and the semigroup factor is
//! integrated exactly per Fourier mode, so stiff modes are never resolved in time.

use super::config::FlowConfig;
use super::rhs::flow_field;
use super::stepper::{Lift, StepOutcome};
use crate::curve::ClosedCurve;
use crate::error::{Error, Result};
use crate::spectral::{frequency, SpectralCoeffs};

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(q);
    let mut weights = Vec::with_capacity(q);
    for i in 0..q {
        // Tricomi initial guess, then Newton on P_q.
        let mut x = ((4 * i + 3) as f64 * std::f64::consts::PI / (4 * q + 2) as f64).cos();
        for _ in 0..100 {
            let (p, d) = legendre(q, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(q, x);
        nodes.push(0.5 * (1.0 - x));
        weights.push(1.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

/// `(P_q(x), P_q'(x))` by the three-term recurrence.
fn legendre(q: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if q == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=q {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, q as f64 * (x * p1 - p0) / (x * x - 1.0))
}

fn lagrange(nodes: &[f64], i: usize, s: f64) -> f64 {
    nodes
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &xj)| (s - xj) / (nodes[i] - xj))
        .product()
}

/// Per-mode collocation weights `W[j][i] = h ∫₀^{τ_j} e^{-Λ(τ_j - σ)} ℓ_i(σ) dσ`
/// with `Λ = ε h (2πk)⁴`, for the nodes `τ_0..τ_{q-1}` and `τ_q = 1`.
struct Weights {
    /// `[|k|][j][i]`.
    table: Vec<Vec<Vec<f64>>>,
    /// `[|k|][j]`: `e^{-Λ τ_j}`.
    free: Vec<Vec<f64>>,
}

impl Weights {
    fn new(nodes: &[f64], epsilon: f64, h: f64, n: usize) -> Self {
        let q = nodes.len();
        let (gx, gw) = gauss_legendre(64);
        let mut taus = nodes.to_vec();
        taus.push(1.0);
        let mut table = Vec::with_capacity(n / 2 + 1);
        let mut free = Vec::with_capacity(n / 2 + 1);
        for k in 0..=(n / 2) as i64 {
            let lam = epsilon * h * (2.0 * std::f64::consts::PI * k as f64).powi(4);
            free.push(taus.iter().map(|&t| (-lam * t).exp()).collect());
            let rows = taus
                .iter()
                .map(|&tau| {
                    // ρ = τ - σ; the integrand is negligible beyond ρ = 40/Λ.
                    let len = if lam * tau > 40.0 { 40.0 / lam } else { tau };
                    (0..q)
                        .map(|i| {
                            h * len
                                * gx.iter()
                                    .zip(&gw)
                                    .map(|(&x, &w)| {
                                        let rho = len * x;
                                        w * (-lam * rho).exp() * lagrange(nodes, i, tau - rho)
                                    })
                                    .sum::<f64>()
                        })
                        .collect()
                })
                .collect();
            table.push(rows);
        }
        Self { table, free }
    }
}

fn h1_norm(c: &SpectralCoeffs) -> f64 {
    let n = c.len();
    let mut acc = 0.0;
    for block in c.raw().chunks_exact(n) {
        for (j, z) in block.iter().enumerate() {
            let w = 2.0 * std::f64::consts::PI * frequency(j, n) as f64;
            acc += z.norm_sqr() * (1.0 + w * w);
        }
    }
    acc.sqrt()
}

fn forcing(lift: &Lift, v: &SpectralCoeffs, cfg: &FlowConfig) -> Result<SpectralCoeffs> {
    let state = lift.curve(v)?;
    let p = state.projected()?;
    Ok(SpectralCoeffs::forward(flow_field(&p, cfg.a, cfg.b, cfg.epsilon, true).view()))
}

/// `S v₀ + Σ_i W[j][i] F_i` for node `j`.
fn combine(weights: &Weights, j: usize, v0: &SpectralCoeffs, forces: &[SpectralCoeffs]) -> SpectralCoeffs {
    let n = v0.len();
    let mut out = v0.clone();
    let raw = out.raw_mut();
    for (c, block) in raw.chunks_exact_mut(n).enumerate() {
        for (bin, z) in block.iter_mut().enumerate() {
            let k = frequency(bin, n).unsigned_abs() as usize;
            let row = &weights.table[k][j];
            let mut acc = *z * weights.free[k][j];
            for (i, f) in forces.iter().enumerate() {
                acc += f.raw()[c * n + bin] * row[i];
            }
            *z = acc;
        }
    }
    out
}

fn diff(a: &SpectralCoeffs, b: &SpectralCoeffs) -> SpectralCoeffs {
    let mut d = a.clone();
    d.axpy(-1.0, b);
    d
}

/// Collocation data shared by all steps of one size.
pub(crate) struct PicardKernel {
    q: usize,
    weights: Weights,
}

impl PicardKernel {
    pub(crate) fn new(cfg: &FlowConfig, h: f64) -> Self {
        let (nodes, _) = gauss_legendre(cfg.quadrature_nodes);
        Self { q: nodes.len(), weights: Weights::new(&nodes, cfg.epsilon, h, cfg.grid) }
    }
}

/// One Duhamel–Picard step from a tube-valued state.
pub(crate) fn picard_step(v0: &ClosedCurve, cfg: &FlowConfig, kernel: &PicardKernel) -> Result<StepOutcome> {
    let lift = Lift::of(v0);
    let (q, weights) = (kernel.q, &kernel.weights);
    let c0 = v0.spectrum();

    let mut iterates: Vec<SpectralCoeffs> = vec![c0.clone(); q];
    let mut increment = f64::INFINITY;
    let mut iterations = 0;
    while iterations < cfg.picard_max_iter {
        // Iterates leaving the tube mean the map is not contracting.
        let forces = match iterates.iter().map(|v| forcing(&lift, v, cfg)).collect::<Result<Vec<_>>>() {
            Ok(f) => f,
            Err(Error::OutOfTubularNeighborhood { .. }) => return Err(Error::NoContraction { iterations, increment }),
            Err(e) => return Err(e),
        };
        let next: Vec<SpectralCoeffs> = (0..q).map(|j| combine(weights, j, &c0, &forces)).collect();
        increment = next.iter().zip(&iterates).map(|(a, b)| h1_norm(&diff(a, b))).fold(0.0, f64::max);
        iterates = next;
        iterations += 1;
        if !increment.is_finite() {
            break;
        }
        if increment <= cfg.picard_tol {
            let forces = iterates.iter().map(|v| forcing(&lift, v, cfg)).collect::<Result<Vec<_>>>()?;
            let end = combine(weights, q, &c0, &forces);
            let state = lift.curve(&end)?;
            let off_manifold = state.off_manifold();
            return Ok(StepOutcome { state, off_manifold, picard_iterations: Some(iterations) });
        }
    }
    Err(Error::NoContraction { iterations, increment })
}

/// Fixed point of the Duhamel map over `[0, cfg.dt]`.
pub fn picard_solve(v0: &ClosedCurve, cfg: &FlowConfig) -> Result<StepOutcome> {
    cfg.validate()?;
    if cfg.epsilon <= 0.0 {
        return Err(Error::InvalidConfig("DuhamelPicard needs epsilon > 0".into()));
    }
    super::stepper::check_state(v0, cfg)?;
    picard_step(v0, cfg, &PicardKernel::new(cfg, cfg.dt))
}

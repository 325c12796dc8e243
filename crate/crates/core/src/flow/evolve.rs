use rayon::prelude::*;

use super::config::{FlowConfig, Integrator};
use super::picard::{picard_step, PicardKernel};
use super::stepper::{check_state, imex_step, rk4_step, StepOutcome};
use crate::calculus::sobolev_norm;
use crate::curve::ClosedCurve;
use crate::error::{Error, Result};
use crate::manifold::OFF_MANIFOLD_TOL;
use crate::spectral::{l2_inner, spectral_derivative};

/// Largest tolerated growth of `‖u_x‖_{H²}` between consecutive snapshots.
pub const BLOWUP_FACTOR: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub state: ClosedCurve,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    /// Distance from the target before projection (or of the tube-valued state).
    pub off_manifold: f64,
    pub picard_iterations: Option<usize>,
}

/// Snapshots every `stride` steps plus per-step diagnostics. A failed run
/// keeps everything computed before the failure.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: FlowConfig,
    pub stride: usize,
    pub snapshots: Vec<Snapshot>,
    pub steps: Vec<StepRecord>,
    pub failure: Option<Error>,
}

impl Trajectory {
    pub fn final_state(&self) -> &ClosedCurve {
        &self.snapshots.last().expect("trajectory starts with the initial state").state
    }

    pub fn final_time(&self) -> f64 {
        self.snapshots.last().map_or(0.0, |s| s.t)
    }

    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    pub fn max_off_manifold(&self) -> f64 {
        self.steps.iter().map(|s| s.off_manifold).fold(0.0, f64::max)
    }
}

enum Stepper {
    Rk4,
    Imex,
    Picard(Box<PicardKernel>),
}

impl Stepper {
    fn step(&self, c: &ClosedCurve, cfg: &FlowConfig, h: f64) -> Result<StepOutcome> {
        match self {
            Stepper::Rk4 => rk4_step(c, cfg, h),
            Stepper::Imex => imex_step(c, cfg, h),
            Stepper::Picard(k) => picard_step(c, cfg, k),
        }
    }
}

fn h2_of(state: &ClosedCurve) -> Result<f64> {
    let p = if state.off_manifold() > OFF_MANIFOLD_TOL { state.projected()? } else { state.clone() };
    sobolev_norm(&p, 2)
}

/// Marches `u0` to the horizon, keeping every step.
pub fn evolve(u0: &ClosedCurve, cfg: &FlowConfig) -> Result<Trajectory> {
    evolve_strided(u0, cfg, 1)
}

/// Marches `u0` to the horizon, keeping a snapshot every `stride` steps and the
/// final state. Invalid input is an error; failures while stepping end the run
/// and are recorded in [`Trajectory::failure`].
pub fn evolve_strided(u0: &ClosedCurve, cfg: &FlowConfig, stride: usize) -> Result<Trajectory> {
    cfg.validate()?;
    check_state(u0, cfg)?;
    if stride == 0 {
        return Err(Error::InvalidConfig("stride must be >= 1".into()));
    }
    let residual = u0.off_manifold();
    if cfg.integrator != Integrator::DuhamelPicard && residual > OFF_MANIFOLD_TOL {
        return Err(Error::PointOffManifold { residual });
    }
    let (steps, h) = cfg.schedule();
    let stepper = match cfg.integrator {
        Integrator::ProjectedRK4 => Stepper::Rk4,
        Integrator::IMEX => Stepper::Imex,
        Integrator::DuhamelPicard => Stepper::Picard(Box::new(PicardKernel::new(cfg, h))),
    };

    let mut traj = Trajectory {
        config: cfg.clone(),
        stride,
        snapshots: vec![Snapshot { t: 0.0, state: u0.clone() }],
        steps: Vec::with_capacity(steps),
        failure: None,
    };
    let mut state = u0.clone();
    let mut last_h2 = h2_of(u0)?;
    for k in 1..=steps {
        let t = if k == steps { cfg.horizon } else { k as f64 * h };
        let outcome = match stepper.step(&state, cfg, h) {
            Ok(o) => o,
            Err(e) => {
                traj.failure = Some(e);
                break;
            }
        };
        traj.steps.push(StepRecord {
            t,
            off_manifold: outcome.off_manifold,
            picard_iterations: outcome.picard_iterations,
        });
        state = outcome.state;
        if k % stride == 0 || k == steps {
            let h2 = match h2_of(&state) {
                Ok(v) if v.is_finite() => v,
                Ok(_) => f64::INFINITY,
                Err(e) => {
                    traj.failure = Some(e);
                    break;
                }
            };
            if last_h2 > 0.0 && h2 > BLOWUP_FACTOR * last_h2 {
                traj.failure = Some(Error::StepSizeUnstable { growth: h2 / last_h2, t });
                break;
            }
            last_h2 = h2;
            traj.snapshots.push(Snapshot { t, state: state.clone() });
        }
    }
    Ok(traj)
}

/// Discrete `H¹` distance `(‖d‖² + ‖d_x‖²)^{1/2}` between two curves on the same grid.
pub fn h1_distance(a: &ClosedCurve, b: &ClosedCurve) -> Result<f64> {
    if a.len() != b.len() || a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    let d = &a.points() - &b.points();
    let dx = spectral_derivative(d.view(), 1);
    Ok((l2_inner(d.view(), d.view()) + l2_inner(dx.view(), dx.view())).sqrt())
}

/// One row of an ε-continuation table.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationRow {
    pub epsilon: f64,
    /// `H¹` distance at the horizon to the `ε = 0` run.
    pub distance_to_limit: Option<f64>,
    /// `H¹` distance at the horizon to the previous (larger) ε.
    pub distance_to_previous: Option<f64>,
    pub failure: Option<Error>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationTable {
    pub rows: Vec<ContinuationRow>,
    pub limit_failure: Option<Error>,
}

impl ContinuationTable {
    /// True when the distance-to-limit column exists and strictly decreases.
    pub fn is_monotone(&self) -> bool {
        let d: Option<Vec<f64>> = self.rows.iter().map(|r| r.distance_to_limit).collect();
        d.is_some_and(|d| d.windows(2).all(|w| w[1] < w[0]))
    }
}

/// Runs the regularized flow for each ε in `eps_list` (strictly decreasing,
/// positive) and the unregularized flow, and compares the final states.
/// Runs execute on the current rayon pool.
pub fn epsilon_continuation(u0: &ClosedCurve, cfg: &FlowConfig, eps_list: &[f64]) -> Result<ContinuationTable> {
    if eps_list.is_empty() || eps_list.iter().any(|e| !(*e > 0.0)) || eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidConfig("eps_list must be non-empty, positive and strictly decreasing".into()));
    }
    let mut limit_cfg = cfg.clone().with_epsilon(0.0);
    if limit_cfg.integrator == Integrator::DuhamelPicard {
        limit_cfg.integrator = Integrator::ProjectedRK4;
    }
    limit_cfg.validate()?;
    let mut configs = vec![limit_cfg];
    configs.extend(eps_list.iter().map(|&e| cfg.clone().with_epsilon(e)));
    let (n, _) = cfg.schedule();
    let runs: Vec<Result<Trajectory>> = configs.par_iter().map(|c| evolve_strided(u0, c, n.max(1))).collect();

    let finals: Vec<std::result::Result<ClosedCurve, Error>> = runs
        .into_iter()
        .map(|r| match r {
            Ok(t) if t.is_complete() => Ok(t.final_state().clone()),
            Ok(t) => Err(t.failure.expect("incomplete run has a failure")),
            Err(e) => Err(e),
        })
        .collect();
    let limit = &finals[0];
    let mut rows = Vec::with_capacity(eps_list.len());
    for (i, &epsilon) in eps_list.iter().enumerate() {
        let this = &finals[i + 1];
        let (distance_to_limit, distance_to_previous, failure) = match this {
            Ok(s) => (
                limit.as_ref().ok().and_then(|l| h1_distance(s, l).ok()),
                if i == 0 { None } else { finals[i].as_ref().ok().and_then(|p| h1_distance(s, p).ok()) },
                None,
            ),
            Err(e) => (None, None, Some(e.clone())),
        };
        rows.push(ContinuationRow { epsilon, distance_to_limit, distance_to_previous, failure });
    }
    Ok(ContinuationTable { rows, limit_failure: limit.as_ref().err().cloned() })
}

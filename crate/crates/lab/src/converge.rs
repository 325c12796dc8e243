//! Refinement studies behind `dcl converge`.

use clap::ValueEnum;
use dcl_core::flow::{epsilon_continuation, evolve_strided, h1_distance, FlowConfig};
use dcl_core::ClosedCurve;
use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{LabError, Result};
use crate::manifest::{InitialCondition, RunManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Epsilon,
    Grid,
    Dt,
}

/// Largest ε of a continuation when the manifest has `ε = 0`.
pub const DEFAULT_EPSILON: f64 = 1e-4;
/// Ratio between successive ε levels.
pub const EPSILON_RATIO: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

fn cell(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| format!("{v:e}"))
}

pub fn converge(manifest: &RunManifest, mode: Mode, levels: usize) -> Result<ConvergenceTable> {
    if levels < 3 {
        return Err(LabError::config(format!("a convergence study needs at least 3 levels, got {levels}")));
    }
    let manifest = manifest.resolved();
    manifest.validate()?;
    match mode {
        Mode::Epsilon => epsilon(&manifest, levels),
        Mode::Dt => refinement(&manifest, levels, false),
        Mode::Grid => refinement(&manifest, levels, true),
    }
}

fn epsilon(manifest: &RunManifest, levels: usize) -> Result<ConvergenceTable> {
    let top = if manifest.config.epsilon > 0.0 { manifest.config.epsilon } else { DEFAULT_EPSILON };
    let list: Vec<f64> = (0..levels).map(|i| top / EPSILON_RATIO.powi(i as i32)).collect();
    let u0 = manifest.initial_curve()?;
    let table = epsilon_continuation(&u0, &manifest.config, &list).map_err(LabError::config)?;
    let limit_failure = table.limit_failure.as_ref().map(|e| format!("eps=0 run: {e}"));
    let rows = table
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let failure = r.failure.as_ref().map(|e| e.to_string()).or_else(|| limit_failure.clone());
            vec![
                i.to_string(),
                format!("{:e}", r.epsilon),
                cell(r.distance_to_limit),
                cell(r.distance_to_previous),
                failure.unwrap_or_default(),
            ]
        })
        .collect();
    Ok(ConvergenceTable {
        header: vec!["level", "epsilon", "distance_to_limit", "distance_to_previous", "failure"],
        rows,
    })
}

fn final_state(u0: &ClosedCurve, cfg: &FlowConfig) -> std::result::Result<ClosedCurve, String> {
    let traj = evolve_strided(u0, cfg, usize::MAX).map_err(|e| e.to_string())?;
    match traj.failure {
        Some(e) => Err(e.to_string()),
        None => Ok(traj.final_state().clone()),
    }
}

/// `sup |fine - coarse|` at the coarse nodes.
fn restricted_distance(coarse: &ClosedCurve, fine: &ClosedCurve) -> f64 {
    let step = fine.len() / coarse.len();
    let sub = Array2::from_shape_fn(coarse.points().dim(), |(i, k)| fine.point(i * step)[k]);
    (&sub - &coarse.points()).iter().fold(0.0, |m: f64, x| m.max(x.abs()))
}

/// Runs `levels` refinements (halving `dt` or doubling the grid), compares
/// consecutive final states and reports the observed order
/// `log2(d_{i-1} / d_i)`.
fn refinement(manifest: &RunManifest, levels: usize, grid: bool) -> Result<ConvergenceTable> {
    if grid && matches!(manifest.initial, InitialCondition::SampleFile { .. }) {
        return Err(LabError::config("grid refinement needs a preset initial condition"));
    }
    let configs: Vec<FlowConfig> = (0..levels)
        .map(|i| {
            let mut c = manifest.config.clone();
            if grid {
                c.grid <<= i;
            } else {
                c.dt /= (1u64 << i) as f64;
            }
            c
        })
        .collect();
    let initials = configs.iter().map(|c| manifest.initial_curve_on(c.grid)).collect::<Result<Vec<_>>>()?;
    let finals: Vec<std::result::Result<ClosedCurve, String>> =
        configs.par_iter().zip(&initials).map(|(c, u0)| final_state(u0, c)).collect();

    let mut differences: Vec<Option<f64>> = vec![None];
    for i in 1..levels {
        let d = match (&finals[i - 1], &finals[i]) {
            (Ok(a), Ok(b)) if grid => Some(restricted_distance(a, b)),
            (Ok(a), Ok(b)) => h1_distance(a, b).ok(),
            _ => None,
        };
        differences.push(d);
    }
    let rows = (0..levels)
        .map(|i| {
            let order = match (i >= 2).then(|| (differences[i - 1], differences[i])) {
                Some((Some(prev), Some(d))) if d > 0.0 => Some((prev / d).log2()),
                _ => None,
            };
            let level = if grid { configs[i].grid.to_string() } else { format!("{:e}", configs[i].dt) };
            vec![
                i.to_string(),
                level,
                cell(differences[i]),
                cell(order),
                finals[i].as_ref().err().cloned().unwrap_or_default(),
            ]
        })
        .collect();
    Ok(ConvergenceTable {
        header: vec!["level", if grid { "grid" } else { "dt" }, "difference", "observed_order", "failure"],
        rows,
    })
}

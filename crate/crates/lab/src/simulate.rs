use std::path::PathBuf;

use dcl_core::flow::evolve_strided;
use dcl_core::invariants::{energy_report, EnergyReport};
use serde::Serialize;

use crate::artifact::{canonical_json, report_csv, sha256_hex, write_atomic};
use crate::error::{LabError, Result};
use crate::manifest::{CurveDump, RunManifest};

pub const REPORT_FILE: &str = "report.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const STATUS_FILE: &str = "artifact.json";

/// Outcome of a simulation; the rows are also in `report.csv`.
#[derive(Debug, Clone)]
pub struct RunArtifact {
    pub manifest: RunManifest,
    pub rows: Vec<EnergyReport>,
    pub checkpoints: Vec<PathBuf>,
    pub report_sha256: String,
    pub failure: Option<String>,
}

#[derive(Serialize)]
struct Status<'a> {
    complete: bool,
    failure: Option<&'a str>,
    rows: usize,
    final_time: f64,
    report_sha256: &'a str,
    checkpoints: Vec<String>,
}

impl RunArtifact {
    pub fn exit_code(&self) -> i32 {
        if self.failure.is_some() { 3 } else { 0 }
    }
}

/// Runs the manifest and writes `manifest.json`, `report.csv`, `artifact.json`
/// and optional checkpoints into its output directory. A solver failure
/// keeps every row computed before it and is recorded in the artifact.
pub fn simulate(manifest: &RunManifest) -> Result<RunArtifact> {
    let manifest = manifest.resolved();
    manifest.validate()?;
    let u0 = manifest.initial_curve()?;
    let dir = &manifest.output_dir;
    std::fs::create_dir_all(dir)?;
    write_atomic(&dir.join(MANIFEST_FILE), canonical_json(&manifest)?.as_bytes())?;

    let traj = evolve_strided(&u0, &manifest.config, manifest.stride).map_err(LabError::config)?;
    let mut failure = traj.failure.as_ref().map(|e| e.to_string());
    let mut rows = Vec::with_capacity(traj.snapshots.len());
    for s in &traj.snapshots {
        match energy_report(s.t, &s.state) {
            Ok(r) => rows.push(r),
            Err(e) => {
                failure.get_or_insert_with(|| format!("invariants at t = {}: {e}", s.t));
                break;
            }
        }
    }

    let csv = report_csv(&rows)?;
    write_atomic(&dir.join(REPORT_FILE), &csv)?;
    let mut checkpoints = Vec::new();
    if manifest.checkpoints {
        for (k, s) in traj.snapshots.iter().enumerate() {
            let path = dir.join(format!("checkpoint_{k}.json"));
            write_atomic(&path, canonical_json(&CurveDump::of(s.t, &s.state))?.as_bytes())?;
            checkpoints.push(path);
        }
    }
    let report_sha256 = sha256_hex(&csv);
    let status = Status {
        complete: failure.is_none(),
        failure: failure.as_deref(),
        rows: rows.len(),
        final_time: rows.last().map_or(0.0, |r| r.t),
        report_sha256: &report_sha256,
        checkpoints: checkpoints
            .iter()
            .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
            .collect(),
    };
    write_atomic(&dir.join(STATUS_FILE), canonical_json(&status)?.as_bytes())?;
    Ok(RunArtifact { manifest, rows, checkpoints, report_sha256, failure })
}

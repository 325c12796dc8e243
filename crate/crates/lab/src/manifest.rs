//! Run manifests and curve dump files.

use std::path::{Path, PathBuf};

use dcl_core::flow::FlowConfig;
use dcl_core::presets::{Preset, DEFAULT_DECAY};
use dcl_core::{ClosedCurve, Manifold};
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Everything needed to reproduce one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub config: FlowConfig,
    pub manifold: Manifold,
    pub initial: InitialCondition,
    pub output_dir: PathBuf,
    /// Steps between snapshots; must divide the step count.
    pub stride: usize,
    /// Default seed for `random_smooth` descriptors that do not carry one.
    #[serde(default)]
    pub seed: u64,
    /// Dump every snapshot as `checkpoint_<k>.json`.
    #[serde(default)]
    pub checkpoints: bool,
}

/// Initial-condition descriptor: a named preset or a curve dump on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    GreatCircle,
    Latitude {
        theta: f64,
    },
    TorusGeodesic {
        m1: i64,
        m2: i64,
    },
    RandomSmooth {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        decay: Option<f64>,
    },
    Constant,
    SampleFile {
        path: PathBuf,
    },
}

/// A sampled curve as stored in checkpoints and sample files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveDump {
    #[serde(default)]
    pub t: f64,
    pub manifold: Manifold,
    pub points: Vec<Vec<f64>>,
    /// Lift offset per period (chart torus only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub winding: Option<Vec<f64>>,
}

impl CurveDump {
    pub fn of(t: f64, c: &ClosedCurve) -> Self {
        let winding = c.winding().iter().any(|w| *w != 0.0).then(|| c.winding().to_vec());
        Self { t, manifold: c.manifold(), points: c.points().rows().into_iter().map(|r| r.to_vec()).collect(), winding }
    }

    /// Rebuilds the curve; samples need only lie in the tubular neighbourhood.
    pub fn to_curve(&self) -> Result<ClosedCurve> {
        let d = self.manifold.ambient_dim();
        if let Some(bad) = self.points.iter().find(|p| p.len() != d) {
            return Err(LabError::config(format!("curve sample has {} coordinates, expected {d}", bad.len())));
        }
        let flat: Vec<f64> = self.points.iter().flatten().copied().collect();
        let points = Array2::from_shape_vec((self.points.len(), d), flat).map_err(LabError::config)?;
        let winding = Array1::from(self.winding.clone().unwrap_or_else(|| vec![0.0; d]));
        ClosedCurve::in_tube(points, self.manifold, winding).map_err(LabError::config)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::config(format!("cannot read curve file {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| LabError::config(format!("{}: {e}", path.display())))
    }
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::config(format!("cannot read manifest {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Parses and validates a manifest, filling defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let manifest: RunManifest = serde_json::from_str(text).map_err(|e| LabError::config(format!("manifest: {e}")))?;
        let resolved = manifest.resolved();
        resolved.validate()?;
        Ok(resolved)
    }

    /// Copy with every defaulted descriptor field written out.
    pub fn resolved(&self) -> Self {
        let mut out = self.clone();
        if let InitialCondition::RandomSmooth { seed, decay } = &mut out.initial {
            seed.get_or_insert(self.seed);
            decay.get_or_insert(DEFAULT_DECAY);
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate().map_err(LabError::config)?;
        if self.stride == 0 {
            return Err(LabError::config("stride must be >= 1"));
        }
        let (steps, _) = self.config.schedule();
        if steps % self.stride != 0 {
            return Err(LabError::config(format!("stride {} does not divide the step count {steps}", self.stride)));
        }
        self.initial_curve().map(|_| ())
    }

    /// Builds the initial curve on the configured grid.
    pub fn initial_curve(&self) -> Result<ClosedCurve> {
        self.initial_curve_on(self.config.grid)
    }

    pub fn initial_curve_on(&self, n: usize) -> Result<ClosedCurve> {
        let preset = match &self.initial {
            InitialCondition::GreatCircle => Preset::GreatCircle,
            InitialCondition::Latitude { theta } => Preset::Latitude { theta: *theta },
            InitialCondition::TorusGeodesic { m1, m2 } => Preset::TorusGeodesic { m1: *m1, m2: *m2 },
            InitialCondition::RandomSmooth { seed, decay } => Preset::RandomSmooth {
                seed: seed.unwrap_or(self.seed),
                decay: decay.unwrap_or(DEFAULT_DECAY),
            },
            InitialCondition::Constant => Preset::Constant,
            InitialCondition::SampleFile { path } => {
                let dump = CurveDump::read(path)?;
                if dump.manifold != self.manifold {
                    return Err(LabError::config(format!(
                        "sample file is on {:?}, manifest asks for {:?}",
                        dump.manifold, self.manifold
                    )));
                }
                let curve = dump.to_curve()?;
                if curve.len() != n {
                    return Err(LabError::config(format!("sample file has {} nodes, grid is {n}", curve.len())));
                }
                return Ok(curve);
            }
        };
        preset.build(n, self.manifold).map_err(LabError::config)
    }
}

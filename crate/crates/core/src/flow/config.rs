use serde::{Deserialize, Serialize};

use crate::curve::check_grid;
use crate::error::{Error, Result};

/// Time integrator for the (regularized) flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Integrator {
    /// Fixed point of the Duhamel map, collocated at Gauss–Legendre nodes.
    DuhamelPicard,
    /// Fourth-order exponential Runge–Kutta with projection of every stage and of the step.
    ProjectedRK4,
    /// Implicit-explicit midpoint rule with end-of-step projection.
    IMEX,
}

fn default_picard_tol() -> f64 {
    1e-12
}

fn default_picard_max_iter() -> usize {
    50
}

fn default_quadrature_nodes() -> usize {
    8
}

/// Coefficients and discretization parameters of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub a: f64,
    pub b: f64,
    #[serde(default)]
    pub epsilon: f64,
    pub grid: usize,
    pub dt: f64,
    pub horizon: f64,
    pub integrator: Integrator,
    #[serde(default = "default_picard_tol")]
    pub picard_tol: f64,
    #[serde(default = "default_picard_max_iter")]
    pub picard_max_iter: usize,
    #[serde(default = "default_quadrature_nodes")]
    pub quadrature_nodes: usize,
    /// Largest Fourier mode kept in the explicit part of the stepper;
    /// `None` keeps `grid / 4`.
    #[serde(default)]
    pub dealias: Option<usize>,
}

impl FlowConfig {
    pub fn new(a: f64, b: f64, grid: usize, dt: f64, horizon: f64) -> Self {
        Self {
            a,
            b,
            epsilon: 0.0,
            grid,
            dt,
            horizon,
            integrator: Integrator::ProjectedRK4,
            picard_tol: default_picard_tol(),
            picard_max_iter: default_picard_max_iter(),
            quadrature_nodes: default_quadrature_nodes(),
            dealias: None,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_grid(self.grid)?;
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !self.a.is_finite() || !self.b.is_finite() {
            return bad("coefficients a, b must be finite".into());
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return bad(format!("epsilon must be >= 0, got {}", self.epsilon));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad(format!("dt must be > 0, got {}", self.dt));
        }
        if !(self.horizon >= 0.0) || !self.horizon.is_finite() {
            return bad(format!("horizon must be >= 0, got {}", self.horizon));
        }
        if self.horizon > 0.0 && self.dt > self.horizon {
            return bad(format!("dt = {} exceeds the horizon {}", self.dt, self.horizon));
        }
        if self.integrator == Integrator::DuhamelPicard {
            if self.epsilon <= 0.0 {
                return bad("DuhamelPicard needs epsilon > 0".into());
            }
            if !(self.picard_tol > 0.0) || self.picard_max_iter == 0 {
                return bad("picard_tol must be > 0 and picard_max_iter >= 1".into());
            }
            if !(1..=32).contains(&self.quadrature_nodes) {
                return bad(format!("quadrature_nodes must lie in 1..=32, got {}", self.quadrature_nodes));
            }
        }
        if let Some(m) = self.dealias {
            if m == 0 || m > self.grid / 2 {
                return bad(format!("dealias mode {m} outside 1..={}", self.grid / 2));
            }
        }
        Ok(())
    }

    pub fn dealias_mode(&self) -> usize {
        self.dealias.unwrap_or(self.grid / 4)
    }

    /// Number of steps and the uniform step that lands exactly on the horizon.
    pub fn schedule(&self) -> (usize, f64) {
        if self.horizon == 0.0 {
            return (0, self.dt);
        }
        let steps = ((self.horizon / self.dt) - 1e-9).ceil().max(1.0) as usize;
        (steps, self.horizon / steps as f64)
    }
}

//! Extrinsic right-hand sides, the regularizing semigroup and time integrators.

mod config;
mod evolve;
mod picard;
mod rhs;
mod semigroup;
mod stepper;

pub use config::{FlowConfig, Integrator};
pub use evolve::{
    epsilon_continuation, evolve, evolve_strided, h1_distance, ContinuationRow, ContinuationTable, Snapshot,
    StepRecord, Trajectory, BLOWUP_FACTOR,
};
pub use picard::{gauss_legendre, picard_solve};
pub use rhs::{dispersive_rhs, regularized_rhs, RHS_TANGENCY_TOL};
pub use semigroup::{scaled_mode_sup, semigroup_apply, semigroup_multiplier, smoothing_constant};
pub use stepper::{step_imex, step_projected_rk4, StepOutcome};

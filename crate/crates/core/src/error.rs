use thiserror::Error;

use crate::manifold::Manifold;

/// Failures raised by the geometry, calculus and solver layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point at distance {distance:.3e} from the target lies outside the tubular neighbourhood of radius {radius:.3e}")]
    OutOfTubularNeighborhood { distance: f64, radius: f64 },

    #[error("base point is off the manifold (residual {residual:.3e})")]
    PointOffManifold { residual: f64 },

    #[error("field is not tangent to the target (normal residual {residual:.3e})")]
    TangencyViolation { residual: f64 },

    #[error("ambient dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("grid size {0} is not a power of two >= 16")]
    InvalidGrid(usize),

    #[error("derivative order {order} exceeds the supported maximum {max}")]
    OrderTooLarge { order: usize, max: usize },

    #[error("tangent fields live on different base curves")]
    BaseMismatch,

    #[error("Picard iteration did not contract after {iterations} iterations (last increment {increment:.3e})")]
    NoContraction { iterations: usize, increment: f64 },

    #[error("H2 norm of u_x grew by a factor {growth:.2} within one output stride ending at t = {t:.6e}")]
    StepSizeUnstable { growth: f64, t: f64 },

    #[error("operation requires {expected:?}, got {found:?}")]
    WrongManifold { expected: Manifold, found: Manifold },

    #[error("no closed-form latitude-circle solution is provided for a = {a}, b = {b}")]
    UnsupportedCoefficients { a: f64, b: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;

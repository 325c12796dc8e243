//! Simulation of the third-order dispersive flow
//! `u_t = a ∇_x² u_x + J ∇_x u_x + b g(u_x, u_x) u_x`
//! of closed curves into compact Kähler surfaces, through its fourth-order
//! parabolic regularization in the ambient Euclidean space.

// `!(x > 0.0)` rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod curve;
pub mod error;
pub mod flow;
pub mod invariants;
pub mod manifold;
pub mod presets;
pub mod spectral;

pub use curve::{ClosedCurve, TangentField};
pub use error::{Error, Result};
pub use manifold::Manifold;

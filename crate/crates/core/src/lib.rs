//! One-dimensional ADER finite-volume solver for hyperbolic balance laws in
//! conservative and non-conservative form.
//!
//! The scheme combines a WENO reconstruction, an implicit-Taylor generalized
//! Riemann problem predictor and centred FORCE-α path-conservative
//! fluctuations. A von Neumann analyzer for the linear advection-reaction
//! model is included.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod ck;
pub mod config;
pub mod error;
pub mod flux;
pub mod grid;
pub mod predictor;
pub mod presets;
pub mod quadrature;
pub mod series;
pub mod solver;
pub mod stability;
pub mod systems;
pub mod weno;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use grid::{BoundaryKind, CellField, Grid};
pub use systems::{BalanceLaw, System};

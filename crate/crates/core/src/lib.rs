//! Steady states, optical bistability and mirror entanglement for a pair of
//! cavities sharing a driven three-level cascade gain medium, each with a
//! movable end mirror.
//!
//! The crate is organised bottom-up: [`params`] holds the physical inputs,
//! [`gain_medium`] reduces the atoms to linear gain and coupling
//! coefficients, [`bistability`] and [`entanglement`] build on those, and
//! [`sweep`] runs either over parameter grids.

// Guards are written as `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bistability;
pub mod entanglement;
pub mod error;
pub mod gain_medium;
pub mod params;
pub mod sweep;

pub use error::{Error, Result, SolverError};
pub use params::{load_params, preset, ParamBuilder, ParamError, SystemParams};

//! # infogain-core
//!
//! Numerical toolkit for the information gain of quantum measurements.
//!
//! - [`qcore`]: dense density operators, purifications, fidelity and purified
//!   distance, measurements with Stinespring dilations, classically coherent
//!   states, diamond-distance estimates.
//! - [`entropies`]: von Neumann quantities and one-shot entropies (`D_max`,
//!   `H_min`, `I_max`, `H_0`, `H_max`) with self-verifying certificates, smoothing
//!   upper bounds, equipartition bounds and the min/max uncertainty relation.
//! - [`protocols`]: matrix-level simulations of permutation-extractor state
//!   merging, state splitting (coherent and classical), binned splitting and the
//!   converse bound.
//! - [`rates`]: Groenewold's entropy reduction, `I(X:R)`, the universal
//!   information gain `I(M)`, feedback and non-feedback rate regions.
//! - [`typicality`]: strongly typical sets and (conditionally) typical projectors.
//! - [`verify`]: randomized property suites used by the CLI and the acceptance tests.
//!
//! All logarithms are base 2; entropies are reported in bits.

#![forbid(unsafe_code)]
// Negated float comparisons below reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod entropies;
pub mod io;
pub mod linalg;
pub mod protocols;
pub mod qcore;
pub mod rates;
pub mod rng;
pub mod typicality;
pub mod verify;

pub use linalg::{CMat, CVec, C64};
pub use qcore::{ClassicallyCoherentState, DensityOperator, Isometry, Measurement, Normalization, PureState};

use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("protocol premise not met: {reason} (best deviation {best_deviation:.6e})")]
    PremiseNotMet { reason: String, best_deviation: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}

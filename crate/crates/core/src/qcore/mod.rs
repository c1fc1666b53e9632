//! States, measurements, distances and channels.

pub mod coherent;
pub mod diamond;
pub mod distance;
pub mod measurement;
pub mod state;

pub use coherent::ClassicallyCoherentState;
pub use diamond::{diamond_distance, DiamondEstimate};
pub use distance::{fidelity, generalized_fidelity, purified_distance, trace_norm_distance};
pub use measurement::{apply_measurement, stinespring_dilate, Isometry, Measurement};
pub use state::{DensityOperator, Normalization, PureState};

use crate::Result;

/// Reduced operator on the subsystems listed in `keep`.
pub fn partial_trace(state: &DensityOperator, keep: &[usize]) -> Result<DensityOperator> {
    state.partial_trace(keep)
}

pub fn purify(state: &DensityOperator) -> Result<PureState> {
    state.purify()
}

//! Fixed inputs shared by the benchmarks.

use infogain_core::linalg;
use infogain_core::rng::rng_from_seed;
use infogain_core::{ClassicallyCoherentState, DensityOperator};

/// Full-rank state on `A (x) B` with the given dimensions.
pub fn bipartite_state(da: usize, db: usize, seed: u64) -> DensityOperator {
    let d = da * db;
    DensityOperator::new(linalg::random_density(d, d, &mut rng_from_seed(seed)), vec![da, db]).unwrap()
}

pub fn coherent_state(outcomes: usize, seed: u64) -> ClassicallyCoherentState {
    ClassicallyCoherentState::random(outcomes, 1, 2, &mut rng_from_seed(seed))
}

//! Information gain of measurements and the rates needed to simulate them.

pub mod gain;
pub mod region;

pub use gain::{
    groenewold, info_gain, info_gain_state, max_outcome_entropy, maximize_over_states, negative_groenewold_example,
    GroenewoldReport, Maximum, OptimizerConfig,
};
pub use region::{
    default_w_cap, feedback_region, nonfeedback_region, validate_decomposition, CurvePoint, Decomposition,
    DecompositionCheck, DecompositionWitness, RateRegion, RegionKind,
};

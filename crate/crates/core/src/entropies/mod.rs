//! Entropies and one-shot information measures.

pub mod aep;
pub mod one_shot;
pub mod partition;
pub mod sdp;
pub mod smoothing;
pub mod uncertainty;
pub mod vn;

pub use aep::{aep_bound, eta, xi, AepQuantity};
pub use one_shot::{
    d_max, h0, h0_hmax_hr, h_max_cond, h_min, h_min_cond, i_max, BoundKind, Certificate, CertificateCheck, Direction,
    EntropyResult, RenyiTriple,
};
pub use partition::Partition;
pub use smoothing::{smooth_h0, smooth_i_max, SmoothingReport};
pub use uncertainty::{verify_uncertainty_relation, UncertaintyReport};
pub use vn::{entropy, mutual_information, relative_entropy, von_neumann_quantities, VonNeumannReport};

//! One-shot state merging and splitting of classically coherent states.

pub mod binned;
pub mod converse;
pub mod extractor;
pub mod merging;
pub mod transcript;

pub use binned::{binned_error_bound, run_binned_splitting, BinStructure};
pub use converse::{converse_bound, ConverseBound};
pub use extractor::{extractor_deviation, permutation_deviation, ExtractorMode, ExtractorReport};
pub use merging::{
    merging_costs, plan_transfer, round_trip, run_merging, run_splitting, RoundTrip, SplittingVariant, TransferPlan,
};
pub use transcript::{BinRecord, CostCheck, ProtocolTranscript};

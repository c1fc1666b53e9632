use serde::Serialize;

use crate::qcore::Isometry;

/// One cost inequality evaluated on a run.
#[derive(Debug, Clone, Serialize)]
pub struct CostCheck {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub holds: bool,
}

impl CostCheck {
    pub fn new(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, bound, holds: value <= bound + 1e-9 }
    }
}

/// Outcomes of one occupied bin in binned splitting.
#[derive(Debug, Clone, Serialize)]
pub struct BinRecord {
    pub bin: usize,
    /// Original outcome labels assigned to the bin.
    pub outcomes: Vec<usize>,
    pub weight: f64,
    /// `log2` of the number of outcomes in the bin.
    pub h0: f64,
    /// Min-entropy of the normalized bin distribution.
    pub h_min: f64,
    /// `H_min(X|R)` of the normalized bin state, which sets the bin's costs.
    pub h_min_given_r: f64,
    /// Message register width in bits.
    pub message_bits: u32,
    /// Shared-randomness register width in bits.
    pub randomness_bits: u32,
    pub extractor_deviation: f64,
}

/// Record of a merging or splitting run.
#[derive(Debug, Clone, Serialize)]
pub struct ProtocolTranscript {
    pub protocol: String,
    pub variant: String,
    pub seed: u64,
    pub epsilon: f64,
    pub epsilon_prime: Option<f64>,
    /// Outcomes with nonzero probability, in the order used by the protocol.
    pub support: Vec<usize>,
    /// Chosen permutation(s): entry `x` is the position `a1 * m + a2` of
    /// (restricted) outcome `x`.
    pub permutations: Vec<Vec<usize>>,
    pub bins: Vec<BinRecord>,
    #[serde(skip)]
    pub isometries: Vec<Isometry>,
    /// `(rows, cols)` of each isometry.
    pub isometry_shapes: Vec<(usize, usize)>,
    /// Communication cost: qubits (coherent) or bits (classical).
    pub qubits_or_bits_sent: i64,
    /// Entanglement gained/consumed or shared randomness consumed, in (qu)bits.
    pub randomness_or_entanglement_used: i64,
    /// Dimension of the transmitted register.
    pub message_dim: usize,
    /// Schmidt rank of the entanglement (or size of the shared randomness).
    pub schmidt_rank: usize,
    pub h0: f64,
    pub h_min: f64,
    pub extractor_deviation: f64,
    pub permutation_tries: usize,
    /// Weight of the branch discarded by the inverse isometry (splitting only).
    pub discarded_weight: f64,
    /// Largest off-diagonal entry between distinct `X_B` blocks (classical only).
    pub xb_offdiagonal: Option<f64>,
    pub achieved_error: f64,
    pub error_bound: f64,
    pub cost_checks: Vec<CostCheck>,
    pub notes: Vec<String>,
}

impl ProtocolTranscript {
    pub(crate) fn empty(protocol: &str, variant: &str, seed: u64, epsilon: f64) -> Self {
        Self {
            protocol: protocol.into(),
            variant: variant.into(),
            seed,
            epsilon,
            epsilon_prime: None,
            support: Vec::new(),
            permutations: Vec::new(),
            bins: Vec::new(),
            isometries: Vec::new(),
            isometry_shapes: Vec::new(),
            qubits_or_bits_sent: 0,
            randomness_or_entanglement_used: 0,
            message_dim: 1,
            schmidt_rank: 1,
            h0: 0.0,
            h_min: 0.0,
            extractor_deviation: 0.0,
            permutation_tries: 0,
            discarded_weight: 0.0,
            xb_offdiagonal: None,
            achieved_error: 0.0,
            error_bound: epsilon,
            cost_checks: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn cost_checks_hold(&self) -> bool {
        self.cost_checks.iter().all(|c| c.holds)
    }
}

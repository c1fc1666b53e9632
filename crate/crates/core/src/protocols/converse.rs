//! Lower bound on the classical communication of any splitting protocol.

use serde::Serialize;

use crate::entropies::{smooth_i_max, Partition};
use crate::qcore::ClassicallyCoherentState;
use crate::{arg_err, Result};

/// Largest outcome count for which the diagonal-ball search is used as an oracle.
pub const ORACLE_MAX_OUTCOMES: usize = 4;

#[derive(Debug, Clone, Serialize)]
pub struct ConverseBound {
    /// `I_max^{eps+eps'}(X:R) - log(8/eps'^2 + 2)` with the smoothed term
    /// replaced by the value found by the smoother.
    pub value: f64,
    /// Smoothed max-information used in `value`.
    pub smoothing_upper: f64,
    /// `log(8/eps'^2 + 2)`.
    pub penalty: f64,
    /// Construction that produced the smoothed state.
    pub method: String,
    /// True when `rho_XR` is diagonal and small enough for the diagonal-ball
    /// search; otherwise the smoother only supplies an upper bound and the
    /// reported value is not a valid lower bound on the cost.
    pub certified: bool,
}

pub fn converse_bound(state: &ClassicallyCoherentState, eps: f64, eps_prime: f64) -> Result<ConverseBound> {
    if !(eps >= 0.0 && eps_prime > 0.0 && eps + eps_prime < 1.0) {
        return arg_err(format!("need eps >= 0, eps' > 0 and eps + eps' < 1 (got {eps}, {eps_prime})"));
    }
    let rho_xr = state.x_ref_state();
    let (res, report) = smooth_i_max(&rho_xr, &Partition::first_second(), eps + eps_prime)?;
    let penalty = (8.0 / (eps_prime * eps_prime) + 2.0).log2();
    let n = rho_xr.dim();
    let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || rho_xr.matrix()[(i, j)].norm() <= 1e-12));
    Ok(ConverseBound {
        value: res.value - penalty,
        smoothing_upper: res.value,
        penalty,
        method: report.candidate,
        certified: diagonal && state.num_outcomes() <= ORACLE_MAX_OUTCOMES,
    })
}

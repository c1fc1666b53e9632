//! Splitting at a cost set by the smooth max-information: Alice bins the
//! outcomes by dyadic probability scale, announces the bin, and runs classical
//! splitting on the (nearly flat) post-measurement state of that bin.

use serde::Serialize;

use crate::entropies::{h_min_cond, i_max, Direction, Partition};
use crate::linalg::{c, CMat};
use crate::protocols::merging::{
    block_offdiagonal, classical_fidelity, execute_classical_splitting, plan_transfer, TransferPlan,
};
use crate::protocols::transcript::{BinRecord, CostCheck, ProtocolTranscript};
use crate::qcore::ClassicallyCoherentState;
use crate::rng::derive_seed;
use crate::{arg_err, Error, Result};

/// Dyadic binning of an outcome distribution over `n` outcomes.
///
/// Bin `y < Q` holds `2^-(y+1) < p <= 2^-y`, bin `Q` holds `n^-2 < p <= 2^-Q`
/// and bin `Q + 1` collects the outcomes that are dropped (`p <= n^-2`).
#[derive(Debug, Clone, Serialize)]
pub struct BinStructure {
    pub num_outcomes: usize,
    /// `Q = ceil(2 log n - 1)`.
    pub q: usize,
    /// Bin of each outcome.
    pub assignment: Vec<usize>,
    /// Lower probability edge of bins `0..=Q`.
    pub thresholds: Vec<f64>,
}

impl BinStructure {
    pub fn new(probs: &[f64]) -> Result<Self> {
        let n = probs.len();
        if n < 2 {
            return arg_err("binning needs at least two outcomes");
        }
        let q = (2.0 * (n as f64).log2() - 1.0 - 1e-12).ceil().max(0.0) as usize;
        let floor = 1.0 / (n * n) as f64;
        let assignment = probs
            .iter()
            .map(|&p| {
                if p <= floor {
                    q + 1
                } else {
                    // Smallest y with p > 2^-(y+1).
                    let mut y = 0;
                    while y < q && p <= 0.5f64.powi(y as i32 + 1) {
                        y += 1;
                    }
                    y
                }
            })
            .collect();
        let mut thresholds: Vec<f64> = (0..q).map(|y| 0.5f64.powi(y as i32 + 1)).collect();
        thresholds.push(floor);
        Ok(Self { num_outcomes: n, q, assignment, thresholds })
    }

    /// `Q + 2`.
    pub fn bin_count(&self) -> usize {
        self.q + 2
    }

    pub fn dropped_bin(&self) -> usize {
        self.q + 1
    }

    /// Width of the register carrying the bin index.
    pub fn label_bits(&self) -> u32 {
        (self.bin_count() as f64).log2().ceil() as u32
    }

    pub fn members(&self, y: usize) -> Vec<usize> {
        (0..self.num_outcomes).filter(|&x| self.assignment[x] == y).collect()
    }

    /// Diagonal projectors `T^y`, one per bin.
    pub fn projectors(&self) -> Vec<CMat> {
        (0..self.bin_count())
            .map(|y| {
                let mut t = CMat::zeros(self.num_outcomes, self.num_outcomes);
                for x in self.members(y) {
                    t[(x, x)] = c(1.0);
                }
                t
            })
            .collect()
    }
}

/// Outcomes kept by the `eps'` smoothing step: the smallest ones are removed
/// while the projected state stays within `eps'`. Returns the mask and the
/// purified distance of the projection.
pub fn smoothing_mask(probs: &[f64], eps_prime: f64) -> (Vec<bool>, f64) {
    let mut keep = vec![true; probs.len()];
    if eps_prime <= 0.0 {
        return (keep, 0.0);
    }
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[a].total_cmp(&probs[b]));
    let mut removed = 0.0;
    let mut dist = 0.0;
    // Always keep the most likely outcome.
    for &x in &order[..order.len() - 1] {
        let w = 1.0 - removed - probs[x];
        let p = (1.0 - w * w).max(0.0).sqrt();
        if p > eps_prime {
            break;
        }
        keep[x] = false;
        removed += probs[x];
        dist = p;
    }
    (keep, dist)
}

struct Design {
    eps_prime: f64,
    mask: Vec<bool>,
    projection_distance: f64,
    bins: BinStructure,
    plans: Vec<(usize, Vec<usize>, TransferPlan)>,
    c: i64,
    s: i64,
}

fn build_design(state: &ClassicallyCoherentState, eps: f64, eps_prime: f64, seed: u64) -> Result<Design> {
    let (mask, projection_distance) = smoothing_mask(state.probs(), eps_prime);
    let design_probs: Vec<f64> = state.probs().iter().zip(&mask).map(|(&p, &k)| if k { p } else { 0.0 }).collect();
    let bins = BinStructure::new(&design_probs)?;
    let mut plans = Vec::new();
    let (mut cmax, mut smax) = (0i64, 0i64);
    for y in 0..=bins.q {
        let members = bins.members(y);
        if members.is_empty() {
            continue;
        }
        let sub = state.restrict(&members)?.normalized();
        let plan = plan_transfer(&sub, eps, derive_seed(seed, y as u64))?;
        cmax = cmax.max(bits(plan.message_dim));
        smax = smax.max(bits(plan.schmidt_rank));
        plans.push((y, members, plan));
    }
    let label = bins.label_bits() as i64;
    Ok(Design { eps_prime, mask, projection_distance, bins, plans, c: cmax + label, s: smax })
}

fn bits(dim: usize) -> i64 {
    (dim as f64).log2().ceil() as i64
}

/// `eps + eps' + sqrt(8 eps') + n^-1/2`.
pub fn binned_error_bound(eps: f64, eps_prime: f64, n: usize) -> f64 {
    eps + eps_prime + (8.0 * eps_prime).sqrt() + 1.0 / (n as f64).sqrt()
}

/// Runs binned classical splitting of `state` (outcome register `X_A'`).
///
/// Costs are register widths: `c = max_y c_y + ceil(log(Q + 2))` bits and
/// `s = max_y s_y` bits of shared randomness. The cost inequalities are
/// evaluated at the smoothed design state.
pub fn run_binned_splitting(
    state: &ClassicallyCoherentState,
    eps: f64,
    eps_prime: f64,
    seed: u64,
) -> Result<ProtocolTranscript> {
    if !(eps > 0.0 && eps < 1.0) {
        return arg_err(format!("eps = {eps} must lie in (0, 1)"));
    }
    if !(0.0..1.0).contains(&eps_prime) {
        return arg_err(format!("eps' = {eps_prime} must lie in [0, 1)"));
    }
    let n = state.num_outcomes();
    let mut notes = Vec::new();
    let mut design = build_design(state, eps, eps_prime, seed)?;
    if eps_prime > 0.0 {
        let plain = build_design(state, eps, 0.0, seed)?;
        if design.c > plain.c || design.c + design.s > plain.c + plain.s {
            notes.push(format!(
                "smoothing with eps' = {eps_prime} gave costs (c, s) = ({}, {}); fell back to the unsmoothed design ({}, {})",
                design.c, design.s, plain.c, plain.s
            ));
            design = plain;
        }
    }

    let mut t = ProtocolTranscript::empty("binned_splitting", "classical", seed, eps);
    t.epsilon_prime = Some(eps_prime);
    t.support = (0..n).filter(|&x| design.bins.assignment[x] != design.bins.dropped_bin()).collect();
    let mut fidelity = 0.0;
    let mut offdiag: f64 = 0.0;
    let mut discarded = 0.0;
    for (y, members, plan) in &design.plans {
        let weights: Vec<f64> = plan.support.iter().map(|&i| state.probs()[members[i]]).collect();
        let (omega, disc) = execute_classical_splitting(plan, &weights)?;
        offdiag = offdiag.max(block_offdiagonal(&omega, plan.d() * plan.side_dim * plan.ref_dim));
        fidelity += classical_fidelity(plan, &omega, &weights);
        discarded += disc;
        let bin_probs: Vec<f64> = plan.probs.clone();
        let pmax = bin_probs.iter().cloned().fold(0.0, f64::max);
        let h0 = (plan.d() as f64).log2();
        let h_min = -pmax.log2();
        t.cost_checks.push(CostCheck::new(format!("bin {y}: H_0 <= H_min + 1"), h0, h_min + 1.0));
        t.bins.push(BinRecord {
            bin: *y,
            outcomes: members.clone(),
            weight: weights.iter().sum(),
            h0,
            h_min,
            h_min_given_r: plan.h_min,
            message_bits: bits(plan.message_dim) as u32,
            randomness_bits: bits(plan.schmidt_rank) as u32,
            extractor_deviation: plan.deviation,
        });
        t.permutations.push(plan.permutation.clone());
        let iso = plan.isometry()?;
        t.isometry_shapes.push((iso.out_dim(), iso.in_dim()));
        t.isometries.push(iso);
        t.extractor_deviation = t.extractor_deviation.max(plan.deviation);
        t.permutation_tries += plan.tries;
    }
    if offdiag > 1e-12 {
        return Err(Error::Invariant(format!("binned output has X_B coherences {offdiag:.3e}")));
    }
    t.xb_offdiagonal = Some(offdiag);
    t.discarded_weight = discarded;
    t.qubits_or_bits_sent = design.c;
    t.randomness_or_entanglement_used = design.s;
    t.message_dim = design.plans.iter().map(|(_, _, p)| p.message_dim).max().unwrap_or(1);
    t.schmidt_rank = design.plans.iter().map(|(_, _, p)| p.schmidt_rank).max().unwrap_or(1);

    // Cost bounds at the design state.
    let kept: Vec<usize> = (0..n).filter(|&x| design.mask[x]).collect();
    let design_state = state.restrict(&kept)?.normalized();
    let rho_xr = design_state.x_ref_state();
    let imax = i_max(&rho_xr, &Partition::first_second(), Direction::AB)?.value;
    let h0 = (kept.len() as f64).log2();
    t.h0 = h0;
    t.h_min = h_min_cond(&rho_xr, &Partition::first_second())?.value;
    let loglog = (n as f64).log2().max(1.0).log2();
    t.cost_checks.push(CostCheck::new(
        "c <= I_max + 4 log(1/eps) + 4 + log log n",
        design.c as f64,
        imax + 4.0 * (1.0 / eps).log2() + 4.0 + loglog,
    ));
    t.cost_checks.push(CostCheck::new("c + s <= H_0 + 2 + log log n", (design.c + design.s) as f64, h0 + 2.0 + loglog));
    notes.push(format!(
        "design eps' = {}, projection distance {:.6}, occupied bins {}, label bits {}",
        design.eps_prime,
        design.projection_distance,
        design.plans.len(),
        design.bins.label_bits()
    ));
    t.notes = notes;

    t.achieved_error = (1.0 - fidelity * fidelity).max(0.0).sqrt();
    t.error_bound = binned_error_bound(eps, eps_prime, n);
    if t.achieved_error > t.error_bound + 1e-9 {
        return Err(Error::Invariant(format!("binned splitting error {} exceeds {}", t.achieved_error, t.error_bound)));
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use crate::rng::rng_from_seed;

    #[test]
    fn bins_partition_outcomes() {
        let b = BinStructure::new(&[0.9, 0.1 / 3.0, 0.1 / 3.0, 0.1 / 3.0]).unwrap();
        assert_eq!(b.q, 3);
        // 0.1/3 lies below 4^-2, so the small outcomes land in the dropped bin.
        assert_eq!(b.assignment, vec![0, 4, 4, 4]);
        assert_eq!((0..b.bin_count()).filter(|&y| !b.members(y).is_empty()).count(), 2);
        let ts = b.projectors();
        let sum = ts.iter().fold(CMat::zeros(4, 4), |acc, t| acc + t);
        assert_eq!(sum, linalg::identity(4));
        for i in 0..ts.len() {
            for j in 0..ts.len() {
                if i != j {
                    assert_eq!(&ts[i] * &ts[j], CMat::zeros(4, 4));
                }
            }
        }
    }

    #[test]
    fn dyadic_edges() {
        let b = BinStructure::new(&[0.5, 0.25, 0.125, 0.125]).unwrap();
        assert_eq!(b.assignment, vec![1, 2, 3, 3]);
        let b = BinStructure::new(&[0.96, 0.02, 0.01, 0.01]).unwrap();
        assert_eq!(b.assignment, vec![0, 4, 4, 4]);
    }

    #[test]
    fn uniform_one_bin() {
        let v = linalg::basis_vector(1, 0);
        let s = ClassicallyCoherentState::product(vec![0.25; 4], 1, 1, v).unwrap();
        let t = run_binned_splitting(&s, 0.5, 0.0, 3).unwrap();
        assert_eq!(t.bins.len(), 1);
        assert!(t.cost_checks_hold(), "{:?}", t.cost_checks);
        assert!(t.achieved_error < 1e-7);
    }

    #[test]
    fn random_state_end_to_end() {
        let mut rng = rng_from_seed(8);
        let s = ClassicallyCoherentState::random(8, 1, 2, &mut rng);
        let t = run_binned_splitting(&s, 0.2, 0.05, 4).unwrap();
        assert!(t.achieved_error <= binned_error_bound(0.2, 0.05, 8));
        assert_eq!(t.xb_offdiagonal, Some(0.0));
    }

    #[test]
    fn smoothing_mask_respects_radius() {
        let p = [0.7, 0.2, 0.06, 0.04];
        let (keep, d) = smoothing_mask(&p, 0.5);
        assert!(d <= 0.5);
        assert!(keep[0] && keep[1]);
        assert!(!keep[3]);
    }
}

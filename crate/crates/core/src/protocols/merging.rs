//! State merging of classically coherent states and its time reversal, state
//! splitting (coherent and classical variants).
//!
//! Register conventions (all big-endian). The cc state lives on
//! `[X_A, X_B, S, R]`. In merging Alice holds `X_A`, Bob holds `X_B S`. After
//! restricting to the `d` outcomes of nonzero probability and padding to
//! `D = E m`, Alice permutes `X_A` into `A1 (E) (x) A2 (m)` and sends `A2`;
//! Bob maps `A2 X_B S` to `X_B' X_B S B1` with an Uhlmann isometry `V`.
//! Splitting runs the same isometry backwards with the roles exchanged.

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::entropies::{h_min_cond, Partition};
use crate::linalg::{self, c, CMat, CVec};
use crate::protocols::extractor::permutation_deviation;
use crate::protocols::transcript::{CostCheck, ProtocolTranscript};
use crate::qcore::distance::fidelity_matrices;
use crate::qcore::{ClassicallyCoherentState, Isometry};
use crate::rng::task_rng;
use crate::{arg_err, Error, Result};

/// Permutations sampled before giving up on the extractor premise.
pub const MAX_PERMUTATION_TRIES: usize = 64;
/// Accepted defect `max |V^dagger V - 1|` of the Uhlmann isometry.
pub const ISOMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SplittingVariant {
    Coherent,
    Classical,
}

/// Rounds values within `1e-9` of an integer so that ceilings and floors of
/// solver output are stable.
fn snap(x: f64) -> f64 {
    if (x - x.round()).abs() < 1e-9 {
        x.round()
    } else {
        x
    }
}

/// `(ceil(H_0 - H_min + 4 log 1/eps), floor(H_min - 4 log 1/eps))`.
pub fn merging_costs(h0: f64, h_min: f64, eps: f64) -> (i64, i64) {
    let slack = 4.0 * (1.0 / eps).log2();
    (snap(h0 - h_min + slack).ceil() as i64, snap(h_min - slack).floor() as i64)
}

/// Everything the two parties agree on before running merging or splitting.
#[derive(Debug, Clone)]
pub struct TransferPlan {
    /// Original labels of the kept outcomes.
    pub support: Vec<usize>,
    /// Normalized probabilities on the support.
    pub probs: Vec<f64>,
    pub vectors: Vec<CVec>,
    pub side_dim: usize,
    pub ref_dim: usize,
    pub h0: f64,
    pub h_min: f64,
    pub q: i64,
    pub e: i64,
    /// `m`: dimension of the transmitted register.
    pub message_dim: usize,
    /// `E`: Schmidt rank of the entanglement (or randomness alphabet size).
    pub schmidt_rank: usize,
    /// `pi[x] = a1 * m + a2`, over the padded range `0..E m`.
    pub permutation: Vec<usize>,
    pub inverse: Vec<usize>,
    pub deviation: f64,
    pub tries: usize,
    /// `V: A2 X_B S -> X_B' X_B S B1`.
    pub v: CMat,
    /// Overlap attained by `V` (Uhlmann fidelity).
    pub uhlmann_fidelity: f64,
    /// Fidelity of the reduced states on `A1 R`, equal to the above by Uhlmann.
    pub reduced_fidelity: f64,
}

impl TransferPlan {
    pub fn d(&self) -> usize {
        self.support.len()
    }

    pub fn padded_dim(&self) -> usize {
        self.message_dim * self.schmidt_rank
    }

    fn b_in(&self) -> usize {
        self.message_dim * self.d() * self.side_dim
    }

    fn b_out(&self) -> usize {
        self.d() * self.d() * self.side_dim * self.schmidt_rank
    }

    fn ext(&self) -> usize {
        self.schmidt_rank * self.ref_dim
    }

    pub fn isometry(&self) -> Result<Isometry> {
        Isometry::new(self.v.clone(), vec![self.d(), self.d(), self.side_dim, self.schmidt_rank])
    }

    /// Permuted state as an `A2 X_B S` by `A1 R` amplitude matrix, with weights
    /// `w` (indexed like the support).
    fn sigma_matrix(&self, w: &[f64]) -> CMat {
        let (d, s, r, m) = (self.d(), self.side_dim, self.ref_dim, self.message_dim);
        let mut out = CMat::zeros(self.b_in(), self.ext());
        for x in 0..d {
            let (a1, a2) = (self.permutation[x] / m, self.permutation[x] % m);
            let amp = w[x].sqrt();
            for ss in 0..s {
                for rr in 0..r {
                    out[((a2 * d + x) * s + ss, a1 * r + rr)] = self.vectors[x][ss * r + rr] * c(amp);
                }
            }
        }
        out
    }

    /// `|rho>_{X_B' X_B S R} (x) |Phi_E>_{B1 A1}` as an `X_B' X_B S B1` by `A1 R`
    /// amplitude matrix.
    fn target_matrix(&self, w: &[f64]) -> CMat {
        let (d, s, r, e) = (self.d(), self.side_dim, self.ref_dim, self.schmidt_rank);
        let mut out = CMat::zeros(self.b_out(), self.ext());
        let norm = 1.0 / (e as f64).sqrt();
        for x in 0..d {
            let amp = w[x].sqrt() * norm;
            for ss in 0..s {
                for k in 0..e {
                    for rr in 0..r {
                        out[(((x * d + x) * s + ss) * e + k, k * r + rr)] = self.vectors[x][ss * r + rr] * c(amp);
                    }
                }
            }
        }
        out
    }

    /// `sum_x sqrt(w_x) |x>_{X_B} |x>_{X_A} |psi_x>` on `[X_B (E m), X_A, S, R]`.
    fn split_target(&self, w: &[f64]) -> CVec {
        let (d, s, r) = (self.d(), self.side_dim, self.ref_dim);
        let mut out = CVec::zeros(self.padded_dim() * d * s * r);
        for x in 0..d {
            let amp = c(w[x].sqrt());
            for k in 0..s * r {
                out[(x * d + x) * s * r + k] = self.vectors[x][k] * amp;
            }
        }
        out
    }
}

/// Builds the plan: costs, a certified permutation and the Uhlmann isometry.
pub fn plan_transfer(state: &ClassicallyCoherentState, eps: f64, seed: u64) -> Result<TransferPlan> {
    if !(eps > 0.0 && eps < 1.0) {
        return arg_err(format!("eps = {eps} must lie in (0, 1)"));
    }
    let support = state.support();
    let restricted = state.restrict(&support)?.normalized();
    let d = support.len();
    let h0 = (d as f64).log2();
    let h_min = h_min_cond(&restricted.x_ref_state(), &Partition::first_second())?.value;
    let (q, e) = merging_costs(h0, h_min, eps);
    let (message_dim, schmidt_rank) = if q as f64 >= h0 - 1e-12 {
        (d, 1)
    } else {
        let m = 1usize << q.max(0);
        (m, d.div_ceil(m))
    };
    let padded = message_dim * schmidt_rank;

    let blocks: Vec<CMat> = (0..d).map(|x| restricted.conditional_ref(x) * c(restricted.probs()[x])).collect();
    let rho_r = restricted.ref_marginal();
    let (permutation, deviation, tries) = if schmidt_rank == 1 {
        ((0..padded).collect::<Vec<_>>(), 0.0, 0)
    } else {
        let mut best: Option<(Vec<usize>, f64)> = None;
        let mut tries = 0;
        for t in 0..MAX_PERMUTATION_TRIES {
            tries = t + 1;
            let mut rng = task_rng(seed, t as u64);
            let mut pi: Vec<usize> = (0..padded).collect();
            pi.shuffle(&mut rng);
            let dev = permutation_deviation(&blocks, &rho_r, &pi, schmidt_rank, message_dim);
            if best.as_ref().is_none_or(|(_, b)| dev < *b) {
                best = Some((pi, dev));
            }
            if dev <= eps * eps {
                break;
            }
        }
        let (pi, dev) = best.expect("at least one try");
        if dev > eps * eps {
            return Err(Error::PremiseNotMet {
                reason: format!("no permutation among {MAX_PERMUTATION_TRIES} tries reached deviation <= eps^2"),
                best_deviation: dev,
            });
        }
        (pi, dev, tries)
    };
    let mut inverse = vec![0; padded];
    for (x, &pos) in permutation.iter().enumerate() {
        inverse[pos] = x;
    }

    let mut plan = TransferPlan {
        support,
        probs: restricted.probs().to_vec(),
        vectors: restricted.vectors().to_vec(),
        side_dim: state.side_dim(),
        ref_dim: state.ref_dim(),
        h0,
        h_min,
        q,
        e,
        message_dim,
        schmidt_rank,
        permutation,
        inverse,
        deviation,
        tries,
        v: CMat::zeros(0, 0),
        uhlmann_fidelity: 0.0,
        reduced_fidelity: 0.0,
    };
    let sigma = plan.sigma_matrix(&plan.probs);
    let tau = plan.target_matrix(&plan.probs);
    let (v, fid) = uhlmann_isometry(&sigma, &tau)?;
    let reduced_fidelity =
        fidelity_matrices(&(sigma.adjoint() * &sigma).transpose(), &(tau.adjoint() * &tau).transpose())?;
    if (fid - reduced_fidelity).abs() > 1e-6 {
        return Err(Error::Invariant(format!(
            "Uhlmann overlap {fid} disagrees with reduced-state fidelity {reduced_fidelity}"
        )));
    }
    plan.v = v;
    plan.uhlmann_fidelity = fid;
    plan.reduced_fidelity = reduced_fidelity;
    Ok(plan)
}

/// Isometry `V` (rows of `tau` by rows of `sigma`) maximizing
/// `|tr[tau^dagger V sigma]|`, completed on the orthogonal complement.
/// Returns `(V, attained overlap)`.
pub fn uhlmann_isometry(sigma: &CMat, tau: &CMat) -> Result<(CMat, f64)> {
    let (b_in, b_out) = (sigma.nrows(), tau.nrows());
    if b_out < b_in || sigma.ncols() != tau.ncols() {
        return arg_err("incompatible purifications");
    }
    // Reduce both purifications to their column spaces so that only a small
    // core matrix needs an SVD: sigma tau^dagger = Qs (Rs Rt^dagger) Qt^dagger.
    let (qs, rs) = sigma.clone().qr().unpack();
    let (qt, rt) = tau.clone().qr().unpack();
    let core = linalg::svd(&(rs * rt.adjoint()));
    let smax = core.s.first().copied().unwrap_or(0.0);
    let rank = core.s.iter().filter(|&&s| s > 1e-12 * smax.max(1e-300)).count();
    let overlap: f64 = core.s.iter().sum();
    let ur = &qs * core.u.columns(0, rank);
    let wr = &qt * core.v.columns(0, rank);
    let mut v = &wr * ur.adjoint();
    if rank < b_in {
        let ufull = linalg::complete_basis(&ur);
        let wfull = linalg::extend_orthonormal(&wr, b_in);
        let uperp = ufull.columns(rank, b_in - rank).into_owned();
        let wperp = wfull.columns(rank, b_in - rank).into_owned();
        v += wperp * uperp.adjoint();
    }
    let defect = linalg::max_abs_entry(&(v.adjoint() * &v - linalg::identity(b_in)));
    if defect > ISOMETRY_TOL {
        return Err(Error::Invariant(format!("Uhlmann map is not an isometry (defect {defect:.3e})")));
    }
    Ok((v, overlap))
}

fn base_transcript(
    protocol: &str,
    variant: &str,
    plan: &TransferPlan,
    seed: u64,
    eps: f64,
) -> Result<ProtocolTranscript> {
    let mut t = ProtocolTranscript::empty(protocol, variant, seed, eps);
    t.support = plan.support.clone();
    t.permutations = vec![plan.permutation.clone()];
    let iso = plan.isometry()?;
    t.isometry_shapes = vec![(iso.out_dim(), iso.in_dim())];
    t.isometries = vec![iso];
    t.qubits_or_bits_sent = plan.q;
    t.randomness_or_entanglement_used = plan.e;
    t.message_dim = plan.message_dim;
    t.schmidt_rank = plan.schmidt_rank;
    t.h0 = plan.h0;
    t.h_min = plan.h_min;
    t.extractor_deviation = plan.deviation;
    t.permutation_tries = plan.tries;
    t.cost_checks.push(CostCheck::new("log2(message_dim) <= q", (plan.message_dim as f64).log2(), plan.q as f64));
    if plan.padded_dim() != plan.d() {
        t.notes.push(format!("outcome register padded from {} to {}", plan.d(), plan.padded_dim()));
    }
    Ok(t)
}

fn weights_on_support(state: &ClassicallyCoherentState, plan: &TransferPlan) -> Vec<f64> {
    plan.support.iter().map(|&x| state.probs()[x]).collect()
}

/// Output of merging as an `X_B' X_B S B1` by `A1 R` amplitude matrix, together
/// with the achieved purified distance to `rho (x) Phi_E`.
pub fn execute_merging(plan: &TransferPlan, weights: &[f64]) -> (CMat, f64) {
    let sigma = plan.sigma_matrix(weights);
    let omega = &plan.v * sigma;
    let tau = plan.target_matrix(weights);
    let overlap = (tau.adjoint() * &omega).trace().norm();
    (omega, (1.0 - overlap * overlap).max(0.0).sqrt())
}

/// Runs state merging on `state` and records the transcript.
pub fn run_merging(state: &ClassicallyCoherentState, eps: f64, seed: u64) -> Result<ProtocolTranscript> {
    let plan = plan_transfer(state, eps, seed)?;
    let weights = weights_on_support(state, &plan);
    let (_, p) = execute_merging(&plan, &weights);
    let mut t = base_transcript("merging", "coherent", &plan, seed, eps)?;
    t.achieved_error = p;
    t.notes.push(format!("Uhlmann fidelity {:.12}", plan.uhlmann_fidelity));
    if p > eps + 1e-9 {
        return Err(Error::Invariant(format!("merging error {p} exceeds eps = {eps}")));
    }
    Ok(t)
}

/// Coherent splitting output from Alice's input `psi` (an `X_A' X_A S B1` by
/// `A1 R` amplitude matrix): returns the density operator on
/// `[X_B (E m), X_A, S, R]` and the discarded weight.
pub fn execute_coherent_splitting(plan: &TransferPlan, psi: &CMat) -> (CMat, f64) {
    let (d, s, r, m, e) = (plan.d(), plan.side_dim, plan.ref_dim, plan.message_dim, plan.schmidt_rank);
    let y = plan.v.adjoint() * psi;
    let disc = psi - &plan.v * &y;
    let rho_disc = (disc.adjoint() * &disc).transpose();
    let n_out = plan.padded_dim() * d * s * r;
    let mut succ = CVec::zeros(n_out);
    for a2 in 0..m {
        for xa in 0..d {
            for ss in 0..s {
                for a1 in 0..e {
                    let xb = plan.inverse[a1 * m + a2];
                    for rr in 0..r {
                        succ[((xb * d + xa) * s + ss) * r + rr] += y[((a2 * d + xa) * s + ss, a1 * r + rr)];
                    }
                }
            }
        }
    }
    // Discarded branch: Alice's registers reset to |0>, Bob still decodes A1.
    let mut k = CMat::zeros(n_out, e * r);
    for a1 in 0..e {
        let xb = plan.inverse[a1 * m];
        for rr in 0..r {
            k[(((xb * d) * s) * r + rr, a1 * r + rr)] = c(1.0);
        }
    }
    let omega = linalg::outer(&succ) + &k * &rho_disc * k.adjoint();
    (omega, linalg::real_trace(&rho_disc))
}

/// Classical splitting with `E` values of shared randomness: returns the
/// output on `[X_B (E m), X_A, S, R]` and the discarded weight.
pub fn execute_classical_splitting(plan: &TransferPlan, weights: &[f64]) -> Result<(CMat, f64)> {
    let (d, s, r, m, e) = (plan.d(), plan.side_dim, plan.ref_dim, plan.message_dim, plan.schmidt_rank);
    let alice_dims = [m, d, s, r];
    let n_alice = m * d * s * r;
    let n_out = plan.padded_dim() * d * s * r;
    let mut omega = CMat::zeros(n_out, n_out);
    let mut discarded = 0.0;
    for k in 0..e {
        // Alice's input with her copy of the shared value k in B1.
        let mut psi = CMat::zeros(plan.b_out(), r);
        for x in 0..d {
            let amp = c(weights[x].sqrt());
            for ss in 0..s {
                for rr in 0..r {
                    psi[(((x * d + x) * s + ss) * e + k, rr)] = plan.vectors[x][ss * r + rr] * amp;
                }
            }
        }
        let y = plan.v.adjoint() * &psi;
        let disc = &psi - &plan.v * &y;
        let rho_disc = (disc.adjoint() * &disc).transpose();
        discarded += linalg::real_trace(&rho_disc) / e as f64;
        let yv = CVec::from_iterator(
            n_alice,
            (0..plan.b_in()).flat_map(|i| (0..r).map(move |rr| (i, rr))).map(|(i, rr)| y[(i, rr)]),
        );
        let mut rho = linalg::outer(&yv);
        let mut head = rho.view_mut((0, 0), (r, r));
        head += &rho_disc;
        // The message is sent over a classical channel.
        let rho = linalg::dephase(&rho, &alice_dims, 0);
        let mut perm = CMat::zeros(plan.padded_dim(), m);
        for a2 in 0..m {
            perm[(plan.inverse[k * m + a2], a2)] = c(1.0);
        }
        let lift = linalg::kron(&perm, &linalg::identity(d * s * r));
        omega += &lift * rho * lift.adjoint() / c(e as f64);
    }
    Ok((omega, discarded))
}

/// Largest entry coupling different values of the first register.
pub fn block_offdiagonal(m: &CMat, block: usize) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i / block != j / block {
                worst = worst.max(m[(i, j)].norm());
            }
        }
    }
    worst
}

/// Fidelity of a splitting output with the pure target.
fn coherent_fidelity_sq(omega: &CMat, target: &CVec) -> f64 {
    (target.adjoint() * omega * target)[(0, 0)].re
}

/// `sum_x sqrt(w_x <x, psi_x| omega_xx |x, psi_x>)` against the dephased target.
pub(crate) fn classical_fidelity(plan: &TransferPlan, omega: &CMat, weights: &[f64]) -> f64 {
    let (d, s, r) = (plan.d(), plan.side_dim, plan.ref_dim);
    let blk = d * s * r;
    (0..d)
        .map(|x| {
            let mut u = CVec::zeros(blk);
            for k in 0..s * r {
                u[x * s * r + k] = plan.vectors[x][k];
            }
            let b = omega.view((x * blk, x * blk), (blk, blk));
            let val = (u.adjoint() * b * &u)[(0, 0)].re.max(0.0);
            (weights[x] * val).sqrt()
        })
        .sum()
}

/// Runs state splitting of `state` (the copy register `X_B` of the cc layout
/// plays the role of Alice's `X_A'`, `S` is Alice's side system).
pub fn run_splitting(
    state: &ClassicallyCoherentState,
    eps: f64,
    seed: u64,
    variant: SplittingVariant,
) -> Result<ProtocolTranscript> {
    let plan = plan_transfer(state, eps, seed)?;
    let weights = weights_on_support(state, &plan);
    let name = match variant {
        SplittingVariant::Coherent => "coherent",
        SplittingVariant::Classical => "classical",
    };
    let mut t = base_transcript("splitting", name, &plan, seed, eps)?;
    let p = match variant {
        SplittingVariant::Coherent => {
            let psi = plan.target_matrix(&weights);
            let (omega, discarded) = execute_coherent_splitting(&plan, &psi);
            t.discarded_weight = discarded;
            let f2 = coherent_fidelity_sq(&omega, &plan.split_target(&weights));
            (1.0 - f2).max(0.0).sqrt()
        }
        SplittingVariant::Classical => {
            let (omega, discarded) = execute_classical_splitting(&plan, &weights)?;
            t.discarded_weight = discarded;
            let off = block_offdiagonal(&omega, plan.d() * plan.side_dim * plan.ref_dim);
            t.xb_offdiagonal = Some(off);
            if off > 1e-12 {
                return Err(Error::Invariant(format!("classical output has X_B coherences {off:.3e}")));
            }
            let f = classical_fidelity(&plan, &omega, &weights);
            (1.0 - f * f).max(0.0).sqrt()
        }
    };
    t.achieved_error = p;
    if p > eps + 1e-9 {
        return Err(Error::Invariant(format!("splitting error {p} exceeds eps = {eps}")));
    }
    Ok(t)
}

/// Result of merging followed by splitting with an independently seeded plan.
#[derive(Debug, Clone, Serialize)]
pub struct RoundTrip {
    pub merging_error: f64,
    pub round_trip_error: f64,
    pub bound: f64,
}

/// Feeds the merging output into splitting (Bob's registers become Alice's)
/// and measures the distance of the result to the initial state.
pub fn round_trip(state: &ClassicallyCoherentState, eps: f64, seed: u64) -> Result<RoundTrip> {
    let merge_plan = plan_transfer(state, eps, seed)?;
    let split_plan = plan_transfer(state, eps, crate::rng::derive_seed(seed, 1))?;
    if merge_plan.schmidt_rank != split_plan.schmidt_rank {
        return Err(Error::Invariant("plans disagree on the entanglement size".into()));
    }
    let weights = weights_on_support(state, &merge_plan);
    let (omega, merging_error) = execute_merging(&merge_plan, &weights);
    let (out, _) = execute_coherent_splitting(&split_plan, &omega);
    let f2 = coherent_fidelity_sq(&out, &split_plan.split_target(&weights));
    Ok(RoundTrip { merging_error, round_trip_error: (1.0 - f2).max(0.0).sqrt(), bound: 2.0 * eps })
}

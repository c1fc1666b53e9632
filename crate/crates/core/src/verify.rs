//! Randomized property suites.
//!
//! Each invariant runs a number of seeded trials. A trial returns a margin that
//! must be at least `-slack`, plus a JSON description of its inputs. Failing
//! trials keep that description so they can be replayed.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::entropies::one_shot::{h0_hmax_hr, h_min};
use crate::entropies::{h0, h_min_cond, i_max, verify_uncertainty_relation, Direction, Partition};
use crate::io::{matrix_to_json, StateFile};
use crate::linalg::{self, c, CMat};
use crate::protocols::{
    converse_bound, extractor_deviation, merging_costs, run_binned_splitting, run_merging, ExtractorMode,
};
use crate::qcore::distance::purified_distance_matrices;
use crate::qcore::{ClassicallyCoherentState, DensityOperator, Measurement, PureState};
use crate::rates::{
    feedback_region, groenewold, info_gain, info_gain_state, max_outcome_entropy, nonfeedback_region,
    validate_decomposition, Decomposition, OptimizerConfig,
};
use crate::rng::{derive_seed, task_rng, Rng, DEFAULT_SEED};
use crate::typicality::{prune_average_check, verify_typicality_properties, TypicalSpec};
use crate::{arg_err, Error, Result};

/// Slack for closed-form inequalities.
pub const EXACT_SLACK: f64 = 1e-9;
/// Slack where a conic solver is involved.
pub const SOLVER_SLACK: f64 = 1e-6;
/// Failing trials recorded per invariant.
pub const MAX_RECORDED: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    AppendixLemmas,
    ProtocolsSandwich,
    Typicality,
    Uncertainty,
    Rates,
}

impl Suite {
    pub const ALL: [Suite; 5] =
        [Suite::AppendixLemmas, Suite::ProtocolsSandwich, Suite::Typicality, Suite::Uncertainty, Suite::Rates];

    pub fn name(self) -> &'static str {
        match self {
            Suite::AppendixLemmas => "appendix-lemmas",
            Suite::ProtocolsSandwich => "protocols-sandwich",
            Suite::Typicality => "typicality",
            Suite::Uncertainty => "uncertainty",
            Suite::Rates => "rates",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Suite::ALL.iter().map(|x| x.name()).collect();
            Error::Argument(format!("unknown suite {s:?}; expected one of {}", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Multiplies every invariant's default trial count (at least one trial runs).
    pub scale: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { seed: DEFAULT_SEED, scale: 1.0 }
    }
}

impl SuiteConfig {
    fn trials(&self, default: usize) -> usize {
        ((default as f64 * self.scale).round() as usize).max(1)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub trial: usize,
    pub seed: u64,
    pub margin: Option<f64>,
    pub error: Option<String>,
    pub input: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantReport {
    pub name: String,
    pub trials: usize,
    pub passed: usize,
    pub errors: usize,
    pub slack: f64,
    pub worst_margin: f64,
    /// Reported but not required to hold.
    pub advisory: bool,
    pub violations: Vec<Violation>,
}

impl InvariantReport {
    pub fn pass(&self) -> bool {
        self.advisory || self.passed == self.trials
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub invariants: Vec<InvariantReport>,
    pub all_pass: bool,
}

impl SuiteReport {
    pub fn invariant(&self, name: &str) -> Option<&InvariantReport> {
        self.invariants.iter().find(|r| r.name == name)
    }
}

/// Margin of one trial and the inputs that produced it.
pub struct Trial {
    pub margin: f64,
    pub input: Value,
}

impl Trial {
    pub fn new(margin: f64, input: Value) -> Self {
        Self { margin, input }
    }
}

/// Runs `trials` seeded trials of `f`; trial `t` of invariant `index` draws from
/// `task_rng(derive_seed(seed, index), t)`.
pub fn run_invariant<F>(name: &str, index: u64, trials: usize, slack: f64, seed: u64, f: F) -> InvariantReport
where
    F: Fn(&mut Rng) -> Result<Trial> + Sync,
{
    let base = derive_seed(seed, index);
    let outcomes: Vec<Result<Trial>> = (0..trials).into_par_iter().map(|t| f(&mut task_rng(base, t as u64))).collect();
    let mut passed = 0;
    let mut errors = 0;
    let mut worst = f64::INFINITY;
    let mut violations = Vec::new();
    for (t, out) in outcomes.into_iter().enumerate() {
        let violation = match out {
            Ok(trial) => {
                worst = worst.min(trial.margin);
                if trial.margin >= -slack {
                    passed += 1;
                    None
                } else {
                    Some(Violation {
                        trial: t,
                        seed: base,
                        margin: Some(trial.margin),
                        error: None,
                        input: trial.input,
                    })
                }
            }
            Err(e) => {
                errors += 1;
                Some(Violation { trial: t, seed: base, margin: None, error: Some(e.to_string()), input: Value::Null })
            }
        };
        if let Some(v) = violation {
            if violations.len() < MAX_RECORDED {
                violations.push(v);
            }
        }
    }
    InvariantReport {
        name: name.into(),
        trials,
        passed,
        errors,
        slack,
        worst_margin: worst,
        advisory: false,
        violations,
    }
}

pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> Result<SuiteReport> {
    let invariants = match suite {
        Suite::AppendixLemmas => appendix_lemmas(cfg),
        Suite::ProtocolsSandwich => protocols_sandwich(cfg),
        Suite::Typicality => typicality_suite(cfg)?,
        Suite::Uncertainty => vec![uncertainty_sweep(cfg)],
        Suite::Rates => rates_suite(cfg),
    };
    let all_pass = invariants.iter().all(InvariantReport::pass);
    Ok(SuiteReport { suite, seed: cfg.seed, invariants, all_pass })
}

fn state_json(m: &CMat, dims: &[usize]) -> Value {
    serde_json::to_value(StateFile { dims: dims.to_vec(), matrix: matrix_to_json(m) }).expect("serializable")
}

fn density(m: CMat, dims: Vec<usize>) -> Result<DensityOperator> {
    DensityOperator::new(linalg::hermitian_part(&m), dims)
}

fn random_state(rng: &mut Rng, dims: &[usize]) -> CMat {
    let d: usize = dims.iter().product();
    let rank = rng.random_range(1..=d);
    linalg::random_density(d, rank, rng)
}

fn imax(m: &CMat, dims: &[usize], partition: &Partition) -> Result<f64> {
    Ok(i_max(&density(m.clone(), dims.to_vec())?, partition, Direction::AB)?.value)
}

/// Kraus operators of a random channel from `din` to `dout` with `k` operators.
fn random_channel(rng: &mut Rng, din: usize, dout: usize, k: usize) -> Vec<CMat> {
    let v = linalg::random_isometry(dout * k, din, rng);
    (0..k).map(|i| v.rows(i * dout, dout).into_owned()).collect()
}

/// `0 <= Pi <= 1` with uniformly drawn eigenvalues in a Haar-random basis.
fn random_contraction(rng: &mut Rng, d: usize) -> CMat {
    let u = linalg::random_unitary(d, rng);
    let vals: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    linalg::hermitian_part(&(&u * linalg::diag_real(&vals) * u.adjoint()))
}

fn subnormalized(rng: &mut Rng, d: usize) -> CMat {
    let t = 0.5 + 0.5 * rng.random::<f64>();
    random_state(rng, &[d]) * c(t)
}

pub fn appendix_lemmas(cfg: &SuiteConfig) -> Vec<InvariantReport> {
    let n = cfg.trials(500);
    let seed = cfg.seed;
    let ab = Partition::first_second();
    vec![
        run_invariant("conditioning_costs_at_most_rank", 0, n, SOLVER_SLACK, seed, |rng| {
            let m = random_state(rng, &[2, 2]);
            let rho = density(m.clone(), vec![2, 2])?;
            let cond = h_min_cond(&rho, &ab)?.value;
            let h0_b = h0(&rho.partial_trace(&[1])?);
            Ok(Trial::new(cond - (h_min(&rho) - h0_b), json!({ "rho_ab": state_json(&m, &[2, 2]) })))
        }),
        run_invariant("max_information_between_entropies", 1, n, SOLVER_SLACK, seed, |rng| {
            let m = random_state(rng, &[2, 2]);
            let rho = density(m.clone(), vec![2, 2])?;
            let rho_a = rho.partial_trace(&[0])?;
            let cond = h_min_cond(&rho, &ab)?.value;
            let info = i_max(&rho, &ab, Direction::AB)?.value;
            let upper = h0_hmax_hr(&rho_a)?.h_r - cond;
            let lower = h_min(&rho_a) - cond;
            Ok(Trial::new((upper - info).min(info - lower), json!({ "rho_ab": state_json(&m, &[2, 2]) })))
        }),
        run_invariant("local_channels_reduce_max_information", 2, n, SOLVER_SLACK, seed, |rng| {
            let m = random_state(rng, &[2, 2]);
            let da_out = rng.random_range(2..=3);
            let ka = rng.random_range(1..=3);
            let kb = rng.random_range(1..=3);
            let ea = random_channel(rng, 2, da_out, ka);
            let eb = random_channel(rng, 2, 2, kb);
            let mut out = CMat::zeros(da_out * 2, da_out * 2);
            for k in &ea {
                for l in &eb {
                    let kl = linalg::kron(k, l);
                    out += &kl * &m * kl.adjoint();
                }
            }
            let before = imax(&m, &[2, 2], &ab)?;
            let after = imax(&out, &[da_out, 2], &ab)?;
            let input = json!({
                "rho_ab": state_json(&m, &[2, 2]),
                "kraus_a": ea.iter().map(matrix_to_json).collect::<Vec<_>>(),
                "kraus_b": eb.iter().map(matrix_to_json).collect::<Vec<_>>(),
            });
            Ok(Trial::new(before - after, input))
        }),
        run_invariant("projective_outcomes_reduce_max_information", 3, n, SOLVER_SLACK, seed, |rng| {
            let m = random_state(rng, &[3, 2]);
            let u = linalg::random_unitary(3, rng);
            let groups: Vec<Vec<usize>> =
                if rng.random::<bool>() { vec![vec![0], vec![1], vec![2]] } else { vec![vec![0], vec![1, 2]] };
            let before = imax(&m, &[3, 2], &ab)?;
            let mut best = f64::NEG_INFINITY;
            let mut projectors = Vec::new();
            for g in &groups {
                let cols: Vec<_> = g.iter().map(|&k| u.column(k).into_owned()).collect();
                let basis = CMat::from_columns(&cols);
                let p = &basis * basis.adjoint();
                let pp = linalg::kron(&p, &linalg::identity(2));
                let post = &pp * &m * &pp;
                let w = linalg::real_trace(&post);
                projectors.push(matrix_to_json(&p));
                if w > 1e-9 {
                    best = best.max(imax(&(post / c(w)), &[3, 2], &ab)?);
                }
            }
            Ok(Trial::new(before - best, json!({ "rho_ab": state_json(&m, &[3, 2]), "projectors": projectors })))
        }),
        run_invariant("contractions_reduce_max_information", 4, n, SOLVER_SLACK, seed, |rng| {
            let m = random_state(rng, &[2, 2]);
            let p = random_contraction(rng, 2);
            let pp = linalg::kron(&p, &linalg::identity(2));
            let cut = &pp * &m * &pp;
            let input = json!({ "rho_ar": state_json(&m, &[2, 2]), "pi_a": matrix_to_json(&p) });
            if linalg::real_trace(&cut) <= 1e-9 {
                return Ok(Trial::new(0.0, input));
            }
            Ok(Trial::new(imax(&m, &[2, 2], &ab)? - imax(&cut, &[2, 2], &ab)?, input))
        }),
        run_invariant("quantum_side_register_adds_at_most_2log", 5, n, SOLVER_SLACK, seed, |rng| {
            let m = random_state(rng, &[2, 2, 2]);
            let full = imax(&m, &[2, 2, 2], &Partition::new(vec![0], vec![1, 2]))?;
            let part = imax(&m, &[2, 2, 2], &Partition::new(vec![0], vec![1]))?;
            Ok(Trial::new(part + 2.0 - full, json!({ "rho_abr": state_json(&m, &[2, 2, 2]) })))
        }),
        run_invariant("classical_side_register_adds_at_most_log", 6, n, SOLVER_SLACK, seed, |rng| {
            let nx = rng.random_range(2..=3);
            let p = linalg::random_probs(nx, rng);
            let mut m = CMat::zeros(4 * nx, 4 * nx);
            for (x, &px) in p.iter().enumerate() {
                m += linalg::kron(&(random_state(rng, &[2, 2]) * c(px)), &linalg::projector(nx, x));
            }
            let dims = [2, 2, nx];
            let full = imax(&m, &dims, &Partition::new(vec![0], vec![1, 2]))?;
            let part = imax(&m, &dims, &Partition::new(vec![0], vec![1]))?;
            Ok(Trial::new(part + (nx as f64).log2() - full, json!({ "rho_abx": state_json(&m, &dims) })))
        }),
        run_invariant("max_information_quasiconvex", 7, n, SOLVER_SLACK, seed, |rng| {
            let k = rng.random_range(2..=3);
            let p = linalg::random_probs(k, rng);
            let parts: Vec<CMat> = (0..k).map(|_| random_state(rng, &[2, 2])).collect();
            let mix = parts.iter().zip(&p).fold(CMat::zeros(4, 4), |acc, (r, &w)| acc + r * c(w));
            let mut best = f64::NEG_INFINITY;
            for r in &parts {
                best = best.max(imax(r, &[2, 2], &ab)?);
            }
            let input =
                json!({ "weights": p, "parts": parts.iter().map(|r| state_json(r, &[2, 2])).collect::<Vec<_>>() });
            Ok(Trial::new(best + (k as f64).log2() - imax(&mix, &[2, 2], &ab)?, input))
        }),
        run_invariant("rank_entropy_quasiconvex", 8, n, EXACT_SLACK, seed, |rng| {
            let k = rng.random_range(2..=3);
            let p = linalg::random_probs(k, rng);
            let parts: Vec<CMat> = (0..k).map(|_| linalg::random_density(4, rng.random_range(1..=2), rng)).collect();
            let mix = parts.iter().zip(&p).fold(CMat::zeros(4, 4), |acc, (r, &w)| acc + r * c(w));
            let mut best = f64::NEG_INFINITY;
            for r in &parts {
                best = best.max(h0(&density(r.clone(), vec![4])?));
            }
            let input = json!({ "weights": p, "parts": parts.iter().map(|r| state_json(r, &[4])).collect::<Vec<_>>() });
            Ok(Trial::new(best + (k as f64).log2() - h0(&density(mix, vec![4])?), input))
        }),
        run_invariant("purified_distance_trace_bounds", 9, n, EXACT_SLACK, seed, |rng| {
            let d = rng.random_range(2..=3);
            let (r, s) = (subnormalized(rng, d), subnormalized(rng, d));
            let p = purified_distance_matrices(&r, &s)?;
            let tn = linalg::trace_norm(&(&r - &s));
            let upper = (tn + (linalg::real_trace(&r) - linalg::real_trace(&s)).abs()).sqrt();
            let input = json!({ "rho": state_json(&r, &[d]), "sigma": state_json(&s, &[d]) });
            Ok(Trial::new((p - 0.5 * tn).min(upper - p), input))
        }),
        run_invariant("purified_distance_mixtures", 10, n, EXACT_SLACK, seed, |rng| {
            let d = rng.random_range(2..=3);
            let k = rng.random_range(2..=3);
            let p = linalg::random_probs(k, rng);
            let rs: Vec<CMat> = (0..k).map(|_| subnormalized(rng, d)).collect();
            let ss: Vec<CMat> = (0..k).map(|_| subnormalized(rng, d)).collect();
            let mut worst: f64 = 0.0;
            for (r, s) in rs.iter().zip(&ss) {
                worst = worst.max(purified_distance_matrices(r, s)?);
            }
            let mix = |xs: &[CMat]| xs.iter().zip(&p).fold(CMat::zeros(d, d), |acc, (x, &w)| acc + x * c(w));
            let joint = purified_distance_matrices(&mix(&rs), &mix(&ss))?;
            let input = json!({
                "weights": p,
                "rho": rs.iter().map(|r| state_json(r, &[d])).collect::<Vec<_>>(),
                "sigma": ss.iter().map(|s| state_json(s, &[d])).collect::<Vec<_>>(),
            });
            Ok(Trial::new(worst - joint, input))
        }),
        run_invariant("gentle_measurement", 11, n, EXACT_SLACK, seed, |rng| {
            let d = rng.random_range(2..=3);
            let r = random_state(rng, &[d]);
            let p = random_contraction(rng, d);
            let cut = &p * &r * &p;
            let t = (&p * &p * &r).trace().re;
            let bound = (1.0 - t * t).max(0.0).sqrt();
            let input = json!({ "rho": state_json(&r, &[d]), "pi": matrix_to_json(&p) });
            Ok(Trial::new(bound - purified_distance_matrices(&r, &cut)?, input))
        }),
    ]
}

/// `(eps, eps')` used for both sides of the sandwich.
pub const SANDWICH_EPS: (f64, f64) = (0.1, 0.1);

pub fn protocols_sandwich(cfg: &SuiteConfig) -> Vec<InvariantReport> {
    let seed = cfg.seed;
    let (eps, eps2) = SANDWICH_EPS;
    vec![
        run_invariant("sandwich", 0, cfg.trials(50), EXACT_SLACK, seed, |rng| {
            let s = ClassicallyCoherentState::random(4, 1, 2, rng);
            let run_seed: u64 = rng.random();
            let t = run_binned_splitting(&s, eps, eps2, run_seed)?;
            let b = converse_bound(&s, eps, eps2)?;
            let input = json!({ "state": crate::io::CoherentStateFile::from_state(&s), "seed": run_seed, "eps": eps, "eps_prime": eps2 });
            Ok(Trial::new(t.qubits_or_bits_sent as f64 - b.value, input))
        }),
        run_invariant("binned_error", 1, cfg.trials(50), EXACT_SLACK, seed, |rng| {
            let s = ClassicallyCoherentState::random(4, 1, 2, rng);
            let run_seed: u64 = rng.random();
            let t = run_binned_splitting(&s, eps, eps2, run_seed)?;
            let input = json!({ "state": crate::io::CoherentStateFile::from_state(&s), "seed": run_seed });
            Ok(Trial::new(t.error_bound - t.achieved_error, input))
        }),
        run_invariant("merging", 2, cfg.trials(20), EXACT_SLACK, seed, |rng| {
            let s = ClassicallyCoherentState::random(8, 1, 2, rng);
            let run_seed: u64 = rng.random();
            let t = run_merging(&s, 0.25, run_seed)?;
            let (q, e) = merging_costs(t.h0, t.h_min, 0.25);
            let costs_match = t.qubits_or_bits_sent == q && t.randomness_or_entanglement_used == e;
            let margin = if costs_match { 0.25 - t.achieved_error } else { -1.0 };
            let input = json!({ "state": crate::io::CoherentStateFile::from_state(&s), "seed": run_seed, "eps": 0.25 });
            Ok(Trial::new(margin, input))
        }),
        run_invariant("extractor", 3, cfg.trials(20), EXACT_SLACK, seed, |rng| {
            let s = ClassicallyCoherentState::random(4, 1, 2, rng);
            let r = extractor_deviation(&s.x_ref_state(), 2, ExtractorMode::Exact)?;
            let input = json!({ "state": crate::io::CoherentStateFile::from_state(&s), "x1": 2 });
            Ok(Trial::new(r.bound - r.average, input))
        }),
    ]
}

/// Configuration of the typicality suite.
pub const TYPICALITY_PROBS: [f64; 2] = [0.3, 0.7];
pub const TYPICALITY_N: usize = 1000;
pub const TYPICALITY_DELTA: f64 = 0.05;
pub const TYPICALITY_EPS: f64 = 0.01;
pub const PROJECTOR_N: usize = 10;

fn typicality_suite(cfg: &SuiteConfig) -> Result<Vec<InvariantReport>> {
    let spec = TypicalSpec::new(TYPICALITY_PROBS.to_vec(), TYPICALITY_N, TYPICALITY_DELTA)?;
    let report = verify_typicality_properties(&spec, TYPICALITY_EPS)?;
    let mut out = Vec::new();
    for (i, p) in report.properties.iter().enumerate() {
        let input = json!({ "probs": TYPICALITY_PROBS, "n": TYPICALITY_N, "delta": TYPICALITY_DELTA, "eps": TYPICALITY_EPS, "c": report.c });
        let margin = if p.holds { 0.0 } else { -1.0 };
        out.push(run_invariant(&p.name, i as u64, 1, 0.0, cfg.seed, |_| Ok(Trial::new(margin, input.clone()))));
    }
    out.push(run_invariant("projector_sandwich", 6, cfg.trials(5), 0.0, cfg.seed, |rng| {
        let u = linalg::random_unitary(2, rng);
        let rho = &u * linalg::diag_real(&TYPICALITY_PROBS) * u.adjoint();
        let state = density(rho.clone(), vec![2])?;
        let spec = TypicalSpec::for_state(&state, PROJECTOR_N, TYPICALITY_DELTA)?;
        let r = verify_typicality_properties(&spec, 0.5)?;
        let check = r.projector.ok_or_else(|| Error::Invariant("projector check skipped".into()))?;
        let margin = if check.holds { 0.0 } else { -1.0 };
        Ok(Trial::new(
            margin,
            json!({ "rho": state_json(&rho, &[2]), "n": PROJECTOR_N, "delta": TYPICALITY_DELTA, "check": check }),
        ))
    }));
    out.push(run_invariant("prune_average", 7, cfg.trials(10), 0.0, cfg.seed, |rng| {
        let p = linalg::random_probs(2, rng);
        let states: Vec<CMat> = (0..2).map(|_| random_state(rng, &[2])).collect();
        let ops = states.iter().map(|m| density(m.clone(), vec![2])).collect::<Result<Vec<_>>>()?;
        let r = prune_average_check(&p, &ops, 5, 0.25)?;
        let input = json!({ "probs": p, "states": states.iter().map(|m| state_json(m, &[2])).collect::<Vec<_>>(), "n": 5, "delta": 0.25 });
        Ok(Trial::new(r.min_eigenvalue + 1e-10, input))
    }));
    Ok(out)
}

pub fn uncertainty_sweep(cfg: &SuiteConfig) -> InvariantReport {
    run_invariant("min_max_uncertainty", 0, cfg.trials(1000), 0.0, cfg.seed, |rng| {
        let v = linalg::random_unit_vector(8, rng);
        let psi = PureState::new(v.clone(), vec![2, 2, 2])?;
        let r = verify_uncertainty_relation(&psi, &linalg::identity(2))?;
        let input = json!({ "psi": crate::io::vector_to_json(&v), "dims": [2, 2, 2] });
        Ok(Trial::new(r.bound + crate::entropies::uncertainty::UNCERTAINTY_TOL - r.lhs, input))
    })
}

fn povm_json(m: &Measurement) -> Value {
    serde_json::to_value(crate::io::MeasurementFile::from_measurement(m)).expect("serializable")
}

fn rates_suite(cfg: &SuiteConfig) -> Vec<InvariantReport> {
    let seed = cfg.seed;
    let mut out = vec![
        run_invariant("info_gain_nonnegative", 0, cfg.trials(200), EXACT_SLACK, seed, |rng| {
            let d = rng.random_range(2..=3);
            let k = rng.random_range(1..=4);
            let m = Measurement::random_povm(d, k, rng.random_range(1..=d), rng);
            let rho = random_state(rng, &[d]);
            let v = info_gain_state(&m, &density(rho.clone(), vec![d])?)?;
            Ok(Trial::new(v, json!({ "measurement": povm_json(&m), "rho": state_json(&rho, &[d]) })))
        }),
        run_invariant("groenewold_agreement", 1, cfg.trials(100), 1e-8, seed, |rng| {
            let m = Measurement::random_efficient(2, rng.random_range(2..=4), rng);
            let rho = random_state(rng, &[2]);
            let state = density(rho.clone(), vec![2])?;
            let diff = (groenewold(&m, &state)?.value - info_gain_state(&m, &state)?).abs();
            Ok(Trial::new(-diff, json!({ "measurement": povm_json(&m), "rho": state_json(&rho, &[2]) })))
        }),
        run_invariant("data_processing", 2, cfg.trials(100), EXACT_SLACK, seed, |rng| {
            let d = rng.random_range(2..=3);
            let w = rng.random_range(2..=5);
            let k = rng.random_range(2..=3);
            let inner = Measurement::random_povm_elements(d, w, 1, rng);
            let post: Vec<Vec<f64>> = (0..w).map(|_| linalg::random_probs(k, rng)).collect();
            let elements: Vec<CMat> = (0..k)
                .map(|x| inner.iter().zip(&post).fold(CMat::zeros(d, d), |acc, (n, q)| acc + n * c(q[x])))
                .collect();
            let m = Measurement::from_povm(&elements)?;
            let dec = Decomposition { inner: inner.clone(), post: post.clone(), label: "random".into() };
            let check = validate_decomposition(&dec, &m)?;
            let rho = random_state(rng, &[d]);
            let state = density(rho.clone(), vec![d])?;
            let iw = info_gain_state(&dec.inner_measurement()?, &state)?;
            let ix = info_gain_state(&m, &state)?;
            let margin = if check.valid { iw - ix } else { -check.max_violation() - 1.0 };
            let input = json!({
                "inner": inner.iter().map(matrix_to_json).collect::<Vec<_>>(),
                "post": post,
                "rho": state_json(&rho, &[d]),
            });
            Ok(Trial::new(margin, input))
        }),
        run_invariant("info_gain_bounds", 3, cfg.trials(6), 1e-6, seed, |rng| {
            let d = rng.random_range(2..=3);
            let k = rng.random_range(2..=4);
            let m = Measurement::random_povm(d, k, rng.random_range(1..=d), rng);
            let opt = OptimizerConfig::with_seed(3, rng.random());
            let gain = info_gain(&m, &opt).value;
            let h = max_outcome_entropy(&m, &opt).value;
            let bound = (k as f64).log2().min(h);
            Ok(Trial::new(bound - gain, json!({ "measurement": povm_json(&m), "optimizer_seed": opt.seed })))
        }),
        run_invariant("region_order", 4, cfg.trials(3), 1e-6, seed, |rng| {
            let m = Measurement::random_povm(2, 3, 1, rng);
            let opt = OptimizerConfig::with_seed(3, rng.random());
            let fb = feedback_region(&m, &opt);
            let nf = nonfeedback_region(&m, crate::rates::default_w_cap(&m), true, &opt)?;
            let mut margin = f64::INFINITY;
            for pair in fb.curve.windows(2) {
                margin = margin.min(pair[0].c - pair[1].c);
            }
            for p in &fb.curve {
                margin = margin.min(p.c - nf.rate_at(p.s));
            }
            Ok(Trial::new(margin, json!({ "measurement": povm_json(&m), "optimizer_seed": opt.seed })))
        }),
    ];
    let mut concavity = run_invariant("concavity_probe", 5, cfg.trials(100), 1e-8, seed, |rng| {
        let d = rng.random_range(2..=3);
        let m = Measurement::random_povm(d, rng.random_range(2..=4), rng.random_range(1..=d), rng);
        let r1 = random_state(rng, &[d]);
        let r2 = random_state(rng, &[d]);
        let lam: f64 = rng.random();
        let mix = &r1 * c(lam) + &r2 * c(1.0 - lam);
        let v = |r: &CMat| -> Result<f64> { info_gain_state(&m, &density(r.clone(), vec![d])?) };
        let margin = v(&mix)? - (lam * v(&r1)? + (1.0 - lam) * v(&r2)?);
        let input = json!({ "measurement": povm_json(&m), "rho1": state_json(&r1, &[d]), "rho2": state_json(&r2, &[d]), "lambda": lam });
        Ok(Trial::new(margin, input))
    });
    concavity.advisory = true;
    out.push(concavity);
    out
}

/// Parses a suite name, rejecting the empty string.
pub fn parse_suite(name: &str) -> Result<Suite> {
    if name.trim().is_empty() {
        return arg_err("suite name is empty");
    }
    name.parse()
}

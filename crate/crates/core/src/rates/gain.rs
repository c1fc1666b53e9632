//! Entropy reduction, `I(X:R)` of a measured purification and its maximum
//! over input states.

use rayon::prelude::*;
use serde::Serialize;

use crate::entropies::vn::{entropy_of_matrix, shannon};
use crate::linalg::{self, c, CMat};
use crate::qcore::{DensityOperator, Measurement};
use crate::rng::task_rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct GroenewoldReport {
    /// `H(rho) - sum_x p_x H(rho_x)` in bits.
    pub value: f64,
    pub efficient: bool,
    /// Outcomes with zero probability, which contribute nothing.
    pub zero_outcomes: Vec<usize>,
}

/// Entropy reduction `H(rho) - sum_x p_x H(rho_x)` of the post-measurement
/// ensemble of an instrument.
pub fn groenewold(m: &Measurement, rho: &DensityOperator) -> Result<GroenewoldReport> {
    check_dim(m, rho)?;
    let mut value = entropy_of_matrix(rho.matrix());
    let mut zero_outcomes = Vec::new();
    for (x, post) in m.post_measurement(rho.matrix()).iter().enumerate() {
        let p = linalg::real_trace(post);
        if p <= linalg::SUPPORT_CUTOFF {
            zero_outcomes.push(x);
            continue;
        }
        // p H(post / p) = H(post) + p log p
        value -= entropy_of_matrix(post) + p * p.log2();
    }
    Ok(GroenewoldReport { value, efficient: m.is_efficient(), zero_outcomes })
}

fn check_dim(m: &Measurement, rho: &DensityOperator) -> Result<()> {
    if m.input_dim() != rho.dim() {
        return Err(Error::DimensionMismatch { expected: m.input_dim(), got: rho.dim() });
    }
    Ok(())
}

/// Square roots of POVM elements, the only data `I(X:R)` depends on.
#[derive(Debug, Clone)]
pub struct PovmRoots {
    pub roots: Vec<CMat>,
    pub elements: Vec<CMat>,
}

impl PovmRoots {
    pub fn new(elements: Vec<CMat>) -> Self {
        let roots = elements.iter().map(linalg::sqrt_psd).collect();
        Self { roots, elements }
    }

    pub fn from_measurement(m: &Measurement) -> Self {
        Self::new(m.povm())
    }

    pub fn dim(&self) -> usize {
        self.elements.first().map_or(0, |e| e.nrows())
    }

    pub fn probabilities(&self, rho: &CMat) -> Vec<f64> {
        self.elements.iter().map(|e| (e * rho).trace().re.max(0.0)).collect()
    }

    /// `sum_x H(sqrt(L_x) rho sqrt(L_x))`: the unnormalized conditional
    /// reference entropies.
    pub fn conditional_entropy_sum(&self, rho: &CMat) -> f64 {
        self.roots.iter().map(|r| entropy_of_matrix(&(r * rho * r))).sum()
    }

    /// `I(X:R) = H(rho) + H(p) - sum_x H(sqrt(L_x) rho sqrt(L_x))`.
    pub fn mutual_information(&self, rho: &CMat) -> f64 {
        entropy_of_matrix(rho) + shannon(&self.probabilities(rho)) - self.conditional_entropy_sum(rho)
    }

    pub fn outcome_entropy(&self, rho: &CMat) -> f64 {
        shannon(&self.probabilities(rho))
    }
}

/// `I(X:R)` of `(M (x) id)(rho_AR)` for a purification `rho_AR` of `rho_A`.
pub fn info_gain_state(m: &Measurement, rho: &DensityOperator) -> Result<f64> {
    check_dim(m, rho)?;
    Ok(PovmRoots::from_measurement(m).mutual_information(rho.matrix()).max(0.0))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub seed: u64,
    pub max_sweeps: usize,
    /// Stop once a full sweep improves the objective by less than this.
    pub tol: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { restarts: 10, seed: crate::rng::DEFAULT_SEED, max_sweeps: 400, tol: 1e-13 }
    }
}

impl OptimizerConfig {
    pub fn with_seed(restarts: usize, seed: u64) -> Self {
        Self { restarts: restarts.max(1), seed, ..Self::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Maximum {
    pub value: f64,
    #[serde(skip)]
    pub state: DensityOperator,
    /// Every restart met the sweep tolerance before the sweep cap.
    pub converged: bool,
    pub restart_values: Vec<f64>,
}

fn state_of(g: &CMat) -> CMat {
    let m = g * g.adjoint();
    let t = linalg::real_trace(&m);
    linalg::hermitian_part(&(m / c(t)))
}

const GOLDEN: f64 = 0.618_033_988_749_895;

/// Golden-section search for the maximum of `f` on `[a, b]`.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = f(x1);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Maximizes `f(rho)` over density operators on `d` dimensions with
/// `rho = G G^dagger / tr(G G^dagger)`, cycling golden-section line searches
/// over the real and imaginary parts of each entry of `G`. Restart 0 starts at
/// the maximally mixed state, the others at Ginibre matrices.
pub fn maximize_over_states<F>(d: usize, f: F, cfg: &OptimizerConfig) -> Maximum
where
    F: Fn(&CMat) -> f64 + Sync,
{
    let runs: Vec<(f64, CMat, bool)> = (0..cfg.restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut g = if r == 0 {
                linalg::identity(d)
            } else {
                linalg::random_ginibre(d, d, &mut task_rng(cfg.seed, r as u64))
            };
            let mut best = f(&state_of(&g));
            let mut steps = vec![0.3; 2 * d * d];
            let mut converged = false;
            for _ in 0..cfg.max_sweeps {
                let start = best;
                for (k, step) in steps.iter_mut().enumerate() {
                    let (i, j, imag) = ((k / 2) / d, (k / 2) % d, k % 2 == 1);
                    let dir = if imag { linalg::C64::new(0.0, 1.0) } else { c(1.0) };
                    let eval = |t: f64| {
                        let mut h = g.clone();
                        h[(i, j)] += dir * t;
                        f(&state_of(&h))
                    };
                    let (t, v) = golden_max(eval, -*step, *step, 40);
                    if v > best {
                        g[(i, j)] += dir * t;
                        best = v;
                        *step = if t.abs() > 0.8 * *step { *step * 2.0 } else { (2.0 * t.abs()).max(1e-6) };
                    } else {
                        *step = (*step * 0.5).max(1e-6);
                    }
                }
                let n = g.norm();
                g /= c(n);
                if best - start < cfg.tol {
                    converged = true;
                    break;
                }
            }
            (best, state_of(&g), converged)
        })
        .collect();
    let converged = runs.iter().all(|r| r.2);
    let restart_values = runs.iter().map(|r| r.0).collect();
    let (value, state, _) = runs.into_iter().max_by(|a, b| a.0.total_cmp(&b.0)).expect("at least one restart");
    Maximum {
        value,
        state: DensityOperator::new(state, vec![d]).expect("optimizer state is a density operator"),
        converged,
        restart_values,
    }
}

/// `I(M) = max_rho I(X:R)`.
pub fn info_gain(m: &Measurement, cfg: &OptimizerConfig) -> Maximum {
    let roots = PovmRoots::from_measurement(m);
    let mut best = maximize_over_states(m.input_dim(), |rho| roots.mutual_information(rho), cfg);
    best.value = best.value.max(0.0);
    best
}

/// `max_rho H(X)` of the outcome distribution.
pub fn max_outcome_entropy(m: &Measurement, cfg: &OptimizerConfig) -> Maximum {
    let roots = PovmRoots::from_measurement(m);
    maximize_over_states(m.input_dim(), |rho| roots.outcome_entropy(rho), cfg)
}

/// Entropy-reduction witness for an inefficient instrument: one outcome whose
/// two Kraus operators `I/sqrt 2` and `X/sqrt 2` randomize a pure input.
/// Returns the instrument and the input `|0><0|`.
pub fn negative_groenewold_example() -> (Measurement, DensityOperator) {
    let s = c(std::f64::consts::FRAC_1_SQRT_2);
    let id = linalg::identity(2) * s;
    let mut x = CMat::zeros(2, 2);
    x[(0, 1)] = s;
    x[(1, 0)] = s;
    let m = Measurement::new(vec!["0".into()], vec![vec![id, x]]).expect("valid instrument");
    (m, DensityOperator::basis_state(2, 0))
}

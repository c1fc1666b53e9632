//! Permutation-based randomness extraction against quantum side information.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::entropies::{h_min_cond, Partition};
use crate::linalg::{self, c, CMat};
use crate::qcore::DensityOperator;
use crate::rng::task_rng;
use crate::{arg_err, Error, Result};

/// Largest `|X|` for which the exact average over all `|X|!` permutations is allowed.
pub const EXACT_MAX_OUTCOMES: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtractorMode {
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtractorReport {
    /// Permutation-averaged `|| sigma_{X1 R} - 1/|X1| (x) rho_R ||_1`.
    pub average: f64,
    /// Standard error of the mean (Monte Carlo only).
    pub std_error: Option<f64>,
    pub samples: usize,
    /// `sqrt(|X1| 2^{-H_min(X|R)})`.
    pub bound: f64,
    pub h_min: f64,
    pub within_bound: bool,
}

/// The blocks `p_x rho_R^x` of a state classical on its first subsystem.
pub(crate) fn cq_blocks(rho_xr: &DensityOperator) -> Result<Vec<CMat>> {
    if rho_xr.dims().len() != 2 {
        return arg_err("expected a state on X (x) R");
    }
    let (n, r) = (rho_xr.dims()[0], rho_xr.dims()[1]);
    let m = rho_xr.matrix();
    for i in 0..n * r {
        for j in 0..n * r {
            if i / r != j / r && m[(i, j)].norm() > 1e-10 {
                return arg_err("state is not classical on X");
            }
        }
    }
    Ok((0..n).map(|x| m.view((x * r, x * r), (r, r)).into_owned()).collect())
}

/// `sum_{x1} || sum_{x: pi(x) / n2 = x1} p_x rho^x - rho_R / n1 ||_1`, where
/// `pi[x]` is the position of `x` inside `X1 (x) X2` and padding entries
/// (`x >= blocks.len()`) carry no weight.
pub fn permutation_deviation(blocks: &[CMat], rho_r: &CMat, pi: &[usize], n1: usize, n2: usize) -> f64 {
    let r = rho_r.nrows();
    let mut groups = vec![CMat::zeros(r, r); n1];
    for (x, b) in blocks.iter().enumerate() {
        groups[pi[x] / n2] += b;
    }
    let target = rho_r / c(n1 as f64);
    groups.iter().map(|g| linalg::trace_norm(&(g - &target))).sum()
}

/// Calls `f` on every permutation of `0..n` (Heap's algorithm).
fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize])) {
    let mut a: Vec<usize> = (0..n).collect();
    let mut cnt = vec![0usize; n];
    f(&a);
    let mut i = 0;
    while i < n {
        if cnt[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(cnt[i], i);
            }
            f(&a);
            cnt[i] += 1;
            i = 0;
        } else {
            cnt[i] = 0;
            i += 1;
        }
    }
}

/// Average extractor deviation over permutations of `X = X1 X2` with `|X1| = n1`.
pub fn extractor_deviation(rho_xr: &DensityOperator, n1: usize, mode: ExtractorMode) -> Result<ExtractorReport> {
    let blocks = cq_blocks(rho_xr)?;
    let n = blocks.len();
    if n1 == 0 || n % n1 != 0 {
        return arg_err(format!("|X1| = {n1} does not divide |X| = {n}"));
    }
    let n2 = n / n1;
    let rho_r = blocks.iter().fold(CMat::zeros(rho_xr.dims()[1], rho_xr.dims()[1]), |acc, b| acc + b);
    let h_min = h_min_cond(rho_xr, &Partition::first_second())?.value;
    let bound = (n1 as f64 * 2f64.powf(-h_min)).sqrt();
    let (average, std_error, samples) = match mode {
        ExtractorMode::Exact => {
            if n > EXACT_MAX_OUTCOMES {
                return arg_err(format!(
                    "exact averaging over {n}! permutations is refused for |X| > {EXACT_MAX_OUTCOMES}; use monte_carlo"
                ));
            }
            let (mut sum, mut count) = (0.0, 0usize);
            for_each_permutation(n, |pi| {
                sum += permutation_deviation(&blocks, &rho_r, pi, n1, n2);
                count += 1;
            });
            (sum / count as f64, None, count)
        }
        ExtractorMode::MonteCarlo { samples, seed } => {
            if samples < 2 {
                return arg_err("monte_carlo needs at least two samples");
            }
            let vals: Vec<f64> = (0..samples)
                .into_par_iter()
                .map(|i| {
                    let mut rng = task_rng(seed, i as u64);
                    let mut pi: Vec<usize> = (0..n).collect();
                    pi.shuffle(&mut rng);
                    permutation_deviation(&blocks, &rho_r, &pi, n1, n2)
                })
                .collect();
            let mean = vals.iter().sum::<f64>() / samples as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
            (mean, Some((var / samples as f64).sqrt()), samples)
        }
    };
    let within_bound = average <= bound + 1e-9;
    if mode == ExtractorMode::Exact && !within_bound {
        return Err(Error::Invariant(format!("extractor average {average} exceeds bound {bound}")));
    }
    Ok(ExtractorReport { average, std_error, samples, bound, h_min, within_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::ClassicallyCoherentState;

    #[test]
    fn heap_enumerates_all() {
        let mut seen = std::collections::HashSet::new();
        for_each_permutation(4, |p| {
            seen.insert(p.to_vec());
        });
        assert_eq!(seen.len(), 24);
    }

    #[test]
    fn uniform_trivial_reference() {
        let rho = DensityOperator::new(linalg::identity(4) / c(4.0), vec![4, 1]).unwrap();
        let r = extractor_deviation(&rho, 4, ExtractorMode::Exact).unwrap();
        assert!(r.average.abs() < 1e-12);
    }

    #[test]
    fn correlated_within_bound() {
        let s = ClassicallyCoherentState::correlated(vec![0.25; 4]).unwrap();
        let r = extractor_deviation(&s.x_ref_state(), 2, ExtractorMode::Exact).unwrap();
        assert!(r.within_bound);
        assert!(extractor_deviation(&s.x_ref_state(), 3, ExtractorMode::Exact).is_err());
    }
}

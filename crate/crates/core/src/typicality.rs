//! Strongly typical sets and (conditionally) typical projectors.
//!
//! A sequence `x^n` is typical when every letter's empirical frequency is
//! within `delta` of its probability. Letters of probability zero never occur
//! in a typical sequence, so a pure state has a rank-one typical projector.
//!
//! Quantum quantities are computed from the spectrum. Equal eigenvalues are
//! merged into one letter before typicality is tested, which makes the typical
//! projector a function of `rho^{(x)n}` rather than of a chosen eigenbasis.

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::factorial::ln_factorial;

use crate::linalg::{self, c, CMat, CVec};
use crate::qcore::DensityOperator;
use crate::{arg_err, Error, Result};

/// Largest number of sequences `typical_set` will enumerate.
pub const MAX_ENUMERATION: f64 = 1e6;
/// Largest Hilbert-space dimension `d^n` for which projectors are built.
pub const MAX_PROJECTOR_DIM: usize = 4096;
/// Largest number of candidate type classes visited in a type sum.
pub const MAX_TYPE_CLASSES: f64 = 1e7;
/// Absolute slack in the frequency comparison, absorbing rounding of `n p`.
pub const FREQUENCY_SLACK: f64 = 1e-12;
/// Eigenvalues closer than this are treated as one letter.
pub const DEGENERACY_TOL: f64 = 1e-9;
/// Projector matrix checks in the report run up to this dimension.
pub const MATRIX_CHECK_DIM: usize = 1024;

#[derive(Debug, Clone)]
pub struct TypicalSpec {
    pub probs: Vec<f64>,
    pub n: usize,
    pub delta: f64,
    /// Exponent constant; `None` selects the tightest value per instance.
    pub c: Option<f64>,
    /// Source state when the spec was built from a density operator.
    pub state: Option<DensityOperator>,
}

fn letter_typical(count: usize, n: usize, p: f64, delta: f64) -> bool {
    if p <= 0.0 {
        return count == 0;
    }
    (count as f64 / n as f64 - p).abs() <= delta + FREQUENCY_SLACK
}

fn counts_typical(counts: &[usize], n: usize, probs: &[f64], delta: f64) -> bool {
    counts.iter().zip(probs).all(|(&k, &p)| letter_typical(k, n, p, delta))
}

impl TypicalSpec {
    pub fn new(probs: Vec<f64>, n: usize, delta: f64) -> Result<Self> {
        if n == 0 {
            return arg_err("block length n must be at least 1");
        }
        if !(delta > 0.0) {
            return arg_err(format!("delta must be positive (got {delta})"));
        }
        if probs.is_empty() || probs.iter().any(|p| !(*p >= 0.0)) {
            return arg_err("probabilities must be nonnegative and nonempty");
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return arg_err(format!("probabilities sum to {total}, not 1"));
        }
        Ok(Self { probs, n, delta, c: None, state: None })
    }

    /// Spec over the spectrum of `rho`; quantum checks use `rho` itself.
    pub fn for_state(rho: &DensityOperator, n: usize, delta: f64) -> Result<Self> {
        let mut probs: Vec<f64> =
            rho.eigenvalues().into_iter().map(|v| if v > linalg::SUPPORT_CUTOFF { v } else { 0.0 }).collect();
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        let mut spec = Self::new(probs, n, delta)?;
        spec.state = Some(rho.clone());
        Ok(spec)
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = Some(c);
        self
    }

    pub fn alphabet(&self) -> usize {
        self.probs.len()
    }

    pub fn entropy(&self) -> f64 {
        self.probs.iter().map(|&p| linalg::eta(p)).sum()
    }

    pub fn counts_typical(&self, counts: &[usize]) -> bool {
        counts.len() == self.alphabet()
            && counts.iter().sum::<usize>() == self.n
            && counts_typical(counts, self.n, &self.probs, self.delta)
    }

    pub fn counts(&self, seq: &[usize]) -> Result<Vec<usize>> {
        let mut counts = vec![0; self.alphabet()];
        for &x in seq {
            if x >= self.alphabet() {
                return arg_err(format!("letter {x} outside alphabet of size {}", self.alphabet()));
            }
            counts[x] += 1;
        }
        Ok(counts)
    }

    pub fn is_typical(&self, seq: &[usize]) -> Result<bool> {
        if seq.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: seq.len() });
        }
        Ok(self.counts_typical(&self.counts(seq)?))
    }

    /// `|X|^n`.
    pub fn sequence_count(&self) -> f64 {
        (self.alphabet() as f64).powi(self.n as i32)
    }

    /// All typical sequences in lexicographic order.
    pub fn typical_set(&self) -> Result<Vec<Vec<usize>>> {
        let total = self.sequence_count();
        if total > MAX_ENUMERATION {
            return arg_err(format!(
                "enumeration refused: {total:.3e} sequences exceeds the limit of {MAX_ENUMERATION:.0e}"
            ));
        }
        let dims = vec![self.alphabet(); self.n];
        Ok((0..total as usize)
            .into_par_iter()
            .filter_map(|i| {
                let seq = linalg::digits(i, &dims);
                let counts = self.counts(&seq).expect("digits lie in the alphabet");
                self.counts_typical(&counts).then_some(seq)
            })
            .collect())
    }

    /// Probability of `x^n` under the i.i.d. law, as `log2`.
    pub fn log2_sequence_probability(&self, seq: &[usize]) -> Result<f64> {
        let counts = self.counts(seq)?;
        Ok(counts.iter().zip(&self.probs).filter(|(&k, _)| k > 0).map(|(&k, &p)| k as f64 * p.log2()).sum())
    }

    /// `Pr{X^n in T}` by summing multinomial type-class probabilities.
    pub fn probability(&self) -> Result<f64> {
        Ok(TypeSum::classical(self).summarize()?.probability)
    }
}

/// Per-letter data of a sum over type classes: typicality is tested against
/// `center`, each sequence of a type has weight `prod weight^N` in the count and
/// value `prod value^N`.
struct TypeSum {
    center: Vec<f64>,
    weight: Vec<f64>,
    value: Vec<f64>,
    n: usize,
    delta: f64,
}

struct TypeSummary {
    /// Sum of `center`-probabilities of typical types.
    probability: f64,
    /// `log2` of the weighted number of typical sequences.
    log2_size: f64,
    /// Extremes of `log2 prod value^N` over typical types.
    log2_value_min: f64,
    log2_value_max: f64,
    types: usize,
}

impl TypeSum {
    fn classical(spec: &TypicalSpec) -> Self {
        let k = spec.alphabet();
        Self {
            center: spec.probs.clone(),
            weight: vec![1.0; k],
            value: spec.probs.clone(),
            n: spec.n,
            delta: spec.delta,
        }
    }

    fn quantum(classes: &SpectrumClasses, n: usize, delta: f64) -> Self {
        Self {
            center: classes.weights(),
            weight: classes.multiplicity.iter().map(|&m| m as f64).collect(),
            value: classes.values.clone(),
            n,
            delta,
        }
    }

    fn typical_types(&self) -> Result<Vec<Vec<usize>>> {
        let mut estimate = 1.0;
        for &p in &self.center[..self.center.len() - 1] {
            estimate *= if p > 0.0 { (2.0 * self.n as f64 * self.delta + 3.0).min(self.n as f64 + 1.0) } else { 1.0 };
        }
        if estimate > MAX_TYPE_CLASSES {
            return arg_err(format!("type-class sum refused: about {estimate:.3e} classes"));
        }
        let mut out = Vec::new();
        let mut counts = vec![0; self.center.len()];
        self.extend(0, self.n, &mut counts, &mut out);
        Ok(out)
    }

    fn extend(&self, j: usize, remaining: usize, counts: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let (n, p, delta) = (self.n, self.center[j], self.delta);
        if j + 1 == self.center.len() {
            if letter_typical(remaining, n, p, delta) {
                counts[j] = remaining;
                out.push(counts.clone());
            }
            return;
        }
        let nf = n as f64;
        let lo = ((nf * (p - delta)).floor() - 1.0).max(0.0) as usize;
        let hi = (((nf * (p + delta)).ceil() + 1.0).max(0.0) as usize).min(remaining);
        for k in lo..=hi {
            if letter_typical(k, n, p, delta) {
                counts[j] = k;
                self.extend(j + 1, remaining - k, counts, out);
            }
        }
    }

    fn summarize(&self) -> Result<TypeSummary> {
        let types = self.typical_types()?;
        let ln_n = ln_factorial(self.n as u64);
        let mut probability = 0.0;
        let mut ln_sizes = Vec::with_capacity(types.len());
        let (mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for t in &types {
            let ln_mult = ln_n - t.iter().map(|&k| ln_factorial(k as u64)).sum::<f64>();
            let mut ln_p = ln_mult;
            let mut ln_size = ln_mult;
            let mut log2_v = 0.0;
            for (j, &k) in t.iter().enumerate() {
                if k > 0 {
                    ln_p += k as f64 * self.center[j].ln();
                    ln_size += k as f64 * self.weight[j].ln();
                    log2_v += k as f64 * self.value[j].log2();
                }
            }
            probability += ln_p.exp();
            ln_sizes.push(ln_size);
            vmin = vmin.min(log2_v);
            vmax = vmax.max(log2_v);
        }
        let log2_size = log_sum_exp(&ln_sizes) / linalg::LN2;
        Ok(TypeSummary { probability, log2_size, log2_value_min: vmin, log2_value_max: vmax, types: types.len() })
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Distinct nonzero eigenvalues of a state with their multiplicities and
/// eigenvectors.
#[derive(Debug, Clone)]
pub struct SpectrumClasses {
    pub values: Vec<f64>,
    pub multiplicity: Vec<usize>,
    /// Eigenvectors as columns, with `class_of[k]` the class of column `k`
    /// (`None` for the kernel).
    pub vectors: CMat,
    pub class_of: Vec<Option<usize>>,
}

impl SpectrumClasses {
    pub fn new(rho: &CMat) -> Self {
        let (vals, vectors) = linalg::eigh(rho);
        let mut values: Vec<f64> = Vec::new();
        let mut multiplicity = Vec::new();
        let mut class_of = Vec::with_capacity(vals.len());
        // eigh returns descending eigenvalues, so equal values are adjacent.
        for &v in &vals {
            if v <= linalg::SUPPORT_CUTOFF {
                class_of.push(None);
                continue;
            }
            match values.last() {
                Some(&last) if (last - v).abs() <= DEGENERACY_TOL => {
                    *multiplicity.last_mut().expect("class exists") += 1;
                }
                _ => {
                    values.push(v);
                    multiplicity.push(1);
                }
            }
            class_of.push(Some(values.len() - 1));
        }
        // Representative value of each class is the mean of its members.
        let mut sums = vec![0.0; values.len()];
        for (&v, cl) in vals.iter().zip(&class_of) {
            if let Some(j) = cl {
                sums[*j] += v;
            }
        }
        for (j, s) in sums.into_iter().enumerate() {
            values[j] = s / multiplicity[j] as f64;
        }
        Self { values, multiplicity, vectors, class_of }
    }

    /// Probability of each class, `m_j lambda_j`, renormalized over the support.
    pub fn weights(&self) -> Vec<f64> {
        let w: Vec<f64> = self.values.iter().zip(&self.multiplicity).map(|(v, &m)| v * m as f64).collect();
        let t: f64 = w.iter().sum();
        w.into_iter().map(|x| x / t).collect()
    }

    pub fn entropy(&self) -> f64 {
        self.values.iter().zip(&self.multiplicity).map(|(&v, &m)| m as f64 * linalg::eta(v)).sum()
    }
}

/// Builds `sum |e_k><e_k|` over basis sequences `k^n` accepted by `keep`, where
/// position `i` uses the eigenbasis `bases[i]`.
fn projector_from_bases(bases: &[&SpectrumClasses], keep: impl Fn(&[Option<usize>]) -> bool + Sync) -> Result<CMat> {
    let dims: Vec<usize> = bases.iter().map(|b| b.class_of.len()).collect();
    let total: f64 = dims.iter().map(|&d| d as f64).product();
    if total > MAX_PROJECTOR_DIM as f64 {
        return arg_err(format!("projector refused: dimension {total:.0} exceeds {MAX_PROJECTOR_DIM}"));
    }
    let total = total as usize;
    let accepted: Vec<bool> = (0..total)
        .into_par_iter()
        .map(|i| {
            let classes: Vec<Option<usize>> =
                linalg::digits(i, &dims).iter().zip(bases).map(|(&k, b)| b.class_of[k]).collect();
            keep(&classes)
        })
        .collect();
    let typical_count = accepted.iter().filter(|&&a| a).count();
    // Build from whichever of the typical and atypical sets is smaller.
    let take_typical = typical_count <= total - typical_count;
    let columns: Vec<CVec> = (0..total)
        .into_par_iter()
        .filter(|&i| accepted[i] == take_typical)
        .map(|i| {
            let mut v = CVec::from_element(1, c(1.0));
            for (&k, b) in linalg::digits(i, &dims).iter().zip(bases) {
                v = linalg::kron_vec(&v, &b.vectors.column(k).into_owned());
            }
            v
        })
        .collect();
    let sum = if columns.is_empty() {
        CMat::zeros(total, total)
    } else {
        let v = CMat::from_columns(&columns);
        linalg::matmul(&v, &v.adjoint())
    };
    Ok(if take_typical { sum } else { linalg::identity(total) - sum })
}

fn class_counts(classes: &[Option<usize>], positions: impl Iterator<Item = usize>, k: usize) -> Option<Vec<usize>> {
    let mut counts = vec![0; k];
    for i in positions {
        counts[classes[i]?] += 1;
    }
    Some(counts)
}

/// Projector onto the span of eigenvectors of `rho^{(x)n}` whose eigenvalue
/// sequences are typical.
pub fn typical_projector(rho: &DensityOperator, n: usize, delta: f64) -> Result<CMat> {
    if n == 0 || !(delta > 0.0) {
        return arg_err("need n >= 1 and delta > 0");
    }
    let classes = SpectrumClasses::new(rho.matrix());
    let w = classes.weights();
    let bases = vec![&classes; n];
    projector_from_bases(&bases, |seq| match class_counts(seq, 0..n, w.len()) {
        Some(counts) => counts_typical(&counts, n, &w, delta),
        None => false,
    })
}

/// Conditionally typical projector for the sequence `seq` with states
/// `states[x]`: the tensor product over letters `x` of the typical projector of
/// `states[x]` on the positions where `seq` equals `x`.
pub fn conditional_typical_projector(states: &[DensityOperator], seq: &[usize], delta: f64) -> Result<CMat> {
    if seq.is_empty() || !(delta > 0.0) {
        return arg_err("need a nonempty sequence and delta > 0");
    }
    if let Some(&x) = seq.iter().find(|&&x| x >= states.len()) {
        return arg_err(format!("letter {x} has no state"));
    }
    let classes: Vec<SpectrumClasses> = states.iter().map(|s| SpectrumClasses::new(s.matrix())).collect();
    let weights: Vec<Vec<f64>> = classes.iter().map(SpectrumClasses::weights).collect();
    let groups: Vec<Vec<usize>> =
        (0..states.len()).map(|x| (0..seq.len()).filter(|&i| seq[i] == x).collect()).collect();
    let bases: Vec<&SpectrumClasses> = seq.iter().map(|&x| &classes[x]).collect();
    projector_from_bases(&bases, |cls| {
        groups.iter().enumerate().all(|(x, pos)| {
            pos.is_empty()
                || match class_counts(cls, pos.iter().copied(), weights[x].len()) {
                    Some(counts) => counts_typical(&counts, pos.len(), &weights[x], delta),
                    None => false,
                }
        })
    })
}

/// `rho^{(x)n}` without per-step validation.
pub fn tensor_power(rho: &CMat, n: usize) -> CMat {
    let mut out = rho.clone();
    for _ in 1..n {
        out = linalg::kron(&out, rho);
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyCheck {
    pub name: String,
    pub holds: bool,
    /// Measured quantity (probability or `log2` size or exponent).
    pub value: f64,
    /// Bound it is compared with.
    pub bound: f64,
}

impl PropertyCheck {
    fn new(name: &str, holds: bool, value: f64, bound: f64) -> Self {
        Self { name: name.into(), holds, value, bound }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectorCheck {
    pub dim: usize,
    pub rank: usize,
    pub idempotence_defect: f64,
    pub hermiticity_defect: f64,
    pub commutator_norm: f64,
    /// `|tr[Pi rho^n] - Pr_typical|` for the spectral distribution.
    pub trace_defect: f64,
    /// Largest entry of `Pi rho^n Pi` off the diagonal of the eigenbasis.
    pub offdiagonal: f64,
    /// Smallest margins of the entrywise sandwich, relative to the bounds.
    pub lower_margin: f64,
    pub upper_margin: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TypicalityReport {
    pub n: usize,
    pub delta: f64,
    pub epsilon_target: f64,
    pub entropy: f64,
    pub quantum_entropy: f64,
    /// Constant in the exponents, either supplied or the tightest value for
    /// which both equipartition statements hold.
    pub c: f64,
    pub c_supplied: bool,
    pub epsilon_classical: f64,
    pub epsilon_quantum: f64,
    pub typical_types: usize,
    pub properties: Vec<PropertyCheck>,
    pub projector: Option<ProjectorCheck>,
    pub all_hold: bool,
}

const LOG_TOL: f64 = 1e-9;

/// Checks the probability, cardinality and equipartition statements for the
/// typical set of `spec.probs` and for the typical projector of the matching
/// state (the spec's state, or `diag(probs)`).
pub fn verify_typicality_properties(spec: &TypicalSpec, epsilon_target: f64) -> Result<TypicalityReport> {
    if !(epsilon_target > 0.0 && epsilon_target < 1.0) {
        return arg_err(format!("epsilon target must lie in (0, 1) (got {epsilon_target})"));
    }
    let (n, delta) = (spec.n, spec.delta);
    let nf = n as f64;
    let h = spec.entropy();
    let classical = TypeSum::classical(spec).summarize()?;

    let rho = match &spec.state {
        Some(s) => s.matrix().clone(),
        None => linalg::diag_real(&spec.probs),
    };
    let classes = SpectrumClasses::new(&rho);
    let hq = classes.entropy();
    let quantum = TypeSum::quantum(&classes, n, delta).summarize()?;

    let tight = |s: &TypeSummary, h: f64| {
        let dev = (-s.log2_value_min / nf - h).max(h + s.log2_value_max / nf);
        (dev / delta).max(0.0)
    };
    let c_supplied = spec.c.is_some();
    let cc = spec.c.unwrap_or_else(|| tight(&classical, h).max(tight(&quantum, hq)));

    let mut properties = Vec::new();
    for (prefix, s, h) in [("classical", &classical, h), ("quantum", &quantum, hq)] {
        let upper = nf * (h + cc * delta);
        let lower = nf * (h - cc * delta);
        properties.push(PropertyCheck::new(
            &format!("{prefix}_probability"),
            s.probability >= 1.0 - epsilon_target,
            s.probability,
            1.0 - epsilon_target,
        ));
        let size_name = if prefix == "classical" { "classical_cardinality" } else { "quantum_rank" };
        properties.push(PropertyCheck::new(size_name, s.log2_size <= upper + LOG_TOL, s.log2_size, upper));
        // Exponent check: -log2 p lies in [lower, upper] for every typical type.
        let worst = (-s.log2_value_min - upper).max(lower + s.log2_value_max);
        let holds = s.types == 0 || worst <= LOG_TOL * nf.max(1.0);
        properties.push(PropertyCheck::new(&format!("{prefix}_equipartition"), holds, worst, 0.0));
    }

    let dim = (rho.nrows() as f64).powi(n as i32);
    let projector = if dim <= MATRIX_CHECK_DIM as f64 {
        Some(projector_check(
            &rho,
            &classes,
            n,
            delta,
            quantum.probability,
            nf * (hq + cc * delta),
            nf * (hq - cc * delta),
        )?)
    } else {
        None
    };
    let all_hold = properties.iter().all(|p| p.holds) && projector.as_ref().is_none_or(|p| p.holds);
    Ok(TypicalityReport {
        n,
        delta,
        epsilon_target,
        entropy: h,
        quantum_entropy: hq,
        c: cc,
        c_supplied,
        epsilon_classical: 1.0 - classical.probability,
        epsilon_quantum: 1.0 - quantum.probability,
        typical_types: classical.types,
        properties,
        projector,
        all_hold,
    })
}

fn projector_check(
    rho: &CMat,
    classes: &SpectrumClasses,
    n: usize,
    delta: f64,
    probability: f64,
    neg_log_lower: f64,
    neg_log_upper: f64,
) -> Result<ProjectorCheck> {
    let state = DensityOperator::from_matrix(rho.clone())?;
    let pi = typical_projector(&state, n, delta)?;
    let rho_n = tensor_power(rho, n);
    let dim = pi.nrows();
    let mul = linalg::matmul;
    let idempotence_defect = linalg::max_abs_entry(&(mul(&pi, &pi) - &pi));
    let hermiticity_defect = linalg::hermiticity_defect(&pi);
    let commutator_norm = linalg::max_abs_entry(&(mul(&pi, &rho_n) - mul(&rho_n, &pi)));
    let tr: f64 = (0..dim).map(|i| (0..dim).map(|j| (pi[(i, j)] * rho_n[(j, i)]).re).sum::<f64>()).sum();
    let trace_defect = (tr - probability).abs();
    let rank = linalg::real_trace(&pi).round() as usize;

    let w = tensor_power(&classes.vectors, n);
    let wd = w.adjoint();
    let sandwich = mul(&mul(&wd, &mul(&mul(&pi, &rho_n), &pi)), &w);
    let pi_diag = mul(&mul(&wd, &pi), &w);
    let lo = (-neg_log_lower).exp2();
    let hi = (-neg_log_upper).exp2();
    let mut offdiagonal: f64 = 0.0;
    let (mut lower_margin, mut upper_margin) = (f64::INFINITY, f64::INFINITY);
    for i in 0..dim {
        for j in 0..dim {
            if i != j {
                offdiagonal = offdiagonal.max(sandwich[(i, j)].norm());
            }
        }
        if pi_diag[(i, i)].re > 0.5 {
            let v = sandwich[(i, i)].re;
            lower_margin = lower_margin.min(v / lo - 1.0);
            upper_margin = upper_margin.min(1.0 - v / hi);
        }
    }
    let tol = 1e-9;
    let holds = idempotence_defect <= tol
        && hermiticity_defect <= tol
        && commutator_norm <= 1e-12_f64.max(tol * linalg::max_abs_entry(&rho_n))
        && trace_defect <= tol
        && offdiagonal <= tol
        && lower_margin >= -tol
        && upper_margin >= -tol;
    Ok(ProjectorCheck {
        dim,
        rank,
        idempotence_defect,
        hermiticity_defect,
        commutator_norm,
        trace_defect,
        offdiagonal,
        lower_margin,
        upper_margin,
        holds,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PruneAverageReport {
    /// `1 - Pr{X^n in T}`.
    pub epsilon: f64,
    /// Smallest eigenvalue of `(1-eps)^{-1} rho^{(x)n} - sum_{x^n} p'(x^n) rho_{x^n}`.
    pub min_eigenvalue: f64,
    /// `min_{x^n in T} tr[rho_{x^n} Pi_rho]`.
    pub min_typical_overlap: f64,
    pub holds: bool,
}

/// Operator inequality for the ensemble `{probs[x], states[x]}` averaged with
/// the distribution pruned to the typical set.
pub fn prune_average_check(
    probs: &[f64],
    states: &[DensityOperator],
    n: usize,
    delta: f64,
) -> Result<PruneAverageReport> {
    if probs.len() != states.len() {
        return Err(Error::DimensionMismatch { expected: probs.len(), got: states.len() });
    }
    let d = states.first().map_or(0, DensityOperator::dim);
    if states.iter().any(|s| s.dim() != d) {
        return arg_err("ensemble states must share a dimension");
    }
    let spec = TypicalSpec::new(probs.to_vec(), n, delta)?;
    let set = spec.typical_set()?;
    let mut rho = CMat::zeros(d, d);
    for (p, s) in probs.iter().zip(states) {
        rho += s.matrix() * c(*p);
    }
    let pi = typical_projector(&DensityOperator::from_matrix(rho.clone())?, n, delta)?;
    let rho_n = tensor_power(&rho, n);
    let mut avg = CMat::zeros(rho_n.nrows(), rho_n.ncols());
    let mut kept = 0.0;
    let mut min_overlap = f64::INFINITY;
    for seq in &set {
        let p = spec.log2_sequence_probability(seq)?.exp2();
        let factors: Vec<CMat> = seq.iter().map(|&x| states[x].matrix().clone()).collect();
        let r = linalg::kron_all(&factors);
        min_overlap = min_overlap.min((&r * &pi).trace().re);
        avg += r * c(p);
        kept += p;
    }
    if kept <= 0.0 {
        return Err(Error::Numerical("typical set has zero probability".into()));
    }
    avg /= c(kept);
    let gap = rho_n / c(kept) - avg;
    let min_eigenvalue = linalg::min_eigenvalue(&gap);
    Ok(PruneAverageReport {
        epsilon: 1.0 - kept,
        min_eigenvalue,
        min_typical_overlap: min_overlap,
        holds: min_eigenvalue >= -1e-10,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;
    use statrs::distribution::{Binomial, Discrete};

    #[test]
    fn uniform_bit_pairs() {
        let spec = TypicalSpec::new(vec![0.5, 0.5], 2, 0.1).unwrap();
        assert_eq!(spec.typical_set().unwrap(), vec![vec![0, 1], vec![1, 0]]);
        let all = TypicalSpec::new(vec![0.2, 0.5, 0.3], 4, 1.0).unwrap();
        assert_eq!(all.typical_set().unwrap().len(), 81);
        assert!(TypicalSpec::new(vec![0.5, 0.5], 30, 0.1).unwrap().typical_set().is_err());
    }

    #[test]
    fn zero_letters_never_typical() {
        let spec = TypicalSpec::new(vec![1.0, 0.0], 5, 1.0).unwrap();
        assert_eq!(spec.typical_set().unwrap(), vec![vec![0; 5]]);
    }

    #[test]
    fn membership_matches_counting() {
        let spec = TypicalSpec::new(vec![0.3, 0.7], 1000, 0.05).unwrap();
        let mut rng = rng_from_seed(3);
        for _ in 0..200 {
            let seq: Vec<usize> = (0..1000).map(|_| usize::from(rng.random::<f64>() >= 0.3)).collect();
            let zeros = seq.iter().filter(|&&x| x == 0).count();
            assert_eq!(spec.is_typical(&seq).unwrap(), (250..=350).contains(&zeros));
        }
    }

    #[test]
    fn probability_matches_binomial() {
        let spec = TypicalSpec::new(vec![0.3, 0.7], 1000, 0.05).unwrap();
        let b = Binomial::new(0.3, 1000).unwrap();
        let oracle: f64 = (250..=350).map(|k| b.pmf(k)).sum();
        assert!((spec.probability().unwrap() - oracle).abs() < 1e-10);
    }

    #[test]
    fn projector_examples() {
        let pure = DensityOperator::new(CMat::from_element(2, 2, c(0.5)), vec![2]).unwrap();
        let pi = typical_projector(&pure, 4, 0.3).unwrap();
        assert!((linalg::real_trace(&pi) - 1.0).abs() < 1e-10);
        let mm = DensityOperator::maximally_mixed(2);
        let pi = typical_projector(&mm, 5, 0.01).unwrap();
        assert!(linalg::approx_eq_mat(&pi, &linalg::identity(32), 1e-12));
        assert!(typical_projector(&mm, 13, 0.1).is_err());
    }

    #[test]
    fn projector_trace_matches_spectrum() {
        let mut rng = rng_from_seed(9);
        let u = linalg::random_unitary(2, &mut rng);
        let rho = &u * linalg::diag_real(&[0.3, 0.7]) * u.adjoint();
        let state = DensityOperator::from_matrix(rho.clone()).unwrap();
        let pi = typical_projector(&state, 10, 0.05).unwrap();
        let tr = (&pi * tensor_power(&rho, 10)).trace().re;
        let b = Binomial::new(0.3, 10).unwrap();
        // 10 * (0.3 +- 0.05) allows exactly three zeros.
        assert!((tr - b.pmf(3)).abs() < 1e-10);
    }

    #[test]
    fn conditional_projector_factorizes() {
        let mut rng = rng_from_seed(4);
        let a = DensityOperator::from_matrix(linalg::random_density(2, 2, &mut rng)).unwrap();
        let b = DensityOperator::from_matrix(linalg::random_density(2, 2, &mut rng)).unwrap();
        let pi = conditional_typical_projector(&[a.clone(), b.clone()], &[0, 0, 1, 1, 1], 0.2).unwrap();
        let expect = linalg::kron(&typical_projector(&a, 2, 0.2).unwrap(), &typical_projector(&b, 3, 0.2).unwrap());
        assert!(linalg::approx_eq_mat(&pi, &expect, 1e-10));
        let r = linalg::kron_all(&[
            a.matrix().clone(),
            a.matrix().clone(),
            b.matrix().clone(),
            b.matrix().clone(),
            b.matrix().clone(),
        ]);
        assert!(linalg::max_abs_entry(&(&pi * &r - &r * &pi)) < 1e-12);
    }

    #[test]
    fn uniform_equipartition_is_exact() {
        let spec = TypicalSpec::new(vec![0.25; 4], 6, 0.2).unwrap();
        let r = verify_typicality_properties(&spec, 0.5).unwrap();
        assert!(r.c < 1e-12);
        for seq in spec.typical_set().unwrap() {
            assert!((spec.log2_sequence_probability(&seq).unwrap() + 12.0).abs() < 1e-12);
        }
    }

    #[test]
    fn report_at_n_10() {
        let spec = TypicalSpec::new(vec![0.3, 0.7], 10, 0.05).unwrap();
        let r = verify_typicality_properties(&spec, 0.9).unwrap();
        assert!(r.all_hold, "{r:?}");
        let p = r.projector.unwrap();
        assert_eq!(p.rank, 120);
    }

    #[test]
    fn prune_average_holds() {
        let mut rng = rng_from_seed(5);
        let states: Vec<DensityOperator> =
            (0..2).map(|_| DensityOperator::from_matrix(linalg::random_density(2, 2, &mut rng)).unwrap()).collect();
        let r = prune_average_check(&[0.4, 0.6], &states, 5, 0.25).unwrap();
        assert!(r.holds, "{r:?}");
        assert!(r.epsilon > 0.0);
    }
}

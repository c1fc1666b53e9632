//! Feedback and non-feedback rate regions for simulating a measurement with
//! classical communication `C` and shared randomness `S`.

use serde::Serialize;

use crate::entropies::vn::shannon;
use crate::linalg::{self, c, CMat};
use crate::qcore::Measurement;
use crate::rates::gain::{info_gain, max_outcome_entropy, maximize_over_states, OptimizerConfig, PovmRoots};
use crate::{arg_err, Result};

/// Number of sampled randomness rates between `0` and the sum-rate minimum.
pub const CURVE_POINTS: usize = 33;
/// Accepted deviation in the decomposition identity.
pub const DECOMPOSITION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    Feedback,
    Nonfeedback,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvePoint {
    pub s: f64,
    pub c: f64,
    /// Index into `RateRegion::decompositions` of the minimizing decomposition.
    pub witness: usize,
}

/// `M_x = sum_w q(x|w) N_w` with inner POVM `N` and post-processing `q`.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub inner: Vec<CMat>,
    /// `post[w][x] = q(x|w)`.
    pub post: Vec<Vec<f64>>,
    pub label: String,
}

impl Decomposition {
    pub fn trivial(elements: &[CMat]) -> Self {
        let n = elements.len();
        let post = (0..n).map(|w| (0..n).map(|x| if x == w { 1.0 } else { 0.0 }).collect()).collect();
        Self { inner: elements.to_vec(), post, label: "trivial".into() }
    }

    pub fn size(&self) -> usize {
        self.inner.len()
    }

    /// The inner measurement, realized destructively.
    pub fn inner_measurement(&self) -> Result<Measurement> {
        Measurement::from_povm(&self.inner)
    }

    /// `max_rho I(W:R)` integrand.
    fn comm_objective(&self, roots: &PovmRoots, rho: &CMat) -> f64 {
        roots.mutual_information(rho)
    }

    /// `I(W:XR) = H(W) + sum_x H(B_x) - sum_w H(B_w) - sum_w p_w H(q(.|w))`,
    /// with `B = sqrt(L) rho sqrt(L)` for outer (`x`) and inner (`w`) elements.
    fn sum_objective(&self, inner: &PovmRoots, outer: &PovmRoots, rho: &CMat) -> f64 {
        let pw = inner.probabilities(rho);
        let noise: f64 = pw.iter().zip(&self.post).map(|(p, q)| p * shannon(q)).sum();
        shannon(&pw) + outer.conditional_entropy_sum(rho) - inner.conditional_entropy_sum(rho) - noise
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionCheck {
    pub valid: bool,
    /// Largest entry of `sum_w q(x|w) N_w - M_x` over all `x`.
    pub identity_violation: f64,
    /// Largest deviation of a row of `q` from a probability distribution.
    pub stochastic_violation: f64,
    /// Most negative eigenvalue among the `N_w`, as a positive number.
    pub positivity_violation: f64,
    /// `max |sum_w N_w - 1|`.
    pub completeness_violation: f64,
}

impl DecompositionCheck {
    pub fn max_violation(&self) -> f64 {
        self.identity_violation
            .max(self.stochastic_violation)
            .max(self.positivity_violation)
            .max(self.completeness_violation)
    }
}

/// Checks `sum_w q(x|w) N_w(sigma) = M_x(sigma)` entrywise, which is the
/// identity on the spanning set `|i><j|`, plus the POVM and stochasticity
/// conditions.
pub fn validate_decomposition(d: &Decomposition, m: &Measurement) -> Result<DecompositionCheck> {
    let elements = m.povm();
    let dim = m.input_dim();
    if d.post.len() != d.inner.len() {
        return arg_err("one post-processing row per inner element is required");
    }
    if d.inner.iter().any(|n| n.shape() != (dim, dim)) {
        return arg_err("inner elements must act on the measured system");
    }
    if d.post.iter().any(|row| row.len() != elements.len()) {
        return arg_err("post-processing rows must cover every outcome");
    }
    let mut identity_violation: f64 = 0.0;
    for (x, e) in elements.iter().enumerate() {
        let mut sum = CMat::zeros(dim, dim);
        for (n, q) in d.inner.iter().zip(&d.post) {
            sum += n * c(q[x]);
        }
        identity_violation = identity_violation.max(linalg::max_abs_entry(&(sum - e)));
    }
    let stochastic_violation = d
        .post
        .iter()
        .map(|row| {
            let neg = row.iter().map(|&q| (-q).max(0.0)).fold(0.0, f64::max);
            neg.max((row.iter().sum::<f64>() - 1.0).abs())
        })
        .fold(0.0, f64::max);
    let positivity_violation = d.inner.iter().map(|n| (-linalg::min_eigenvalue(n)).max(0.0)).fold(0.0, f64::max);
    let total = d.inner.iter().fold(CMat::zeros(dim, dim), |acc, n| acc + n);
    let completeness_violation = linalg::max_abs_entry(&(total - linalg::identity(dim)));
    let mut check = DecompositionCheck {
        valid: false,
        identity_violation,
        stochastic_violation,
        positivity_violation,
        completeness_violation,
    };
    check.valid = check.max_violation() <= DECOMPOSITION_TOL;
    Ok(check)
}

/// Evaluated decomposition: `a = max I(W:R)`, `b = max I(W:XR)`.
#[derive(Debug, Clone, Serialize)]
pub struct DecompositionWitness {
    pub label: String,
    pub size: usize,
    pub comm_rate: f64,
    pub sum_rate: f64,
    pub post: Vec<Vec<f64>>,
    #[serde(skip)]
    pub decomposition: Decomposition,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateRegion {
    pub kind: RegionKind,
    /// Smallest communication rate, reached for unlimited randomness.
    pub c_min: f64,
    /// Smallest sum rate `C + S`, equal to `C(0)`.
    pub sum_min: f64,
    pub curve: Vec<CurvePoint>,
    /// Decompositions that realize the curve (feedback regions hold only the trivial one).
    pub decompositions: Vec<DecompositionWitness>,
    pub converged: bool,
    pub notes: Vec<String>,
}

impl RateRegion {
    /// `C(S)` at an arbitrary randomness rate.
    pub fn rate_at(&self, s: f64) -> f64 {
        self.decompositions.iter().map(|w| w.comm_rate.max(w.sum_rate - s)).fold(f64::INFINITY, f64::min)
    }
}

/// Sampled randomness rates `k * sum_min / 32`.
pub fn sample_rates(sum_min: f64) -> Vec<f64> {
    (0..CURVE_POINTS).map(|k| sum_min.max(0.0) * k as f64 / (CURVE_POINTS - 1) as f64).collect()
}

fn curve(witnesses: &[DecompositionWitness], rates: &[f64]) -> Vec<CurvePoint> {
    rates
        .iter()
        .map(|&s| {
            let (witness, c) = witnesses
                .iter()
                .enumerate()
                .map(|(i, w)| (i, w.comm_rate.max(w.sum_rate - s)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("at least the trivial decomposition");
            CurvePoint { s, c, witness }
        })
        .collect()
}

/// `C >= max I(X:R)`, `C + S >= max H(X)`, sampled as `C(S) = max(c_min, sum_min - S)`.
pub fn feedback_region(m: &Measurement, cfg: &OptimizerConfig) -> RateRegion {
    let gain = info_gain(m, cfg);
    let hx = max_outcome_entropy(m, cfg);
    let trivial = DecompositionWitness {
        label: "trivial".into(),
        size: m.num_outcomes(),
        comm_rate: gain.value,
        sum_rate: hx.value.max(gain.value),
        post: Decomposition::trivial(&m.povm()).post,
        decomposition: Decomposition::trivial(&m.povm()),
    };
    let witnesses = vec![trivial];
    let sum_min = witnesses[0].sum_rate;
    RateRegion {
        kind: RegionKind::Feedback,
        c_min: gain.value,
        sum_min,
        curve: curve(&witnesses, &sample_rates(sum_min)),
        decompositions: witnesses,
        converged: gain.converged && hx.converged,
        notes: Vec::new(),
    }
}

/// Largest `t` with `e - t b >= 0`; zero when `b` leaves the support of `e`.
fn extractable(e: &CMat, b: &CMat) -> f64 {
    let (vals, vecs) = linalg::eigh(e);
    let r = vals.iter().filter(|&&v| v > 1e-12).count();
    if r == 0 {
        return 0.0;
    }
    let basis = vecs.columns(0, r).into_owned();
    let outside = b - &basis * (basis.adjoint() * b * &basis) * basis.adjoint();
    if linalg::max_abs_entry(&outside) > 1e-10 {
        return 0.0;
    }
    let inv_sqrt = linalg::diag_real(&vals[..r].iter().map(|v| 1.0 / v.sqrt()).collect::<Vec<_>>());
    let k = &inv_sqrt * basis.adjoint() * b * &basis * &inv_sqrt;
    let top = linalg::max_eigenvalue(&k);
    if top <= 1e-300 {
        0.0
    } else {
        1.0 / top
    }
}

/// Pulls the largest multiple of `b` out of every outcome in `set` into one
/// shared inner element; other outcomes keep their own elements.
fn extract_shared(elements: &[CMat], set: &[usize], b: &CMat, label: String) -> Option<Decomposition> {
    let n = elements.len();
    let amounts: Vec<f64> = set.iter().map(|&x| extractable(&elements[x], b)).collect();
    if amounts.iter().filter(|&&t| t > 1e-9).count() < 2 {
        return None;
    }
    let total: f64 = amounts.iter().sum();
    let mut inner = vec![b * c(total)];
    let mut row = vec![0.0; n];
    for (&x, &t) in set.iter().zip(&amounts) {
        row[x] = t / total;
    }
    let mut post = vec![row];
    for x in 0..n {
        let rest = match set.iter().position(|&y| y == x) {
            Some(i) => linalg::hermitian_part(&(&elements[x] - b * c(amounts[i]))),
            None => elements[x].clone(),
        };
        if linalg::real_trace(&rest) > 1e-10 {
            inner.push(rest);
            let mut r = vec![0.0; n];
            r[x] = 1.0;
            post.push(r);
        }
    }
    Some(Decomposition { inner, post, label })
}

/// Groups outcomes whose elements are proportional to each other.
fn proportional_grouping(elements: &[CMat]) -> Option<Decomposition> {
    let n = elements.len();
    let normalized: Vec<CMat> = elements.iter().map(|e| e / c(linalg::real_trace(e).max(1e-300))).collect();
    let mut group = vec![usize::MAX; n];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for x in 0..n {
        if group[x] != usize::MAX {
            continue;
        }
        group[x] = groups.len();
        let mut g = vec![x];
        for y in x + 1..n {
            if group[y] == usize::MAX && linalg::max_abs_entry(&(&normalized[x] - &normalized[y])) < 1e-9 {
                group[y] = groups.len();
                g.push(y);
            }
        }
        groups.push(g);
    }
    if groups.len() == n {
        return None;
    }
    let mut inner = Vec::new();
    let mut post = Vec::new();
    for g in &groups {
        let total = g.iter().fold(CMat::zeros(elements[0].nrows(), elements[0].nrows()), |acc, &x| acc + &elements[x]);
        let t = linalg::real_trace(&total);
        let mut row = vec![0.0; n];
        for &x in g {
            row[x] = linalg::real_trace(&elements[x]) / t;
        }
        inner.push(total);
        post.push(row);
    }
    Some(Decomposition { inner, post, label: "proportional_grouping".into() })
}

/// Structured candidates: proportional grouping, and extraction of a shared
/// component (identity, an eigenprojector or another element) from pairs of
/// outcomes and from all outcomes at once. A rank-one refinement of every
/// element is included as well.
pub fn candidate_decompositions(elements: &[CMat], w_cap: usize) -> Vec<Decomposition> {
    let n = elements.len();
    let dim = elements[0].nrows();
    let mut directions: Vec<(String, CMat)> = vec![("identity".into(), linalg::identity(dim))];
    for (x, e) in elements.iter().enumerate() {
        directions.push((format!("element {x}"), e / c(linalg::max_eigenvalue(e).max(1e-300))));
        let (vals, vecs) = linalg::eigh(e);
        for (k, v) in vals.iter().enumerate() {
            if *v > 1e-10 {
                directions
                    .push((format!("eigenvector {k} of element {x}"), linalg::outer(&vecs.column(k).into_owned())));
            }
        }
        let supp = linalg::support_projector(e);
        if linalg::rank(&supp) > 1 && linalg::rank(&supp) < dim {
            directions.push((format!("support of element {x}"), supp));
        }
    }
    let mut out = Vec::new();
    if let Some(g) = proportional_grouping(elements) {
        out.push(g);
    }
    let all: Vec<usize> = (0..n).collect();
    let mut sets = vec![all];
    for x in 0..n {
        for y in x + 1..n {
            sets.push(vec![x, y]);
        }
    }
    for set in &sets {
        for (name, b) in &directions {
            let label = format!("shared {name} from outcomes {set:?}");
            if let Some(d) = extract_shared(elements, set, b, label) {
                out.push(d);
            }
        }
    }
    // Rank-one refinement.
    let mut inner = Vec::new();
    let mut post = Vec::new();
    for (x, e) in elements.iter().enumerate() {
        let (vals, vecs) = linalg::eigh(e);
        for (k, v) in vals.iter().enumerate() {
            if *v > 1e-12 {
                inner.push(linalg::outer(&vecs.column(k).into_owned()) * c(*v));
                let mut r = vec![0.0; n];
                r[x] = 1.0;
                post.push(r);
            }
        }
    }
    if inner.len() > n {
        out.push(Decomposition { inner, post, label: "rank_one_refinement".into() });
    }
    out.retain(|d| d.size() <= w_cap);
    out
}

/// Default bound on the inner alphabet: `|X| |A|^2`.
pub fn default_w_cap(m: &Measurement) -> usize {
    m.num_outcomes() * m.input_dim() * m.input_dim()
}

/// `C(S) = min_D max(max I(W:R), max I(W:XR) - S)` over the trivial
/// decomposition and the structured candidates with at most `w_cap` inner
/// elements. Candidates failing validation are rejected and noted. Returned
/// rates are upper bounds on the true region since the search is not
/// exhaustive.
pub fn nonfeedback_region(m: &Measurement, w_cap: usize, search: bool, cfg: &OptimizerConfig) -> Result<RateRegion> {
    if w_cap < m.num_outcomes() {
        return arg_err(format!("w_cap = {w_cap} is below the number of outcomes {}", m.num_outcomes()));
    }
    let feedback = feedback_region(m, cfg);
    let mut witnesses = feedback.decompositions.clone();
    let mut notes = Vec::new();
    let mut converged = feedback.converged;
    if search {
        let elements = m.povm();
        let outer = PovmRoots::new(elements.clone());
        for d in candidate_decompositions(&elements, w_cap) {
            let check = validate_decomposition(&d, m)?;
            if !check.valid {
                notes.push(format!("rejected '{}': violation {:.3e}", d.label, check.max_violation()));
                continue;
            }
            let inner = PovmRoots::new(d.inner.clone());
            let sum = maximize_over_states(m.input_dim(), |rho| d.sum_objective(&inner, &outer, rho), cfg);
            // I(W:R) >= I(X:R) for every state, so a candidate can only help if
            // it lowers the sum rate.
            if sum.value >= feedback.sum_min - 1e-9 {
                continue;
            }
            let comm = maximize_over_states(m.input_dim(), |rho| d.comm_objective(&inner, rho), cfg);
            converged &= sum.converged && comm.converged;
            witnesses.push(DecompositionWitness {
                label: d.label.clone(),
                size: d.size(),
                comm_rate: comm.value.max(0.0),
                sum_rate: sum.value.max(comm.value),
                post: d.post.clone(),
                decomposition: d,
            });
        }
    }
    let rates = sample_rates(feedback.sum_min);
    let points = curve(&witnesses, &rates);
    let c_min = witnesses.iter().map(|w| w.comm_rate).fold(f64::INFINITY, f64::min);
    let sum_min = points.first().map_or(0.0, |p| p.c);
    Ok(RateRegion {
        kind: RegionKind::Nonfeedback,
        c_min,
        sum_min,
        curve: points,
        decompositions: witnesses,
        converged,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn cfg() -> OptimizerConfig {
        OptimizerConfig::with_seed(4, 9)
    }

    #[test]
    fn computational_feedback_is_flat() {
        let r = feedback_region(&Measurement::computational(2), &cfg());
        assert!((r.c_min - 1.0).abs() < 1e-6 && (r.sum_min - 1.0).abs() < 1e-6);
        assert!(r.curve.iter().all(|p| (p.c - 1.0).abs() < 1e-6));
        assert_eq!(r.curve.len(), CURVE_POINTS);
    }

    #[test]
    fn trine_sum_rate_is_log3() {
        let r = feedback_region(&Measurement::trine(), &cfg());
        assert!((r.sum_min - 3f64.log2()).abs() < 1e-6);
        assert!(r.c_min < 3f64.log2() - 0.1);
        let nf = nonfeedback_region(&Measurement::trine(), 12, true, &cfg()).unwrap();
        for (a, b) in nf.curve.iter().zip(&r.curve) {
            assert!((a.c - b.c).abs() < 1e-3);
        }
    }

    #[test]
    fn validation_detects_perturbation() {
        let mut rng = rng_from_seed(2);
        let m = Measurement::random_povm(2, 3, 2, &mut rng);
        let mut d = Decomposition::trivial(&m.povm());
        assert!(validate_decomposition(&d, &m).unwrap().max_violation() < 1e-12);
        d.post[0][1] += 0.01;
        let s: f64 = d.post[0].iter().sum();
        d.post[0].iter_mut().for_each(|q| *q /= s);
        let check = validate_decomposition(&d, &m).unwrap();
        assert!(!check.valid && check.identity_violation > 1e-3);
    }

    #[test]
    fn coin_flip_needs_no_randomness_without_feedback() {
        let half = linalg::identity(2) * c(0.5);
        let m = Measurement::from_povm(&[half.clone(), half]).unwrap();
        let fb = feedback_region(&m, &cfg());
        assert!((fb.sum_min - 1.0).abs() < 1e-9);
        let nf = nonfeedback_region(&m, default_w_cap(&m), true, &cfg()).unwrap();
        assert!(nf.curve[0].c < 1e-9);
    }

    #[test]
    fn rank_two_qutrit_element_gives_advantage() {
        let mut p = CMat::zeros(3, 3);
        p[(0, 0)] = c(0.5);
        p[(1, 1)] = c(0.5);
        let m = Measurement::from_povm(&[p.clone(), p, linalg::projector(3, 2)]).unwrap();
        let fb = feedback_region(&m, &cfg());
        let nf = nonfeedback_region(&m, default_w_cap(&m), true, &cfg()).unwrap();
        assert!(nf.curve[0].c < fb.curve[0].c - 1e-3);
        let w = &nf.decompositions[nf.curve[0].witness];
        assert!(validate_decomposition(&w.decomposition, &m).unwrap().valid);
        for (a, b) in nf.curve.iter().zip(&fb.curve) {
            assert!(a.c <= b.c + 1e-6);
        }
    }
}

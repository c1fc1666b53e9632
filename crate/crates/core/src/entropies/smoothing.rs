//! Constructive smoothing: each routine builds explicit states in the
//! purified-distance ball and reports the best value found, so every smooth
//! quantity returned here is an upper bound.

use rayon::prelude::*;
use serde::Serialize;

use crate::entropies::one_shot::{self, BoundKind, EntropyResult};
use crate::entropies::Partition;
use crate::linalg::{self, c, CMat};
use crate::qcore::{self, DensityOperator};
use crate::{arg_err, Result};

/// Entries below this are treated as zero when testing for classical structure.
const STRUCTURE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct SmoothingReport {
    pub epsilon: f64,
    #[serde(skip)]
    pub smoothed_state: DensityOperator,
    pub achieved_distance: f64,
    /// Which construction produced the state.
    pub candidate: String,
}

fn check_eps(eps: f64, allow_zero: bool) -> Result<()> {
    let ok = if allow_zero { (0.0..1.0).contains(&eps) } else { eps > 0.0 && eps < 1.0 };
    if !ok {
        return arg_err(format!("smoothing parameter {eps} out of range"));
    }
    Ok(())
}

/// Drops the `k` smallest eigencomponents and rescales to the original trace.
fn truncate_renormalized(vals: &[f64], vecs: &CMat, k: usize) -> CMat {
    let keep = vals.len() - k;
    let total: f64 = vals.iter().sum();
    let kept: f64 = vals[..keep].iter().sum();
    let scale = total / kept;
    let mut m = CMat::zeros(vecs.nrows(), vecs.nrows());
    for (i, v) in vals.iter().take(keep).enumerate() {
        let col = vecs.column(i).into_owned();
        m += linalg::outer(&col) * c(v * scale);
    }
    m
}

/// `H_0^eps` upper bound from the largest eigenvalue truncation whose
/// renormalized result stays within `eps`.
pub fn smooth_h0(rho: &DensityOperator, eps: f64) -> Result<(EntropyResult, SmoothingReport)> {
    check_eps(eps, false)?;
    let (vals, vecs) = linalg::eigh(rho.matrix());
    let vals: Vec<f64> = vals.into_iter().map(|v| v.max(0.0)).collect();
    let rank = vals.iter().filter(|&&v| v > linalg::SUPPORT_CUTOFF).count();
    if rank == 0 {
        return arg_err("zero operator");
    }
    let mut best = (0usize, rho.matrix().clone(), 0.0);
    for k in 1..rank {
        let m = truncate_renormalized(&vals[..rank], &vecs.columns(0, rank).into_owned(), k);
        let p = qcore::distance::purified_distance_matrices(rho.matrix(), &m)?;
        if p <= eps {
            best = (k, m, p);
        } else {
            break;
        }
    }
    let (k, m, p) = best;
    let state = DensityOperator::new(linalg::hermitian_part(&m), rho.dims().to_vec())?;
    let result =
        EntropyResult { value: ((rank - k) as f64).log2(), bound_kind: BoundKind::UpperBound, certificate: None };
    let report = SmoothingReport {
        epsilon: eps,
        smoothed_state: state,
        achieved_distance: p,
        candidate: format!("eigen_truncation({k})"),
    };
    Ok((result, report))
}

struct Candidate {
    name: String,
    matrix: CMat,
    distance: f64,
}

/// Largest `s` in `[0, 1]` with `P(rho, (1-s) base + s target) <= eps`.
fn mix_toward(rho: &CMat, base: &CMat, target: &CMat, eps: f64) -> Result<(f64, CMat, f64)> {
    let mix = |s: f64| base * c(1.0 - s) + target * c(s);
    let p0 = qcore::distance::purified_distance_matrices(rho, base)?;
    if p0 > eps {
        return Ok((0.0, base.clone(), p0));
    }
    let full = mix(1.0);
    let p1 = qcore::distance::purified_distance_matrices(rho, &full)?;
    if p1 <= eps {
        return Ok((1.0, full, p1));
    }
    let (mut lo, mut hi, mut plo) = (0.0, 1.0, p0);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        let p = qcore::distance::purified_distance_matrices(rho, &mix(mid))?;
        if p <= eps {
            lo = mid;
            plo = p;
        } else {
            hi = mid;
        }
    }
    Ok((lo, mix(lo), plo))
}

fn product_of_marginals(m: &CMat, da: usize, db: usize) -> Result<CMat> {
    let a = linalg::partial_trace(m, &[da, db], &[0])?;
    let b = linalg::partial_trace(m, &[da, db], &[1])?;
    // Keep the trace of m: tr(a (x) b) = tr(m)^2.
    let t = linalg::real_trace(m);
    Ok(linalg::kron(&a, &b) / c(t))
}

fn is_diagonal(m: &CMat) -> bool {
    let n = m.nrows();
    (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)].norm() <= STRUCTURE_TOL))
}

fn is_classical_on_a(m: &CMat, da: usize, db: usize) -> bool {
    let n = da * db;
    (0..n).all(|i| (0..n).all(|j| i / db == j / db || m[(i, j)].norm() <= STRUCTURE_TOL))
}

/// Closed form `log sum_b max_a q(a,b) / q_A(a)` for a diagonal state.
pub fn classical_i_max(q: &[f64], da: usize, db: usize) -> f64 {
    classical_ratio_sum(q, da, db).log2()
}

fn classical_ratio_sum(q: &[f64], da: usize, db: usize) -> f64 {
    let qa: Vec<f64> = (0..da).map(|a| q[a * db..(a + 1) * db].iter().sum()).collect();
    (0..db).map(|b| (0..da).filter(|&a| qa[a] > 0.0).map(|a| q[a * db + b] / qa[a]).fold(0.0, f64::max)).sum()
}

/// Generalized fidelity of two commuting diagonal operators.
fn diagonal_fidelity(p: &[f64], q: &[f64]) -> f64 {
    let tp: f64 = p.iter().sum();
    let tq: f64 = q.iter().sum();
    let overlap: f64 = p.iter().zip(q).map(|(a, b)| (a * b).max(0.0).sqrt()).sum();
    overlap + ((1.0 - tp).max(0.0) * (1.0 - tq).max(0.0)).sqrt()
}

/// Pattern search over diagonal operators in the ball, starting from `start`.
fn diagonal_search(p: &[f64], start: &[f64], da: usize, db: usize, eps: f64) -> Vec<f64> {
    let n = p.len();
    let fmin = (1.0 - eps * eps).sqrt();
    let feasible = |q: &[f64]| {
        q.iter().all(|&v| v >= 0.0) && q.iter().sum::<f64>() <= 1.0 + 1e-15 && diagonal_fidelity(p, q) >= fmin + 1e-13
    };
    let mut q = start.to_vec();
    if !feasible(&q) {
        return q;
    }
    let mut fq = classical_ratio_sum(&q, da, db);
    let mut h = 0.1 * q.iter().cloned().fold(0.0, f64::max);
    let mut sweeps = 0;
    while h > 1e-10 && sweeps < 20_000 {
        sweeps += 1;
        let mut improved = false;
        'moves: for i in 0..n {
            // j == n: remove mass from i without moving it anywhere.
            for j in 0..=n {
                if i == j {
                    continue;
                }
                for &delta in &[h, -h] {
                    let mut cand = q.clone();
                    cand[i] -= delta;
                    if j < n {
                        cand[j] += delta;
                    }
                    if !feasible(&cand) {
                        continue;
                    }
                    let f = classical_ratio_sum(&cand, da, db);
                    if f < fq - 1e-14 {
                        q = cand;
                        fq = f;
                        improved = true;
                        break 'moves;
                    }
                }
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    q
}

/// Upper bound on `I_max^eps(A:B)` by minimizing over a family of explicit
/// smoothed states: renormalized eigenvalue truncations, mixing toward the
/// product of marginals, their composition, per-block truncation for states
/// classical on A, and a local search over diagonal states for fully classical
/// input. `eps = 0` returns the exact value.
pub fn smooth_i_max(
    rho: &DensityOperator,
    partition: &Partition,
    eps: f64,
) -> Result<(EntropyResult, SmoothingReport)> {
    check_eps(eps, true)?;
    let (ab, da, db) = partition.arrange(rho)?;
    let m = ab.matrix().clone();
    let exact = one_shot::i_max_arranged(&m, da, db)?;
    let exact_report = |r: EntropyResult| -> Result<(EntropyResult, SmoothingReport)> {
        let report = SmoothingReport {
            epsilon: eps,
            smoothed_state: ab.clone(),
            achieved_distance: 0.0,
            candidate: "exact".into(),
        };
        Ok((
            EntropyResult { bound_kind: if eps == 0.0 { BoundKind::Exact } else { BoundKind::UpperBound }, ..r },
            report,
        ))
    };
    if eps == 0.0 || exact.value <= 0.0 {
        return exact_report(exact);
    }

    let mut cands = Vec::new();
    let (vals, vecs) = linalg::eigh(&m);
    let vals: Vec<f64> = vals.into_iter().map(|v| v.max(0.0)).collect();
    let rank = vals.iter().filter(|&&v| v > linalg::SUPPORT_CUTOFF).count();
    let support = vecs.columns(0, rank).into_owned();
    let mut truncations = vec![(0usize, m.clone(), 0.0)];
    for k in 1..rank {
        let t = truncate_renormalized(&vals[..rank], &support, k);
        let p = qcore::distance::purified_distance_matrices(&m, &t)?;
        if p > eps {
            break;
        }
        truncations.push((k, t, p));
    }
    for (k, t, p) in &truncations {
        if *k > 0 {
            cands.push(Candidate { name: format!("eigen_truncation({k})"), matrix: t.clone(), distance: *p });
        }
        let target = product_of_marginals(t, da, db)?;
        let (s, mixed, pm) = mix_toward(&m, t, &target, eps)?;
        if s > 0.0 {
            let name =
                if *k == 0 { format!("mixing({s:.6})") } else { format!("eigen_truncation({k})+mixing({s:.6})") };
            cands.push(Candidate { name, matrix: mixed, distance: pm });
        }
    }

    if is_classical_on_a(&m, da, db) {
        cands.extend(block_truncations(&m, da, db, eps)?);
    }

    let diagonal = is_diagonal(&m);
    let mut scored: Vec<(f64, Candidate)> = cands
        .into_par_iter()
        .filter_map(|cand| {
            let v = if diagonal && is_diagonal(&cand.matrix) {
                let q: Vec<f64> = (0..da * db).map(|i| cand.matrix[(i, i)].re).collect();
                classical_i_max(&q, da, db)
            } else {
                one_shot::i_max_arranged(&cand.matrix, da, db).ok()?.value
            };
            Some((v, cand))
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));

    if diagonal && da * db <= 64 {
        let p: Vec<f64> = (0..da * db).map(|i| m[(i, i)].re).collect();
        let start: Vec<f64> = match scored.iter().find(|(_, cand)| is_diagonal(&cand.matrix)) {
            Some((_, cand)) => (0..da * db).map(|i| cand.matrix[(i, i)].re.max(0.0)).collect(),
            None => p.clone(),
        };
        let q = diagonal_search(&p, &start, da, db, eps);
        let matrix = linalg::diag_real(&q);
        let distance = qcore::distance::purified_distance_matrices(&m, &matrix)?;
        if distance <= eps {
            let v = classical_i_max(&q, da, db);
            scored.push((v, Candidate { name: "diagonal_search".into(), matrix, distance }));
            scored.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
    }

    let Some((_, best)) = scored.into_iter().next() else {
        return exact_report(exact);
    };
    let result = one_shot::i_max_arranged(&best.matrix, da, db)?;
    if result.value >= exact.value {
        return exact_report(exact);
    }
    let state = DensityOperator::new(linalg::hermitian_part(&best.matrix), vec![da, db])?;
    let report =
        SmoothingReport { epsilon: eps, smoothed_state: state, achieved_distance: best.distance, candidate: best.name };
    Ok((EntropyResult { bound_kind: BoundKind::UpperBound, ..result }, report))
}

/// Drops, within each A-block, eigencomponents whose weight relative to the
/// block is at most a threshold; the largest feasible threshold wins.
fn block_truncations(m: &CMat, da: usize, db: usize, eps: f64) -> Result<Vec<Candidate>> {
    let blocks: Vec<(Vec<f64>, CMat, f64)> = (0..da)
        .map(|a| {
            let blk = m.view((a * db, a * db), (db, db)).into_owned();
            let w = linalg::real_trace(&blk);
            let (v, u) = linalg::eigh(&blk);
            (v, u, w)
        })
        .collect();
    let mut thresholds: Vec<f64> = blocks
        .iter()
        .flat_map(|(v, _, w)| v.iter().filter(|&&x| x > linalg::SUPPORT_CUTOFF).map(move |x| x / w).collect::<Vec<_>>())
        .collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let total = linalg::real_trace(m);
    let build = |tau: f64| -> CMat {
        let mut out = CMat::zeros(da * db, da * db);
        for (a, (v, u, w)) in blocks.iter().enumerate() {
            for (i, &x) in v.iter().enumerate() {
                if x > linalg::SUPPORT_CUTOFF && x / w > tau {
                    let col = u.column(i).into_owned();
                    let mut blk = out.view_mut((a * db, a * db), (db, db));
                    blk += linalg::outer(&col) * c(x);
                }
            }
        }
        let kept = linalg::real_trace(&out);
        out * c(total / kept)
    };
    let mut best = None;
    for &tau in &thresholds {
        let t = build(tau);
        if linalg::real_trace(&t) <= 0.0 || !t.iter().all(|x| x.is_finite()) {
            break;
        }
        let p = qcore::distance::purified_distance_matrices(m, &t)?;
        if p > eps {
            break;
        }
        best = Some(Candidate { name: format!("block_truncation({tau:.3e})"), matrix: t, distance: p });
    }
    Ok(best.into_iter().collect())
}

use rayon::prelude::*;
use serde::Serialize;

use crate::linalg::{self, c, CMat, CVec};
use crate::rng::task_rng;
use crate::{arg_err, Result};

pub const DEFAULT_RESTARTS: usize = 20;
const MAX_ITERS: usize = 500;

/// Lower estimate of the diamond distance from a multistart search.
#[derive(Debug, Clone, Serialize)]
pub struct DiamondEstimate {
    pub value: f64,
    pub restarts: usize,
    pub best_restart: usize,
    /// Always true: the value is attained by an explicit probe state.
    pub lower_bound: bool,
}

fn check_channel(ks: &[CMat]) -> Result<(usize, usize)> {
    let first = match ks.first() {
        Some(k) => k,
        None => return arg_err("channel needs at least one Kraus operator"),
    };
    let shape = first.shape();
    if ks.iter().any(|k| k.shape() != shape) {
        return arg_err("Kraus operators of one channel must share a shape");
    }
    Ok((shape.1, shape.0))
}

fn lift(ks: &[CMat], r: usize) -> Vec<CMat> {
    let id = linalg::identity(r);
    ks.iter().map(|k| linalg::kron(k, &id)).collect()
}

fn apply(ks: &[CMat], rho: &CMat) -> CMat {
    let d = ks[0].nrows();
    let mut out = CMat::zeros(d, d);
    for k in ks {
        out += k * rho * k.adjoint();
    }
    out
}

fn apply_adjoint(ks: &[CMat], s: &CMat) -> CMat {
    let d = ks[0].ncols();
    let mut out = CMat::zeros(d, d);
    for k in ks {
        out += k.adjoint() * s * k;
    }
    out
}

/// `||((E1 - E2) (x) id)(|psi><psi|)||_1` for a probe on A (x) A.
pub fn probe_value(e1: &[CMat], e2: &[CMat], psi: &CVec) -> Result<f64> {
    let (din, _) = check_channel(e1)?;
    let l1 = lift(e1, din);
    let l2 = lift(e2, din);
    let rho = linalg::outer(psi);
    Ok(linalg::trace_norm(&(apply(&l1, &rho) - apply(&l2, &rho))))
}

/// Alternating maximization of the trace norm over pure probes, restarted from
/// seeded random vectors. Returns the best value found.
pub fn diamond_distance(e1: &[CMat], e2: &[CMat], restarts: usize, seed: u64) -> Result<DiamondEstimate> {
    let (din1, dout1) = check_channel(e1)?;
    let (din2, dout2) = check_channel(e2)?;
    if din1 != din2 || dout1 != dout2 {
        return arg_err("channels must have equal input and output dimensions");
    }
    let restarts = restarts.max(1);
    let l1 = lift(e1, din1);
    let l2 = lift(e2, din1);
    let n = din1 * din1;
    let results: Vec<(usize, f64)> = (0..restarts)
        .into_par_iter()
        .map(|i| {
            let mut rng = task_rng(seed, i as u64);
            let mut psi = linalg::random_unit_vector(n, &mut rng);
            let mut best = 0.0f64;
            for _ in 0..MAX_ITERS {
                let rho = linalg::outer(&psi);
                let delta = apply(&l1, &rho) - apply(&l2, &rho);
                let val = linalg::trace_norm(&delta);
                let improved = val > best + 1e-13;
                best = best.max(val);
                if !improved && best > 0.0 {
                    break;
                }
                let sign = linalg::apply_spectral(&delta, |x| if x >= 0.0 { 1.0 } else { -1.0 });
                let g = apply_adjoint(&l1, &sign) - apply_adjoint(&l2, &sign);
                let (_, vecs) = linalg::eigh(&g);
                psi = vecs.column(0).into_owned();
            }
            (i, best)
        })
        .collect();
    let (best_restart, value) =
        results.into_iter().fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    Ok(DiamondEstimate { value: value.max(0.0), restarts, best_restart, lower_bound: true })
}

/// Constant channel `rho -> tr[rho] sigma` as Kraus operators.
pub fn constant_channel(din: usize, sigma: &CMat) -> Vec<CMat> {
    let (vals, vecs) = linalg::eigh(sigma);
    let mut out = Vec::new();
    for (k, &l) in vals.iter().enumerate() {
        if l <= linalg::SUPPORT_CUTOFF {
            continue;
        }
        let v = vecs.column(k).into_owned() * c(l.sqrt());
        for a in 0..din {
            out.push(&v * linalg::basis_vector(din, a).adjoint());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_channels() {
        let id = vec![linalg::identity(2)];
        let d = diamond_distance(&id, &id, 4, 1).unwrap();
        assert!(d.value.abs() < 1e-12);
    }

    #[test]
    fn orthogonal_constant_channels() {
        let e1 = constant_channel(2, &linalg::projector(2, 0));
        let e2 = constant_channel(2, &linalg::projector(2, 1));
        let d = diamond_distance(&e1, &e2, 4, 2).unwrap();
        assert!((d.value - 2.0).abs() < 1e-9);
    }

    #[test]
    fn identity_vs_dephasing_is_one() {
        let id = vec![linalg::identity(2)];
        let deph = vec![linalg::projector(2, 0), linalg::projector(2, 1)];
        let d = diamond_distance(&id, &deph, 8, 3).unwrap();
        assert!((d.value - 1.0).abs() < 1e-6, "{}", d.value);
    }
}

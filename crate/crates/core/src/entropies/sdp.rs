//! Log-barrier interior point solver for
//!
//! ```text
//!   minimize tr Y   subject to   1_A (x) Y >= K,   Y Hermitian on B
//! ```
//!
//! whose optimum gives `H_min(A|B) = -log opt(rho_AB)`. The dual is
//! `maximize tr[K Z]` over `Z >= 0` with `tr_A Z = 1_B`; a feasible dual point is
//! recovered from the barrier's central path, so every solve returns a
//! certified interval `[dual, primal]`.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{self, c, CMat, C64};
use crate::{Error, Result};

/// Target relative duality gap `primal / dual - 1`.
pub const DEFAULT_REL_GAP: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct SdpSolution {
    /// Optimal `Y` (strictly feasible).
    pub y: CMat,
    /// `tr Y`, an upper bound on the optimum.
    pub primal: f64,
    /// `tr[K Z]` for a dual feasible `Z`, a lower bound on the optimum.
    pub dual: f64,
    pub dual_z: CMat,
    pub newton_steps: usize,
}

impl SdpSolution {
    /// `log2(primal / dual)`.
    pub fn log_gap(&self) -> f64 {
        (self.primal / self.dual).log2()
    }
}

/// Orthonormal Hermitian basis of `d x d` matrices (Hilbert-Schmidt inner product).
pub fn hermitian_basis(d: usize) -> Vec<CMat> {
    let mut out = Vec::with_capacity(d * d);
    let s = 1.0 / 2f64.sqrt();
    for i in 0..d {
        out.push(linalg::projector(d, i));
    }
    for i in 0..d {
        for j in i + 1..d {
            let mut m = CMat::zeros(d, d);
            m[(i, j)] = c(s);
            m[(j, i)] = c(s);
            out.push(m);
            let mut m = CMat::zeros(d, d);
            m[(i, j)] = C64::new(0.0, -s);
            m[(j, i)] = C64::new(0.0, s);
            out.push(m);
        }
    }
    out
}

fn lift(da: usize, y: &CMat) -> CMat {
    linalg::kron(&linalg::identity(da), y)
}

/// Partial trace over the first factor of a `da * db` operator.
fn trace_a(m: &CMat, da: usize, db: usize) -> CMat {
    let mut out = CMat::zeros(db, db);
    for a in 0..da {
        out += m.view((a * db, a * db), (db, db));
    }
    out
}

fn hermitian_inverse_pd(s: &CMat) -> Option<(CMat, f64)> {
    let (vals, vecs) = linalg::eigh(s);
    if vals.iter().any(|&v| v <= 0.0) {
        return None;
    }
    let logdet = vals.iter().map(|v| v.ln()).sum();
    let mut scaled = vecs.clone();
    for (j, v) in vals.iter().enumerate() {
        let f = c(1.0 / v);
        for i in 0..scaled.nrows() {
            scaled[(i, j)] *= f;
        }
    }
    Some((scaled * vecs.adjoint(), logdet))
}

/// Barrier objective `t tr Y - ln det(1 (x) Y - K)`; `None` when infeasible.
fn barrier(t: f64, y: &CMat, k: &CMat, da: usize) -> Option<(f64, CMat)> {
    let s = lift(da, y) - k;
    let (inv, logdet) = hermitian_inverse_pd(&linalg::hermitian_part(&s))?;
    Some((t * linalg::real_trace(y) - logdet, inv))
}

/// Solves the primal/dual pair for `K` on `A (x) B` with dimensions `(da, db)`.
pub fn solve(k: &CMat, da: usize, db: usize, rel_gap: f64) -> Result<SdpSolution> {
    let n = da * db;
    if k.nrows() != n || k.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: k.nrows() });
    }
    let k = linalg::hermitian_part(k);
    let lmax = linalg::max_eigenvalue(&k);
    if lmax <= 0.0 {
        return Err(Error::Numerical("operator has no positive part".into()));
    }
    let basis = hermitian_basis(db);
    let nv = basis.len();
    let mut y = linalg::identity(db) * c(lmax + 1.0);
    // Scale-aware initial weight: the barrier gap is n / t.
    let mut t = n as f64 / (lmax * db as f64);
    let mut steps = 0usize;
    let mut inv_s;
    loop {
        // Newton's method on the barrier for fixed t.
        let mut inner = 0;
        loop {
            let (f0, inv) = barrier(t, &y, &k, da).ok_or_else(|| Error::Numerical("lost strict feasibility".into()))?;
            let ta = trace_a(&inv, da, db);
            let mut grad = DVector::<f64>::zeros(nv);
            let mut ms = Vec::with_capacity(nv);
            for (i, e) in basis.iter().enumerate() {
                grad[i] = t * e.trace().re - (&ta * e).trace().re;
                ms.push(&inv * lift(da, e));
            }
            let mut hess = DMatrix::<f64>::zeros(nv, nv);
            for i in 0..nv {
                for j in i..nv {
                    let mi = &ms[i];
                    let mj = &ms[j];
                    let mut acc = 0.0;
                    for p in 0..n {
                        for q in 0..n {
                            acc += (mi[(p, q)] * mj[(q, p)]).re;
                        }
                    }
                    hess[(i, j)] = acc;
                    hess[(j, i)] = acc;
                }
            }
            let step = match hess.clone().cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => hess.lu().solve(&(-&grad)).ok_or_else(|| Error::Numerical("singular Newton system".into()))?,
            };
            let decrement = -grad.dot(&step);
            steps += 1;
            inner += 1;
            if decrement / 2.0 < 1e-11 || inner > 200 {
                inv_s = inv;
                break;
            }
            let mut dy = CMat::zeros(db, db);
            for (i, e) in basis.iter().enumerate() {
                dy += e * c(step[i]);
            }
            let mut alpha = 1.0;
            loop {
                let cand = &y + &dy * c(alpha);
                if let Some((f1, _)) = barrier(t, &cand, &k, da) {
                    if f1 <= f0 - 0.25 * alpha * decrement {
                        y = cand;
                        break;
                    }
                }
                alpha *= 0.5;
                if alpha < 1e-14 {
                    break;
                }
            }
            if alpha < 1e-14 {
                inv_s = barrier(t, &y, &k, da).map(|(_, i)| i).unwrap();
                break;
            }
        }
        let primal = linalg::real_trace(&y);
        if (n as f64) / t <= rel_gap * primal * 0.5 || steps > 5000 {
            break;
        }
        t *= 10.0;
    }
    let (dual_z, dual) = dual_from_inverse(&inv_s, &k, da, db)?;
    let primal = linalg::real_trace(&y);
    Ok(SdpSolution { y: linalg::hermitian_part(&y), primal, dual, dual_z, newton_steps: steps })
}

/// Normalizes `Z proportional to S^{-1}` to satisfy `tr_A Z = 1` exactly and returns
/// `(Z, tr[K Z])`.
fn dual_from_inverse(inv_s: &CMat, k: &CMat, da: usize, db: usize) -> Result<(CMat, f64)> {
    let z = linalg::hermitian_part(inv_s);
    let t = trace_a(&z, da, db);
    if linalg::min_eigenvalue(&t) <= 0.0 {
        return Err(Error::Numerical("degenerate dual point".into()));
    }
    let tinv = linalg::apply_spectral(&t, |x| 1.0 / x.sqrt());
    let w = lift(da, &tinv);
    let z = &w * z * &w;
    let val = (k * &z).trace().re;
    Ok((z, val))
}

/// Checks a primal point: returns the smallest eigenvalue of `1 (x) Y - K`.
pub fn primal_slack(k: &CMat, y: &CMat, da: usize) -> f64 {
    linalg::min_eigenvalue(&(lift(da, y) - k))
}

/// Checks a dual point: returns `(min eig Z, max |tr_A Z - 1|)`.
pub fn dual_residual(z: &CMat, da: usize, db: usize) -> (f64, f64) {
    let t = trace_a(z, da, db);
    (linalg::min_eigenvalue(z), linalg::max_abs_entry(&(t - linalg::identity(db))))
}

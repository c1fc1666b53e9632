//! Test-side oracles that do not go through the library's solvers.

#![allow(dead_code)]

use infogain_core::{CMat, C64};

fn cplx(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn largest_eigenvalue(m: &CMat) -> f64 {
    let h = (m + m.adjoint()) * cplx(0.5);
    h.symmetric_eigenvalues().iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// `m^{-1/2}` of a positive definite Hermitian matrix.
pub fn inv_sqrt(m: &CMat) -> CMat {
    let e = ((m + m.adjoint()) * cplx(0.5)).symmetric_eigen();
    let d = CMat::from_diagonal(&e.eigenvalues.map(|v| cplx(1.0 / v.sqrt())));
    &e.eigenvectors * d * e.eigenvectors.adjoint()
}

/// `sigma^{-1/2}` for the qubit state with Bloch vector `r`, in closed form.
pub fn bloch_inv_sqrt(r: [f64; 3]) -> CMat {
    let n = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    let (lp, lm) = ((1.0 + n) / 2.0, (1.0 - n) / 2.0);
    let a = (lp.powf(-0.5) + lm.powf(-0.5)) / 2.0;
    let b = if n > 0.0 { (lp.powf(-0.5) - lm.powf(-0.5)) / 2.0 / n } else { 0.0 };
    CMat::from_row_slice(
        2,
        2,
        &[
            C64::new(a + b * r[2], 0.0),
            C64::new(b * r[0], -b * r[1]),
            C64::new(b * r[0], b * r[1]),
            C64::new(a - b * r[2], 0.0),
        ],
    )
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// `tr_B` of an operator on `A (x) B`.
pub fn trace_out_second(m: &CMat, da: usize, db: usize) -> CMat {
    CMat::from_fn(da, da, |i, j| (0..db).map(|k| m[(i * db + k, j * db + k)]).sum())
}

/// Minimizes `f` over the Bloch ball by repeatedly refining a 7x7x7 grid
/// around the best point found so far.
pub fn zoom_grid_min(f: impl Fn([f64; 3]) -> f64) -> f64 {
    let mut center = [0.0; 3];
    let mut best = f(center);
    let mut h: f64 = 1.0;
    while h > 1e-10 {
        let mut next = center;
        for i in -3i32..=3 {
            for j in -3i32..=3 {
                for k in -3i32..=3 {
                    let r = [
                        center[0] + h * f64::from(i) / 3.0,
                        center[1] + h * f64::from(j) / 3.0,
                        center[2] + h * f64::from(k) / 3.0,
                    ];
                    if r.iter().map(|x| x * x).sum::<f64>() >= 1.0 - 1e-12 {
                        continue;
                    }
                    let v = f(r);
                    if v < best {
                        best = v;
                        next = r;
                    }
                }
            }
        }
        center = next;
        h *= 0.5;
    }
    best
}

/// `min_sigma D_max(rho || tau_A (x) sigma_B)` over qubit states `sigma_B`,
/// for an operator laid out as `A (x) B` with `dim B = 2` and `tau_A > 0`.
pub fn conditioned_d_max(rho: &CMat, tau_a: &CMat) -> f64 {
    let ta = inv_sqrt(tau_a);
    let best = zoom_grid_min(|r| {
        let w = kron(&ta, &bloch_inv_sqrt(r));
        largest_eigenvalue(&(&w * rho * &w))
    });
    best.log2()
}

/// Grid-refinement `H_min(A|B)` for qubit `B`.
pub fn h_min_oracle(rho: &CMat, da: usize) -> f64 {
    -conditioned_d_max(rho, &CMat::identity(da, da))
}

/// Grid-refinement `I_max(A:B)` for qubit `B` and full-rank `rho_A`.
pub fn i_max_oracle(rho: &CMat, da: usize) -> f64 {
    conditioned_d_max(rho, &trace_out_second(rho, da, 2))
}

pub fn trace_norm(m: &CMat) -> f64 {
    let h = (m + m.adjoint()) * cplx(0.5);
    h.symmetric_eigenvalues().iter().map(|v| v.abs()).sum()
}

/// All permutations of `0..n` (Heap's algorithm).
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut a: Vec<usize> = (0..n).collect();
    let mut c = vec![0; n];
    let mut out = vec![a.clone()];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            out.push(a.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

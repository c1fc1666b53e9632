//! Dense complex linear algebra helpers shared by every module.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>` (column-major). Composite
//! systems use the big-endian convention: the first subsystem is the most
//! significant index of the flattened basis.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{arg_err, Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Eigenvalues at or below this value are treated as outside the support.
pub const SUPPORT_CUTOFF: f64 = 1e-10;

pub const LN2: f64 = std::f64::consts::LN_2;

#[inline]
pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

#[inline]
pub fn log2(x: f64) -> f64 {
    x.log2()
}

/// `-x log2 x` with the `0 log 0 = 0` convention.
#[inline]
pub fn eta(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.log2()
    }
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

pub fn dagger(m: &CMat) -> CMat {
    m.adjoint()
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5)
}

pub fn trace(m: &CMat) -> C64 {
    m.trace()
}

pub fn real_trace(m: &CMat) -> f64 {
    m.trace().re
}

/// Largest absolute deviation from Hermiticity.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigendecomposition of the Hermitian part of `m`, eigenvalues sorted descending.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

pub fn eigvalsh(m: &CMat) -> Vec<f64> {
    eigh(m).0
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    eigvalsh(m).last().copied().unwrap_or(0.0)
}

pub fn max_eigenvalue(m: &CMat) -> f64 {
    eigvalsh(m).first().copied().unwrap_or(0.0)
}

/// Applies a real function to the spectrum of a Hermitian matrix.
pub fn apply_spectral(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = eigh(m);
    let n = vals.len();
    let mut scaled = vecs.clone();
    for k in 0..n {
        let fk = c(f(vals[k]));
        for i in 0..n {
            scaled[(i, k)] *= fk;
        }
    }
    &scaled * vecs.adjoint()
}

pub fn sqrt_psd(m: &CMat) -> CMat {
    apply_spectral(m, |x| if x > 0.0 { x.sqrt() } else { 0.0 })
}

/// Pseudo-inverse square root on the support (eigenvalues above the cutoff).
pub fn inv_sqrt_on_support(m: &CMat) -> CMat {
    apply_spectral(m, |x| if x > SUPPORT_CUTOFF { 1.0 / x.sqrt() } else { 0.0 })
}

pub fn support_projector(m: &CMat) -> CMat {
    apply_spectral(m, |x| if x > SUPPORT_CUTOFF { 1.0 } else { 0.0 })
}

/// Orthonormal basis of the support as columns.
pub fn support_basis(m: &CMat) -> CMat {
    let (vals, vecs) = eigh(m);
    let r = vals.iter().filter(|&&v| v > SUPPORT_CUTOFF).count();
    vecs.columns(0, r).into_owned()
}

pub fn rank(m: &CMat) -> usize {
    eigvalsh(m).iter().filter(|&&v| v > SUPPORT_CUTOFF).count()
}

/// Trace norm. Uses the spectrum when `m` is Hermitian, singular values otherwise.
pub fn trace_norm(m: &CMat) -> f64 {
    if m.nrows() == m.ncols() && hermiticity_defect(m) < 1e-12 {
        eigvalsh(m).iter().map(|v| v.abs()).sum()
    } else {
        svd(m).s.iter().sum()
    }
}

pub fn operator_norm(m: &CMat) -> f64 {
    svd(m).s.iter().cloned().fold(0.0, f64::max)
}

pub fn max_abs_entry(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Matrix product through four real products, which use the blocked real
/// kernel. Worth it from a few hundred rows on.
pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let re: DMatrix<f64> = &ar * &br - &ai * &bi;
    let im: DMatrix<f64> = &ar * &bi + &ai * &br;
    re.zip_map(&im, C64::new)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVec, b: &CVec) -> CVec {
    a.kronecker(b)
}

pub fn kron_all(ms: &[CMat]) -> CMat {
    let mut out = CMat::identity(1, 1);
    for m in ms {
        out = kron(&out, m);
    }
    out
}

pub fn outer(v: &CVec) -> CMat {
    v * v.adjoint()
}

pub fn basis_vector(d: usize, i: usize) -> CVec {
    let mut v = CVec::zeros(d);
    v[i] = c(1.0);
    v
}

/// Row vector `<i|` as a `1 x d` matrix.
pub fn bra(d: usize, i: usize) -> CMat {
    let mut m = CMat::zeros(1, d);
    m[(0, i)] = c(1.0);
    m
}

pub fn projector(d: usize, i: usize) -> CMat {
    let mut m = CMat::zeros(d, d);
    m[(i, i)] = c(1.0);
    m
}

pub fn diag_real(values: &[f64]) -> CMat {
    let n = values.len();
    let mut m = CMat::zeros(n, n);
    for (i, &v) in values.iter().enumerate() {
        m[(i, i)] = c(v);
    }
    m
}

pub fn product(dims: &[usize]) -> usize {
    dims.iter().product()
}

/// Mixed-radix digits of `index` for the given dims (first dim most significant).
pub fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = index % dims[k];
        index /= dims[k];
    }
    out
}

pub fn flat_index(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&d, &n)| acc * n + d)
}

fn check_subsystems(dims: &[usize], idx: &[usize]) -> Result<()> {
    if idx.is_empty() {
        return arg_err("subsystem set must be nonempty");
    }
    for (k, &i) in idx.iter().enumerate() {
        if i >= dims.len() {
            return arg_err(format!("subsystem index {i} out of range for {} subsystems", dims.len()));
        }
        if idx[..k].contains(&i) {
            return arg_err(format!("subsystem index {i} repeated"));
        }
    }
    Ok(())
}

/// Partial trace keeping the subsystems in `keep` (output in ascending subsystem order).
pub fn partial_trace(m: &CMat, dims: &[usize], keep: &[usize]) -> Result<CMat> {
    check_subsystems(dims, keep)?;
    let n = product(dims);
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: m.nrows() });
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !kept.contains(i)).collect();
    let kdims: Vec<usize> = kept.iter().map(|&i| dims[i]).collect();
    let tdims: Vec<usize> = traced.iter().map(|&i| dims[i]).collect();
    let dk = product(&kdims);
    let dt = product(&tdims);
    // full index for (kept index, traced index)
    let mut full = vec![0usize; dk * dt];
    let mut dig = vec![0usize; dims.len()];
    for a in 0..dk {
        let ka = digits(a, &kdims);
        for t in 0..dt {
            let ta = digits(t, &tdims);
            for (p, &s) in kept.iter().enumerate() {
                dig[s] = ka[p];
            }
            for (p, &s) in traced.iter().enumerate() {
                dig[s] = ta[p];
            }
            full[a * dt + t] = flat_index(&dig, dims);
        }
    }
    let mut out = CMat::zeros(dk, dk);
    for a in 0..dk {
        for b in 0..dk {
            let mut acc = C64::new(0.0, 0.0);
            for t in 0..dt {
                acc += m[(full[a * dt + t], full[b * dt + t])];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

/// Index map for reordering subsystems: `new[i] = old[map[i]]`.
fn permutation_map(dims: &[usize], order: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    if order.len() != dims.len() {
        return arg_err("subsystem order must list every subsystem once");
    }
    check_subsystems(dims, order)?;
    let new_dims: Vec<usize> = order.iter().map(|&i| dims[i]).collect();
    let n = product(dims);
    let mut map = vec![0usize; n];
    let mut old = vec![0usize; dims.len()];
    for (i, slot) in map.iter_mut().enumerate() {
        let nd = digits(i, &new_dims);
        for (p, &s) in order.iter().enumerate() {
            old[s] = nd[p];
        }
        *slot = flat_index(&old, dims);
    }
    Ok((map, new_dims))
}

/// Reorders the tensor factors of a vector; `order[k]` is the old subsystem placed at position `k`.
pub fn permute_vector(v: &CVec, dims: &[usize], order: &[usize]) -> Result<(CVec, Vec<usize>)> {
    let (map, new_dims) = permutation_map(dims, order)?;
    Ok((CVec::from_iterator(map.len(), map.iter().map(|&j| v[j])), new_dims))
}

pub fn permute_operator(m: &CMat, dims: &[usize], order: &[usize]) -> Result<(CMat, Vec<usize>)> {
    let (map, new_dims) = permutation_map(dims, order)?;
    let n = map.len();
    Ok((CMat::from_fn(n, n, |i, j| m[(map[i], map[j])]), new_dims))
}

/// Dephases subsystem `k` in the computational basis.
pub fn dephase(m: &CMat, dims: &[usize], k: usize) -> CMat {
    let n = m.nrows();
    let mut out = m.clone();
    for i in 0..n {
        let di = digits(i, dims)[k];
        for j in 0..n {
            if digits(j, dims)[k] != di {
                out[(i, j)] = C64::new(0.0, 0.0);
            }
        }
    }
    out
}

/// Embeds an operator on subsystem `k` into the full space.
pub fn embed_local(op: &CMat, dims: &[usize], k: usize) -> CMat {
    let before: usize = dims[..k].iter().product();
    let after: usize = dims[k + 1..].iter().product();
    kron(&kron(&identity(before), op), &identity(after))
}

/// Completes the orthonormal columns of `v` (rows >= cols) to a full unitary.
pub fn complete_basis(v: &CMat) -> CMat {
    extend_orthonormal(v, v.nrows())
}

/// Extends the orthonormal columns of `v` to `total` orthonormal columns by
/// Gram-Schmidt on computational basis vectors.
pub fn extend_orthonormal(v: &CMat, total: usize) -> CMat {
    let n = v.nrows();
    let total = total.min(n);
    let mut cols: Vec<CVec> = (0..v.ncols()).map(|j| v.column(j).into_owned()).collect();
    let mut e = 0;
    while cols.len() < total && e < n {
        let mut w = basis_vector(n, e);
        for _ in 0..2 {
            for q in &cols {
                let proj = q.dotc(&w);
                w -= q * proj;
            }
        }
        let nrm = w.norm();
        if nrm > 1e-8 {
            cols.push(w / c(nrm));
        }
        e += 1;
    }
    if cols.is_empty() {
        return CMat::zeros(n, 0);
    }
    CMat::from_columns(&cols)
}

/// Thin singular value decomposition `m = u diag(s) v^dagger`, singular
/// values in decreasing order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v: CMat,
}

impl Svd {
    pub fn recompose(&self) -> CMat {
        &self.u * diag_real(&self.s) * self.v.adjoint()
    }
}

/// SVD with a verified reconstruction. nalgebra's complex bidiagonal SVD can
/// return an inaccurate factorization for some rank-deficient inputs, so the
/// result is checked and recomputed from the adjoint or, failing that, from
/// the eigendecomposition of `m^dagger m`.
pub fn svd(m: &CMat) -> Svd {
    let (r, k) = (m.nrows(), m.ncols());
    let n = r.min(k);
    if n == 0 {
        return Svd { u: CMat::zeros(r, 0), s: Vec::new(), v: CMat::zeros(k, 0) };
    }
    let tol = 1e-12 * (r.max(k) as f64) * max_abs_entry(m).max(1e-300);
    let accept = |cand: &Svd| {
        let n = cand.s.len();
        max_abs_entry(&(cand.recompose() - m)) <= tol
            && max_abs_entry(&(cand.u.adjoint() * &cand.u - identity(n))) <= 1e-10
            && max_abs_entry(&(cand.v.adjoint() * &cand.v - identity(n))) <= 1e-10
    };
    let direct = sorted_svd(m, false);
    if accept(&direct) {
        return direct;
    }
    let flipped = sorted_svd(&m.adjoint(), true);
    if accept(&flipped) {
        return flipped;
    }
    eigen_svd(m)
}

fn sorted_svd(m: &CMat, swap: bool) -> Svd {
    let d = m.clone().svd(true, true);
    let (u, vt) = (d.u.expect("u requested"), d.v_t.expect("v requested"));
    let mut order: Vec<usize> = (0..d.singular_values.len()).collect();
    order.sort_by(|&a, &b| d.singular_values[b].total_cmp(&d.singular_values[a]));
    let s = order.iter().map(|&i| d.singular_values[i]).collect();
    let u = CMat::from_columns(&order.iter().map(|&i| u.column(i).into_owned()).collect::<Vec<_>>());
    let v = CMat::from_columns(&order.iter().map(|&i| vt.row(i).adjoint()).collect::<Vec<_>>());
    if swap {
        Svd { u: v, s, v: u }
    } else {
        Svd { u, s, v }
    }
}

fn eigen_svd(m: &CMat) -> Svd {
    if m.nrows() < m.ncols() {
        let t = eigen_svd(&m.adjoint());
        return Svd { u: t.v, s: t.s, v: t.u };
    }
    let n = m.ncols();
    let (_, w) = eigh(&(m.adjoint() * m));
    let mut cols = Vec::new();
    let mut s = Vec::new();
    for i in 0..n {
        let mw = m * w.column(i);
        let nrm = mw.norm();
        if nrm <= 1e-300 {
            break;
        }
        let mut u = mw / c(nrm);
        for q in &cols {
            let q: &CVec = q;
            let proj = q.dotc(&u);
            u -= q * proj;
        }
        let un = u.norm();
        if un < 0.5 {
            break;
        }
        cols.push(u / c(un));
        s.push(nrm);
    }
    let found = cols.len();
    let u = extend_orthonormal(&if found == 0 { CMat::zeros(m.nrows(), 0) } else { CMat::from_columns(&cols) }, n);
    // Columns beyond `found` span the numerical null space.
    s.resize(n, 0.0);
    for (i, si) in s.iter_mut().enumerate().skip(found) {
        *si = (u.column(i).adjoint() * m * w.column(i))[(0, 0)].norm();
    }
    Svd { u, s, v: w }
}

/// Orthonormalizes the columns of `m` (modified Gram-Schmidt), dropping dependent ones.
pub fn orthonormal_columns(m: &CMat, tol: f64) -> CMat {
    let mut cols: Vec<CVec> = Vec::new();
    for j in 0..m.ncols() {
        let mut w = m.column(j).into_owned();
        for _ in 0..2 {
            for q in &cols {
                let proj = q.dotc(&w);
                w -= q * proj;
            }
        }
        let nrm = w.norm();
        if nrm > tol {
            cols.push(w / c(nrm));
        }
    }
    if cols.is_empty() {
        return CMat::zeros(m.nrows(), 0);
    }
    CMat::from_columns(&cols)
}

pub fn random_complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

pub fn random_ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| random_complex_normal(rng))
}

/// Haar-random unit vector.
pub fn random_unit_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CVec {
    let v = CVec::from_fn(d, |_, _| random_complex_normal(rng));
    let n = v.norm();
    v / c(n)
}

/// Haar-random unitary via QR of a Ginibre matrix with phase correction.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    let g = random_ginibre(d, d, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let z = r[(j, j)];
        let phase = if z.norm() > 0.0 { z / c(z.norm()) } else { c(1.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random density matrix of the given rank (induced Hilbert-Schmidt measure).
pub fn random_density<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> CMat {
    let g = random_ginibre(d, rank.max(1), rng);
    let m = &g * g.adjoint();
    let t = real_trace(&m);
    m / c(t)
}

/// Random isometry with `cols` orthonormal columns in dimension `rows`.
pub fn random_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    let u = random_unitary(rows, rng);
    u.columns(0, cols).into_owned()
}

/// Random probability vector from a flat Dirichlet.
pub fn random_probs<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..k)
        .map(|_| {
            let u: f64 = rng.random::<f64>();
            -(u.max(1e-300)).ln()
        })
        .collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

pub fn approx_eq_mat(a: &CMat, b: &CMat, tol: f64) -> bool {
    a.shape() == b.shape() && max_abs_entry(&(a - b)) <= tol
}

pub fn is_psd(m: &CMat, tol: f64) -> bool {
    min_eigenvalue(m) >= -tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn partial_trace_matches_index_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_density(6, 6, &mut rng);
        let dims = [3, 2];
        let got = partial_trace(&rho, &dims, &[1]).unwrap();
        for b1 in 0..2 {
            for b2 in 0..2 {
                let mut acc = C64::new(0.0, 0.0);
                for a in 0..3 {
                    acc += rho[(a * 2 + b1, a * 2 + b2)];
                }
                assert!((acc - got[(b1, b2)]).norm() < 1e-12);
            }
        }
        let ga = partial_trace(&rho, &dims, &[0]).unwrap();
        for a1 in 0..3 {
            for a2 in 0..3 {
                let mut acc = C64::new(0.0, 0.0);
                for b in 0..2 {
                    acc += rho[(a1 * 2 + b, a2 * 2 + b)];
                }
                assert!((acc - ga[(a1, a2)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn partial_trace_rejects_bad_indices() {
        let rho = identity(4) / c(4.0);
        assert!(partial_trace(&rho, &[2, 2], &[2]).is_err());
        assert!(partial_trace(&rho, &[2, 2], &[]).is_err());
        assert!(partial_trace(&rho, &[2, 2], &[0, 0]).is_err());
    }

    #[test]
    fn permutation_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v = random_unit_vector(12, &mut rng);
        let dims = [2, 3, 2];
        let (w, nd) = permute_vector(&v, &dims, &[2, 0, 1]).unwrap();
        assert_eq!(nd, vec![2, 2, 3]);
        // inverse of [2,0,1] is [1,2,0]
        let (back, _) = permute_vector(&w, &nd, &[1, 2, 0]).unwrap();
        assert!((back - v).norm() < 1e-14);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_unitary(5, &mut rng);
        assert!(approx_eq_mat(&(u.adjoint() * &u), &identity(5), 1e-12));
    }

    #[test]
    fn complete_basis_gives_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = random_isometry(6, 2, &mut rng);
        let u = complete_basis(&v);
        assert_eq!(u.ncols(), 6);
        assert!(approx_eq_mat(&(u.adjoint() * &u), &identity(6), 1e-12));
    }
}

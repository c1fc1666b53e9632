use serde::{Deserialize, Serialize};

use crate::linalg::{self, c, CMat, CVec, C64};
use crate::{arg_err, Error, Result};

pub const HERMITICITY_TOL: f64 = 1e-9;
pub const EIGEN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    Normalized,
    Subnormalized,
}

/// Positive semidefinite operator with trace in (0, 1].
#[derive(Debug, Clone)]
pub struct DensityOperator {
    matrix: CMat,
    dims: Vec<usize>,
    normalization: Normalization,
}

fn check_dims(dims: &[usize], n: usize) -> Result<()> {
    if dims.is_empty() || dims.contains(&0) {
        return arg_err("subsystem dimensions must be positive");
    }
    let p = linalg::product(dims);
    if p != n {
        return Err(Error::DimensionMismatch { expected: p, got: n });
    }
    Ok(())
}

impl DensityOperator {
    /// Validates and wraps `matrix`. The stored matrix is its Hermitian part.
    pub fn new(matrix: CMat, dims: Vec<usize>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return arg_err("density matrix must be square");
        }
        check_dims(&dims, matrix.nrows())?;
        let defect = linalg::hermiticity_defect(&matrix);
        if defect > HERMITICITY_TOL {
            return Err(Error::Invariant(format!("matrix not Hermitian (defect {defect:.3e})")));
        }
        let matrix = linalg::hermitian_part(&matrix);
        let lmin = linalg::min_eigenvalue(&matrix);
        if lmin < -EIGEN_TOL {
            return Err(Error::Invariant(format!("negative eigenvalue {lmin:.3e}")));
        }
        let tr = linalg::real_trace(&matrix);
        if tr <= 0.0 || tr > 1.0 + TRACE_TOL {
            return Err(Error::Invariant(format!("trace {tr} outside (0, 1]")));
        }
        let normalization =
            if (tr - 1.0).abs() <= TRACE_TOL { Normalization::Normalized } else { Normalization::Subnormalized };
        Ok(Self { matrix, dims, normalization })
    }

    /// Single-system state.
    pub fn from_matrix(matrix: CMat) -> Result<Self> {
        let n = matrix.nrows();
        Self::new(matrix, vec![n])
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self::new(linalg::identity(d) / c(d as f64), vec![d]).expect("valid state")
    }

    pub fn basis_state(d: usize, i: usize) -> Self {
        Self::new(linalg::projector(d, i), vec![d]).expect("valid state")
    }

    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(linalg::diag_real(probs), vec![probs.len()])
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn is_normalized(&self) -> bool {
        self.normalization == Normalization::Normalized
    }

    pub fn trace(&self) -> f64 {
        linalg::real_trace(&self.matrix)
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigvalsh(&self.matrix)
    }

    pub fn rank(&self) -> usize {
        linalg::rank(&self.matrix)
    }

    /// Same matrix, different subsystem split.
    pub fn with_dims(&self, dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims, self.dim())?;
        Ok(Self { matrix: self.matrix.clone(), dims, normalization: self.normalization })
    }

    pub fn tensor(&self, other: &DensityOperator) -> Result<Self> {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self::new(linalg::kron(&self.matrix, &other.matrix), dims)
    }

    pub fn tensor_power(&self, n: usize) -> Result<Self> {
        let mut out = self.clone();
        for _ in 1..n {
            out = out.tensor(self)?;
        }
        Ok(out)
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let m = linalg::partial_trace(&self.matrix, &self.dims, keep)?;
        let mut kept = keep.to_vec();
        kept.sort_unstable();
        let dims = kept.iter().map(|&i| self.dims[i]).collect();
        Self::new(m, dims)
    }

    /// Reorders subsystems: `order[k]` is the old subsystem placed at position `k`.
    pub fn permute(&self, order: &[usize]) -> Result<Self> {
        let (m, dims) = linalg::permute_operator(&self.matrix, &self.dims, order)?;
        Ok(Self { matrix: m, dims, normalization: self.normalization })
    }

    /// Renormalized copy (trace one).
    pub fn normalized(&self) -> Self {
        let t = self.trace();
        Self { matrix: &self.matrix / c(t), dims: self.dims.clone(), normalization: Normalization::Normalized }
    }

    /// `K rho K^dagger` for a contraction `K` (result must stay a valid state).
    pub fn conjugate(&self, k: &CMat, dims: Vec<usize>) -> Result<Self> {
        Self::new(k * &self.matrix * k.adjoint(), dims)
    }

    /// Purification on A (x) R with |R| equal to the rank.
    pub fn purify(&self) -> Result<PureState> {
        let tr = self.trace();
        if tr <= 0.0 {
            return arg_err("cannot purify a zero-trace operator");
        }
        let (vals, vecs) = linalg::eigh(&self.matrix);
        let r = vals.iter().filter(|&&v| v > linalg::SUPPORT_CUTOFF).count().max(1);
        let d = self.dim();
        let mut psi = CVec::zeros(d * r);
        for k in 0..r {
            let w = vals[k].max(0.0).sqrt();
            for a in 0..d {
                psi[a * r + k] = vecs[(a, k)] * c(w);
            }
        }
        let mut dims = self.dims.clone();
        dims.push(r);
        PureState::new(psi, dims)
    }
}

/// Vector state with norm in (0, 1].
#[derive(Debug, Clone)]
pub struct PureState {
    vector: CVec,
    dims: Vec<usize>,
}

impl PureState {
    pub fn new(vector: CVec, dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims, vector.len())?;
        let n = vector.norm();
        if n <= 0.0 || n > 1.0 + TRACE_TOL {
            return Err(Error::Invariant(format!("vector norm {n} outside (0, 1]")));
        }
        Ok(Self { vector, dims })
    }

    pub fn basis(d: usize, i: usize) -> Self {
        Self::new(linalg::basis_vector(d, i), vec![d]).expect("valid state")
    }

    /// (1/sqrt d) sum_i |ii>.
    pub fn maximally_entangled(d: usize) -> Self {
        let mut v = CVec::zeros(d * d);
        let a = c(1.0 / (d as f64).sqrt());
        for i in 0..d {
            v[i * d + i] = a;
        }
        Self::new(v, vec![d, d]).expect("valid state")
    }

    pub fn vector(&self) -> &CVec {
        &self.vector
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.vector.norm_squared()
    }

    pub fn to_density(&self) -> DensityOperator {
        DensityOperator::new(linalg::outer(&self.vector), self.dims.clone())
            .expect("outer product of a valid vector is a valid state")
    }

    pub fn tensor(&self, other: &PureState) -> Result<Self> {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self::new(linalg::kron_vec(&self.vector, &other.vector), dims)
    }

    pub fn permute(&self, order: &[usize]) -> Result<Self> {
        let (v, dims) = linalg::permute_vector(&self.vector, &self.dims, order)?;
        Ok(Self { vector: v, dims })
    }

    /// Reduced state on `keep`, computed directly from the amplitude matrix.
    pub fn reduced(&self, keep: &[usize]) -> Result<DensityOperator> {
        let mut kept = keep.to_vec();
        kept.sort_unstable();
        let rest: Vec<usize> = (0..self.dims.len()).filter(|i| !kept.contains(i)).collect();
        if rest.is_empty() {
            return self.permute(&kept).map(|p| p.to_density());
        }
        let mut order = kept.clone();
        order.extend_from_slice(&rest);
        let p = self.permute(&order)?;
        let dk: usize = kept.iter().map(|&i| self.dims[i]).product();
        let dr = self.dim() / dk;
        let m = amplitude_matrix(&p.vector, dk, dr);
        DensityOperator::new(&m * m.adjoint(), kept.iter().map(|&i| self.dims[i]).collect())
    }

    /// Overlap <self|other>.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        Ok(self.vector.dotc(&other.vector))
    }
}

/// Reshapes a vector on (first) (x) (second) into a `d1 x d2` amplitude matrix.
pub fn amplitude_matrix(v: &CVec, d1: usize, d2: usize) -> CMat {
    CMat::from_fn(d1, d2, |i, j| v[i * d2 + j])
}

pub fn vector_from_amplitudes(m: &CMat) -> CVec {
    let (d1, d2) = m.shape();
    CVec::from_fn(d1 * d2, |k, _| m[(k / d2, k % d2)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn rejects_invalid_matrices() {
        let mut m = linalg::identity(2) / c(2.0);
        m[(0, 1)] = C64::new(0.1, 0.0);
        assert!(DensityOperator::from_matrix(m).is_err());
        assert!(DensityOperator::from_matrix(linalg::identity(2)).is_err());
        assert!(DensityOperator::diagonal(&[1.2, -0.2]).is_err());
        assert!(DensityOperator::new(linalg::identity(4) / c(4.0), vec![3]).is_err());
    }

    #[test]
    fn subnormalized_flag() {
        let s = DensityOperator::diagonal(&[0.4, 0.2]).unwrap();
        assert_eq!(s.normalization(), Normalization::Subnormalized);
        assert!(s.normalized().is_normalized());
    }

    #[test]
    fn purify_round_trip() {
        let mut rng = rng_from_seed(5);
        let rho = DensityOperator::from_matrix(linalg::random_density(3, 3, &mut rng)).unwrap();
        let psi = rho.purify().unwrap();
        assert_eq!(psi.dims(), &[3, 3]);
        let back = psi.reduced(&[0]).unwrap();
        assert!(linalg::approx_eq_mat(back.matrix(), rho.matrix(), 1e-10));
    }

    #[test]
    fn purify_pure_and_mixed() {
        let p = DensityOperator::basis_state(2, 0).purify().unwrap();
        assert_eq!(p.dims(), &[2, 1]);
        assert!((p.vector()[0].norm() - 1.0).abs() < 1e-12);
        let m = DensityOperator::maximally_mixed(2).purify().unwrap();
        let ra = m.reduced(&[0]).unwrap();
        let rb = m.reduced(&[1]).unwrap();
        assert!(linalg::approx_eq_mat(ra.matrix(), &(linalg::identity(2) / c(2.0)), 1e-12));
        assert!(linalg::approx_eq_mat(rb.matrix(), &(linalg::identity(2) / c(2.0)), 1e-12));
    }

    #[test]
    fn bell_reduces_to_maximally_mixed() {
        let bell = PureState::maximally_entangled(2).to_density();
        let a = bell.partial_trace(&[0]).unwrap();
        assert!(linalg::approx_eq_mat(a.matrix(), &(linalg::identity(2) / c(2.0)), 1e-12));
    }

    #[test]
    fn product_partial_trace() {
        let mut rng = rng_from_seed(11);
        let a = DensityOperator::from_matrix(linalg::random_density(2, 2, &mut rng)).unwrap();
        let b = DensityOperator::from_matrix(linalg::random_density(3, 3, &mut rng)).unwrap();
        let ab = a.tensor(&b).unwrap();
        let ra = ab.partial_trace(&[0]).unwrap();
        assert!(linalg::approx_eq_mat(ra.matrix(), a.matrix(), 1e-12));
        assert!((ab.partial_trace(&[1]).unwrap().trace() - 1.0).abs() < 1e-12);
    }
}

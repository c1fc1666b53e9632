use rand::Rng;

use crate::linalg::{self, c, CMat, CVec};
use crate::qcore::state::amplitude_matrix;
use crate::qcore::{DensityOperator, PureState};
use crate::{arg_err, Error, Result};

/// `sum_x sqrt(p_x) |x>|x> (x) |psi_x>` on X_A (x) X_B (x) S (x) R, where S is a
/// side system held together with the copy register and R is the reference.
#[derive(Debug, Clone)]
pub struct ClassicallyCoherentState {
    probs: Vec<f64>,
    side_dim: usize,
    ref_dim: usize,
    vectors: Vec<CVec>,
}

impl ClassicallyCoherentState {
    pub fn new(probs: Vec<f64>, side_dim: usize, ref_dim: usize, vectors: Vec<CVec>) -> Result<Self> {
        let s = Self::new_subnormalized(probs, side_dim, ref_dim, vectors)?;
        if (s.weight() - 1.0).abs() > 1e-9 {
            return Err(Error::Invariant(format!("probabilities sum to {}", s.weight())));
        }
        Ok(s)
    }

    /// Like [`Self::new`] but only requires total weight in (0, 1].
    pub fn new_subnormalized(probs: Vec<f64>, side_dim: usize, ref_dim: usize, vectors: Vec<CVec>) -> Result<Self> {
        if probs.is_empty() || probs.len() != vectors.len() {
            return arg_err("need one reference vector per outcome");
        }
        if side_dim == 0 || ref_dim == 0 {
            return arg_err("side and reference dimensions must be positive");
        }
        if probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::Invariant("negative or NaN probability".into()));
        }
        let w: f64 = probs.iter().sum();
        if w <= 0.0 || w > 1.0 + 1e-9 {
            return Err(Error::Invariant(format!("total weight {w} outside (0, 1]")));
        }
        for (x, v) in vectors.iter().enumerate() {
            if v.len() != side_dim * ref_dim {
                return Err(Error::DimensionMismatch { expected: side_dim * ref_dim, got: v.len() });
            }
            if (v.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::Invariant(format!("vector {x} has norm {}", v.norm())));
            }
        }
        Ok(Self { probs, side_dim, ref_dim, vectors })
    }

    /// Same conditional vector for every outcome: X uncorrelated with S R.
    pub fn product(probs: Vec<f64>, side_dim: usize, ref_dim: usize, v: CVec) -> Result<Self> {
        let vectors = vec![v; probs.len()];
        Self::new(probs, side_dim, ref_dim, vectors)
    }

    /// Perfectly correlated with the reference: `|psi_x> = |x>_R`.
    pub fn correlated(probs: Vec<f64>) -> Result<Self> {
        let n = probs.len();
        let vectors = (0..n).map(|x| linalg::basis_vector(n, x)).collect();
        Self::new(probs, 1, n, vectors)
    }

    pub fn random<R: Rng + ?Sized>(n: usize, side_dim: usize, ref_dim: usize, rng: &mut R) -> Self {
        let probs = linalg::random_probs(n, rng);
        let vectors = (0..n).map(|_| linalg::random_unit_vector(side_dim * ref_dim, rng)).collect();
        Self::new(probs, side_dim, ref_dim, vectors).expect("valid random state")
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn vectors(&self) -> &[CVec] {
        &self.vectors
    }

    pub fn num_outcomes(&self) -> usize {
        self.probs.len()
    }

    pub fn side_dim(&self) -> usize {
        self.side_dim
    }

    pub fn ref_dim(&self) -> usize {
        self.ref_dim
    }

    pub fn weight(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Outcomes with probability above the support cutoff.
    pub fn support(&self) -> Vec<usize> {
        (0..self.probs.len()).filter(|&x| self.probs[x] > linalg::SUPPORT_CUTOFF).collect()
    }

    /// The pure state on `[X_A, X_B, S, R]`.
    pub fn to_pure(&self) -> PureState {
        let n = self.num_outcomes();
        let sr = self.side_dim * self.ref_dim;
        let mut v = CVec::zeros(n * n * sr);
        for x in 0..n {
            let a = c(self.probs[x].sqrt());
            let off = (x * n + x) * sr;
            for k in 0..sr {
                v[off + k] = self.vectors[x][k] * a;
            }
        }
        PureState::new(v, vec![n, n, self.side_dim, self.ref_dim]).expect("valid cc vector")
    }

    /// `rho_R^x = tr_S |psi_x><psi_x|`.
    pub fn conditional_ref(&self, x: usize) -> CMat {
        let m = amplitude_matrix(&self.vectors[x], self.side_dim, self.ref_dim);
        (m.adjoint() * &m).transpose()
    }

    /// `rho_SR^x` on side (x) reference.
    pub fn conditional_side_ref(&self, x: usize) -> CMat {
        linalg::outer(&self.vectors[x])
    }

    pub fn ref_marginal(&self) -> CMat {
        let mut out = CMat::zeros(self.ref_dim, self.ref_dim);
        for x in 0..self.num_outcomes() {
            out += self.conditional_ref(x) * c(self.probs[x]);
        }
        out
    }

    /// `rho_XR = sum_x p_x |x><x| (x) rho_R^x`.
    pub fn x_ref_state(&self) -> DensityOperator {
        let n = self.num_outcomes();
        let r = self.ref_dim;
        let mut m = CMat::zeros(n * r, n * r);
        for x in 0..n {
            let blk = self.conditional_ref(x) * c(self.probs[x]);
            m.view_mut((x * r, x * r), (r, r)).copy_from(&blk);
        }
        DensityOperator::new(m, vec![n, r]).expect("valid cq state")
    }

    pub fn x_marginal(&self) -> DensityOperator {
        DensityOperator::new(linalg::diag_real(&self.probs), vec![self.num_outcomes()]).expect("valid classical state")
    }

    /// Keeps the listed outcomes (in order) without renormalizing.
    pub fn restrict(&self, outcomes: &[usize]) -> Result<Self> {
        let probs = outcomes.iter().map(|&x| self.probs[x]).collect();
        let vectors = outcomes.iter().map(|&x| self.vectors[x].clone()).collect();
        Self::new_subnormalized(probs, self.side_dim, self.ref_dim, vectors)
    }

    pub fn normalized(&self) -> Self {
        let w = self.weight();
        Self {
            probs: self.probs.iter().map(|p| p / w).collect(),
            side_dim: self.side_dim,
            ref_dim: self.ref_dim,
            vectors: self.vectors.clone(),
        }
    }
}

use serde::Serialize;

use crate::entropies::Partition;
use crate::linalg::{self, CMat};
use crate::qcore::DensityOperator;
use crate::{Error, Result};

/// `H = -sum l log l` over the spectrum.
pub fn entropy_of_matrix(m: &CMat) -> f64 {
    linalg::eigvalsh(m).into_iter().map(linalg::eta).sum()
}

pub fn entropy(rho: &DensityOperator) -> f64 {
    entropy_of_matrix(rho.matrix())
}

/// Shannon entropy of a (possibly subnormalized) probability vector.
pub fn shannon(p: &[f64]) -> f64 {
    p.iter().copied().map(linalg::eta).sum()
}

/// `D(rho||sigma)` in bits; `+inf` when `supp(rho)` is not inside `supp(sigma)`.
pub fn relative_entropy(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), got: sigma.dim() });
    }
    let (sv, su) = linalg::eigh(sigma.matrix());
    let r = sv.iter().filter(|&&v| v > linalg::SUPPORT_CUTOFF).count();
    let basis = su.columns(0, r).into_owned();
    let perp = linalg::identity(rho.dim()) - &basis * basis.adjoint();
    let outside = linalg::real_trace(&(&perp * rho.matrix() * &perp));
    if outside > 1e-10 {
        return Ok(f64::INFINITY);
    }
    let log_sigma = linalg::apply_spectral(sigma.matrix(), |x| if x > linalg::SUPPORT_CUTOFF { x.log2() } else { 0.0 });
    let cross = (rho.matrix() * log_sigma).trace().re;
    Ok(-entropy(rho) - cross)
}

#[derive(Debug, Clone, Serialize)]
pub struct VonNeumannReport {
    pub h_a: f64,
    pub h_b: f64,
    pub h_ab: f64,
    pub h_a_given_b: f64,
    pub mutual_information: f64,
}

/// Entropies of a bipartite state in bits.
pub fn von_neumann_quantities(rho: &DensityOperator, partition: &Partition) -> Result<VonNeumannReport> {
    let (ab, da, db) = partition.arrange(rho)?;
    let h_ab = entropy(&ab);
    let ra = linalg::partial_trace(ab.matrix(), &[da, db], &[0])?;
    let rb = linalg::partial_trace(ab.matrix(), &[da, db], &[1])?;
    let h_a = entropy_of_matrix(&ra);
    let h_b = entropy_of_matrix(&rb);
    Ok(VonNeumannReport { h_a, h_b, h_ab, h_a_given_b: h_ab - h_b, mutual_information: h_a + h_b - h_ab })
}

/// `I(A:B)` of a two-subsystem state.
pub fn mutual_information(rho: &DensityOperator) -> Result<f64> {
    Ok(von_neumann_quantities(rho, &Partition::first_second())?.mutual_information)
}

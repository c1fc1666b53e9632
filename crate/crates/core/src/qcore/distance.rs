use crate::linalg::{self, CMat};
use crate::qcore::DensityOperator;
use crate::{Error, Result};

fn same_dim(a: &CMat, b: &CMat) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: b.nrows() });
    }
    Ok(())
}

/// `||sqrt(rho) sqrt(sigma)||_1` on raw matrices.
pub fn fidelity_matrices(rho: &CMat, sigma: &CMat) -> Result<f64> {
    same_dim(rho, sigma)?;
    let m = linalg::sqrt_psd(rho) * linalg::sqrt_psd(sigma);
    Ok(m.singular_values().iter().sum())
}

/// Generalized fidelity for subnormalized operators.
pub fn generalized_fidelity_matrices(rho: &CMat, sigma: &CMat) -> Result<f64> {
    let f = fidelity_matrices(rho, sigma)?;
    let tr = (1.0 - linalg::real_trace(rho)).max(0.0);
    let ts = (1.0 - linalg::real_trace(sigma)).max(0.0);
    Ok(f + (tr * ts).sqrt())
}

pub fn purified_distance_matrices(rho: &CMat, sigma: &CMat) -> Result<f64> {
    let f = generalized_fidelity_matrices(rho, sigma)?.min(1.0);
    Ok((1.0 - f * f).max(0.0).sqrt())
}

pub fn fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    fidelity_matrices(rho.matrix(), sigma.matrix())
}

pub fn generalized_fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    generalized_fidelity_matrices(rho.matrix(), sigma.matrix())
}

pub fn purified_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    purified_distance_matrices(rho.matrix(), sigma.matrix())
}

/// `||rho - sigma||_1` (no factor one half).
pub fn trace_norm_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    same_dim(rho.matrix(), sigma.matrix())?;
    Ok(linalg::trace_norm(&(rho.matrix() - sigma.matrix())))
}

/// Purified distance between a pure target `|t>` (unit norm) and a subnormalized state.
pub fn purified_distance_to_pure(target: &crate::CVec, omega: &CMat) -> f64 {
    let f2 = (target.adjoint() * omega * target)[(0, 0)].re.max(0.0);
    (1.0 - f2.min(1.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn random_state(d: usize, seed: u64) -> DensityOperator {
        let mut rng = rng_from_seed(seed);
        DensityOperator::from_matrix(linalg::random_density(d, d, &mut rng)).unwrap()
    }

    #[test]
    fn endpoint_values() {
        let z = DensityOperator::basis_state(2, 0);
        let o = DensityOperator::basis_state(2, 1);
        let mm = DensityOperator::maximally_mixed(2);
        assert!((fidelity(&z, &z).unwrap() - 1.0).abs() < 1e-12);
        assert!(fidelity(&z, &o).unwrap().abs() < 1e-12);
        assert!((fidelity(&mm, &z).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(purified_distance(&z, &z).unwrap() < 1e-6);
        assert!((purified_distance(&z, &o).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_errors() {
        assert!(fidelity(&DensityOperator::maximally_mixed(2), &DensityOperator::maximally_mixed(3)).is_err());
    }

    #[test]
    fn symmetric() {
        let a = random_state(3, 1);
        let b = random_state(3, 2);
        let f1 = fidelity(&a, &b).unwrap();
        let f2 = fidelity(&b, &a).unwrap();
        assert!((f1 - f2).abs() < 1e-9);
    }

    #[test]
    fn subnormalized_term() {
        let a = DensityOperator::diagonal(&[0.5, 0.0]).unwrap();
        let b = DensityOperator::diagonal(&[0.5, 0.0]).unwrap();
        // F = 0.5, correction sqrt(0.5 * 0.5)
        assert!((generalized_fidelity(&a, &b).unwrap() - 1.0).abs() < 1e-12);
    }
}

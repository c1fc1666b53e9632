//! Finite-n evaluators for the smooth-entropy equipartition bounds.

use serde::{Deserialize, Serialize};

use crate::{arg_err, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AepQuantity {
    /// `(1/n) I_max^eps(A:B)` of `rho^{(x) n}`; base value `I(A:B)`.
    MaxInformation,
    /// `(1/n) H_max^eps(A)` of `rho^{(x) n}`; base value `H(A)`.
    MaxEntropy,
}

fn dim_factor(dim_a: usize) -> f64 {
    2.0 + 0.5 * (dim_a as f64).log2()
}

/// `8 sqrt(13 - 4 log eps) (2 + log|A| / 2)`.
pub fn xi(eps: f64, dim_a: usize) -> f64 {
    8.0 * (13.0 - 4.0 * eps.log2()).sqrt() * dim_factor(dim_a)
}

/// `4 sqrt(1 - 2 log eps) (2 + log|A| / 2)`.
pub fn eta(eps: f64, dim_a: usize) -> f64 {
    4.0 * (1.0 - 2.0 * eps.log2()).sqrt() * dim_factor(dim_a)
}

/// Smallest admissible block length for `eps`.
pub fn min_block_length(eps: f64) -> f64 {
    2.0 * (1.0 - eps * eps)
}

/// Additive correction to the base value for `n` copies.
pub fn aep_correction(eps: f64, n: usize, dim_a: usize, quantity: AepQuantity) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return arg_err(format!("eps = {eps} must lie in (0, 1)"));
    }
    if n == 0 || (n as f64) < min_block_length(eps) {
        return arg_err(format!("n = {n} below the validity threshold {}", min_block_length(eps)));
    }
    let nf = n as f64;
    Ok(match quantity {
        AepQuantity::MaxInformation => xi(eps, dim_a) / nf.sqrt() - 2.0 / nf * (eps * eps / 24.0).log2(),
        AepQuantity::MaxEntropy => eta(eps, dim_a) / nf.sqrt(),
    })
}

/// Per-copy upper bound: `base` plus the finite-n correction.
pub fn aep_bound(eps: f64, n: usize, dim_a: usize, quantity: AepQuantity, base: f64) -> Result<f64> {
    Ok(base + aep_correction(eps, n, dim_a, quantity)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corrections_vanish() {
        let big = aep_correction(0.1, 1 << 40, 2, AepQuantity::MaxInformation).unwrap();
        assert!(big < 1e-4);
        let small = aep_correction(0.1, 10, 2, AepQuantity::MaxInformation).unwrap();
        assert!(small > big);
        assert!(aep_correction(0.1, 1, 2, AepQuantity::MaxEntropy).is_err());
        assert!(aep_correction(0.0, 10, 2, AepQuantity::MaxEntropy).is_err());
    }

    #[test]
    fn xi_at_half() {
        assert!((xi(0.5, 2) - 8.0 * 17f64.sqrt() * 2.5).abs() < 1e-12);
        assert!((eta(0.5, 4) - 4.0 * 3f64.sqrt() * 3.0).abs() < 1e-12);
    }
}

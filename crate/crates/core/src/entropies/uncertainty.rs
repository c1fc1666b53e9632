use serde::Serialize;

use crate::entropies::one_shot::{h_max_cond, h_min_cond};
use crate::entropies::Partition;
use crate::linalg::{self, CMat};
use crate::qcore::{DensityOperator, PureState};
use crate::{arg_err, Error, Result};

/// Tolerance on `H_min(A|B) + H_max(Z|R) <= log|A|`.
pub const UNCERTAINTY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct UncertaintyReport {
    pub h_min_a_given_b: f64,
    pub h_max_z_given_r: f64,
    pub lhs: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Outcome register of a measurement of A in the orthonormal basis given by
/// the columns of `basis`, together with R.
pub fn measured_state(psi: &PureState, basis: &CMat) -> Result<DensityOperator> {
    let dims = psi.dims();
    let (da, dr) = (dims[0], dims[2]);
    let ar = psi.reduced(&[0, 2])?;
    let mut out = CMat::zeros(da * dr, da * dr);
    for z in 0..da {
        let bz: CMat = basis.column(z).adjoint().into_owned().reshape_generic(nalgebra::Dyn(1), nalgebra::Dyn(da));
        let proj = linalg::kron(&bz, &linalg::identity(dr));
        let block = &proj * ar.matrix() * proj.adjoint();
        out.view_mut((z * dr, z * dr), (dr, dr)).copy_from(&block);
    }
    DensityOperator::new(linalg::hermitian_part(&out), vec![da, dr])
}

/// Evaluates `H_min(A|B) + H_max(Z_A|R)` on a pure state of `A (x) B (x) R`.
pub fn verify_uncertainty_relation(psi: &PureState, basis: &CMat) -> Result<UncertaintyReport> {
    let dims = psi.dims();
    if dims.len() != 3 {
        return arg_err("state must have exactly three subsystems A, B, R");
    }
    if (psi.norm_sqr() - 1.0).abs() > 1e-9 {
        return arg_err("state must be normalized");
    }
    let da = dims[0];
    if basis.nrows() != da || basis.ncols() != da {
        return Err(Error::DimensionMismatch { expected: da, got: basis.nrows() });
    }
    if linalg::max_abs_entry(&(basis.adjoint() * basis - linalg::identity(da))) > 1e-9 {
        return arg_err("measurement basis is not orthonormal");
    }
    let ab = psi.reduced(&[0, 1])?;
    let h_min = h_min_cond(&ab, &Partition::first_second())?.value;
    let zr = measured_state(psi, basis)?;
    let h_max = h_max_cond(&zr, &Partition::first_second())?.value;
    let bound = (da as f64).log2();
    let lhs = h_min + h_max;
    Ok(UncertaintyReport {
        h_min_a_given_b: h_min,
        h_max_z_given_r: h_max,
        lhs,
        bound,
        pass: lhs <= bound + UNCERTAINTY_TOL,
    })
}

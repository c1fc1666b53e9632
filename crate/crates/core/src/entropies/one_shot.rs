use serde::Serialize;

use crate::entropies::sdp::{self, SdpSolution};
use crate::entropies::Partition;
use crate::linalg::{self, c, CMat};
use crate::qcore::DensityOperator;
use crate::{arg_err, Error, Result};

/// PSD slack accepted when re-verifying a certificate.
pub const PSD_SLACK: f64 = 1e-8;
/// Log-domain gap accepted when re-verifying a certificate.
pub const LOG_GAP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Exact,
    UpperBound,
    LowerBound,
}

#[derive(Debug, Clone)]
pub enum Certificate {
    /// `2^lambda sigma >= rho`.
    DMax { lambda: f64 },
    /// `2^lambda (tau_A (x) sigma_B) >= rho_AB` with `tau = 1` for `H_min` and
    /// `tau = rho_A` for `I_max`, plus a dual point bounding the optimum from
    /// the other side.
    Conditioning { sigma: CMat, lambda: f64, dual_z: CMat, dual_lambda: f64 },
}

impl Certificate {
    pub fn log_gap(&self) -> f64 {
        match self {
            Certificate::DMax { .. } => 0.0,
            Certificate::Conditioning { lambda, dual_lambda, .. } => lambda - dual_lambda,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EntropyResult {
    /// Value in bits; may be `+inf` for `D_max` with a support violation.
    pub value: f64,
    pub bound_kind: BoundKind,
    pub certificate: Option<Certificate>,
}

impl EntropyResult {
    fn exact(value: f64, certificate: Option<Certificate>) -> Self {
        Self { value, bound_kind: BoundKind::Exact, certificate }
    }

    pub fn is_infinite(&self) -> bool {
        self.value.is_infinite()
    }
}

/// Outcome of re-checking a certificate against its state.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CertificateCheck {
    /// Smallest eigenvalue of the primal slack operator.
    pub psd_slack: f64,
    /// `log2(primal / dual)`; zero for closed-form certificates.
    pub log_gap: f64,
    /// `|value - value implied by the certificate|`.
    pub value_mismatch: f64,
}

impl CertificateCheck {
    pub fn passes(&self) -> bool {
        self.psd_slack >= -PSD_SLACK && self.log_gap <= LOG_GAP_TOL && self.value_mismatch <= LOG_GAP_TOL
    }
}

/// Basis of `supp(m)` and the restriction of `m` to it.
fn restrict_to_support(m: &CMat) -> (CMat, Vec<f64>) {
    let (vals, vecs) = linalg::eigh(m);
    let r = vals.iter().filter(|&&v| v > linalg::SUPPORT_CUTOFF).count();
    (vecs.columns(0, r).into_owned(), vals[..r].to_vec())
}

/// `D_max(rho||sigma)`; `+inf` when `supp(rho)` is not inside `supp(sigma)`.
pub fn d_max(rho: &DensityOperator, sigma: &DensityOperator) -> Result<EntropyResult> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), got: sigma.dim() });
    }
    Ok(d_max_matrices(rho.matrix(), sigma.matrix()))
}

pub fn d_max_matrices(rho: &CMat, sigma: &CMat) -> EntropyResult {
    let (basis, vals) = restrict_to_support(sigma);
    let perp = linalg::identity(rho.nrows()) - &basis * basis.adjoint();
    let outside = linalg::max_eigenvalue(&(&perp * rho * &perp));
    if outside > linalg::SUPPORT_CUTOFF || basis.ncols() == 0 {
        return EntropyResult { value: f64::INFINITY, bound_kind: BoundKind::Exact, certificate: None };
    }
    let rho_r = basis.adjoint() * rho * &basis;
    let w = linalg::diag_real(&vals.iter().map(|v| 1.0 / v.sqrt()).collect::<Vec<_>>());
    let lmax = linalg::max_eigenvalue(&(&w * rho_r * &w));
    if lmax <= 0.0 {
        return EntropyResult { value: f64::NEG_INFINITY, bound_kind: BoundKind::Exact, certificate: None };
    }
    let lambda = lmax.log2();
    EntropyResult::exact(lambda, Some(Certificate::DMax { lambda }))
}

pub fn verify_d_max(rho: &DensityOperator, sigma: &DensityOperator, result: &EntropyResult) -> CertificateCheck {
    match &result.certificate {
        Some(Certificate::DMax { lambda }) => {
            let slack = sigma.matrix() * c(2f64.powf(*lambda)) - rho.matrix();
            CertificateCheck {
                psd_slack: linalg::min_eigenvalue(&slack),
                log_gap: 0.0,
                value_mismatch: (lambda - result.value).abs(),
            }
        }
        _ => CertificateCheck { psd_slack: f64::NEG_INFINITY, log_gap: f64::INFINITY, value_mismatch: f64::INFINITY },
    }
}

fn conditioning_certificate(sol: &SdpSolution) -> Certificate {
    let primal = sol.primal;
    Certificate::Conditioning {
        sigma: &sol.y / c(primal),
        lambda: primal.log2(),
        dual_z: sol.dual_z.clone(),
        dual_lambda: sol.dual.log2(),
    }
}

/// `H_min(A|B)` from the barrier solver. The value is `-log tr Y` for a strictly
/// feasible `Y`, so it never exceeds the true value.
pub fn h_min_cond(rho: &DensityOperator, partition: &Partition) -> Result<EntropyResult> {
    let (ab, da, db) = partition.arrange(rho)?;
    if db == 1 {
        let l = linalg::max_eigenvalue(ab.matrix());
        let lambda = l.log2();
        let sigma = linalg::identity(1);
        return Ok(EntropyResult::exact(
            -lambda,
            Some(Certificate::Conditioning {
                sigma,
                lambda,
                dual_z: top_eigen_projector(ab.matrix()),
                dual_lambda: lambda,
            }),
        ));
    }
    let sol = sdp::solve(ab.matrix(), da, db, sdp::DEFAULT_REL_GAP)?;
    let cert = conditioning_certificate(&sol);
    Ok(EntropyResult::exact(-sol.primal.log2(), Some(cert)))
}

fn top_eigen_projector(m: &CMat) -> CMat {
    let (_, vecs) = linalg::eigh(m);
    let v = vecs.column(0).into_owned();
    linalg::outer(&v)
}

/// `-log ||rho_A||_inf`.
pub fn h_min(rho: &DensityOperator) -> f64 {
    -linalg::max_eigenvalue(rho.matrix()).log2()
}

/// Re-verifies an `H_min(A|B)` certificate.
pub fn verify_h_min(rho: &DensityOperator, partition: &Partition, result: &EntropyResult) -> Result<CertificateCheck> {
    let (ab, da, db) = partition.arrange(rho)?;
    let id_a = linalg::identity(da);
    Ok(check_conditioning(ab.matrix(), &id_a, da, db, -result.value, result))
}

fn check_conditioning(
    rho: &CMat,
    tau_a: &CMat,
    da: usize,
    db: usize,
    implied_lambda: f64,
    result: &EntropyResult,
) -> CertificateCheck {
    match &result.certificate {
        Some(Certificate::Conditioning { sigma, lambda, dual_z, .. }) => {
            let slack = linalg::kron(tau_a, sigma) * c(2f64.powf(*lambda)) - rho;
            let psd_slack = linalg::min_eigenvalue(&slack);
            // Re-derive the dual bound from Z itself.
            let (zmin, tres) = sdp::dual_residual(dual_z, da, db);
            let dual_value = (rho * dual_z).trace().re;
            let dual_ok = zmin >= -1e-10 && tres <= 1e-8 && dual_value > 0.0;
            let log_gap = if dual_ok { (lambda - dual_value.log2()).max(0.0) } else { f64::INFINITY };
            CertificateCheck { psd_slack, log_gap, value_mismatch: (lambda - implied_lambda).abs() }
        }
        _ => CertificateCheck { psd_slack: f64::NEG_INFINITY, log_gap: f64::INFINITY, value_mismatch: f64::INFINITY },
    }
}

/// Which side carries the optimized conditioning state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `I_max(A:B) = inf_sigma D_max(rho_AB || rho_A (x) sigma_B)`.
    #[default]
    AB,
    /// `I_max(B:A)`, optimizing over states on A.
    BA,
}

/// `rho_A^{-1/2}`-conjugated state on `supp(rho_A) (x) B` and the support map.
struct Whitened {
    k: CMat,
    ra: usize,
    /// `Lambda^{-1/2} P^dagger`: the whitening map on A.
    w: CMat,
}

fn whiten(ab: &CMat, da: usize, db: usize) -> Result<Whitened> {
    let rho_a = linalg::partial_trace(ab, &[da, db], &[0])?;
    let (basis, vals) = restrict_to_support(&rho_a);
    let ra = basis.ncols();
    if ra == 0 {
        return arg_err("zero operator has no max-information");
    }
    let w = linalg::diag_real(&vals.iter().map(|v| 1.0 / v.sqrt()).collect::<Vec<_>>()) * basis.adjoint();
    let wl = linalg::kron(&w, &linalg::identity(db));
    let k = &wl * ab * wl.adjoint();
    Ok(Whitened { k: linalg::hermitian_part(&k), ra, w })
}

/// `I_max(A:B)` (or `I_max(B:A)`) by the barrier solver on the whitened state.
pub fn i_max(rho: &DensityOperator, partition: &Partition, direction: Direction) -> Result<EntropyResult> {
    let p = match direction {
        Direction::AB => partition.clone(),
        Direction::BA => partition.swapped(),
    };
    let (ab, da, db) = p.arrange(rho)?;
    i_max_arranged(ab.matrix(), da, db)
}

/// `I_max(A:B)` of an operator already laid out as `A (x) B`.
pub fn i_max_arranged(ab: &CMat, da: usize, db: usize) -> Result<EntropyResult> {
    if db == 1 {
        // Only sigma = 1 is available and rho_AB = rho_A.
        return Ok(EntropyResult::exact(
            0.0,
            Some(Certificate::Conditioning {
                sigma: linalg::identity(1),
                lambda: 0.0,
                dual_z: linalg::support_projector(ab),
                dual_lambda: 0.0,
            }),
        ));
    }
    let wt = whiten(ab, da, db)?;
    let sol = sdp::solve(&wt.k, wt.ra, db, sdp::DEFAULT_REL_GAP)?;
    let primal = sol.primal;
    // Pull the dual point back to the original coordinates: tr[rho Z'] = tr[K Z].
    let wl = linalg::kron(&wt.w, &linalg::identity(db));
    let dual_z = wl.adjoint() * &sol.dual_z * &wl;
    let cert = Certificate::Conditioning {
        sigma: &sol.y / c(primal),
        lambda: primal.log2(),
        dual_z,
        dual_lambda: sol.dual.log2(),
    };
    Ok(EntropyResult::exact(primal.log2(), Some(cert)))
}

/// Re-verifies an `I_max(A:B)` certificate (direction as used to compute it).
pub fn verify_i_max(
    rho: &DensityOperator,
    partition: &Partition,
    direction: Direction,
    result: &EntropyResult,
) -> Result<CertificateCheck> {
    let p = match direction {
        Direction::AB => partition.clone(),
        Direction::BA => partition.swapped(),
    };
    let (ab, da, db) = p.arrange(rho)?;
    Ok(verify_i_max_arranged(ab.matrix(), da, db, result))
}

pub fn verify_i_max_arranged(ab: &CMat, da: usize, db: usize, result: &EntropyResult) -> CertificateCheck {
    let rho_a = linalg::partial_trace(ab, &[da, db], &[0]).expect("consistent dims");
    match &result.certificate {
        Some(Certificate::Conditioning { sigma, lambda, dual_z, .. }) => {
            let slack = linalg::kron(&rho_a, sigma) * c(2f64.powf(*lambda)) - ab;
            let psd_slack = linalg::min_eigenvalue(&slack);
            // Dual feasibility in original coordinates: Z >= 0 and
            // tr_B-side normalization tr_A[(rho_A^{1/2} (x) 1) Z (rho_A^{1/2} (x) 1)] = 1_B.
            let half = linalg::kron(&linalg::sqrt_psd(&rho_a), &linalg::identity(db));
            let zz = &half * dual_z * &half;
            let (zmin, tres) = if db == 1 {
                (linalg::min_eigenvalue(dual_z), 0.0)
            } else {
                let (m, r) = sdp::dual_residual(&zz, da, db);
                (m.min(linalg::min_eigenvalue(dual_z)), r)
            };
            let dual_value = (ab * dual_z).trace().re;
            let dual_ok = zmin >= -1e-10 && tres <= 1e-8 && dual_value > 0.0;
            let log_gap = if dual_ok { (lambda - dual_value.log2()).max(0.0) } else { f64::INFINITY };
            CertificateCheck { psd_slack, log_gap, value_mismatch: (lambda - result.value).abs() }
        }
        _ => CertificateCheck { psd_slack: f64::NEG_INFINITY, log_gap: f64::INFINITY, value_mismatch: f64::INFINITY },
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RenyiTriple {
    pub h0: f64,
    pub h_max: f64,
    pub h_r: f64,
}

/// `H_0 = log rank`, `H_max = 2 log tr sqrt(rho)`, `H_R = -log` of the smallest
/// eigenvalue on the support.
pub fn h0_hmax_hr(rho: &DensityOperator) -> Result<RenyiTriple> {
    let vals: Vec<f64> = rho.eigenvalues().into_iter().filter(|&v| v > linalg::SUPPORT_CUTOFF).collect();
    if vals.is_empty() {
        return arg_err("zero operator");
    }
    let h0 = (vals.len() as f64).log2();
    let h_max = 2.0 * vals.iter().map(|v| v.sqrt()).sum::<f64>().log2();
    let h_r = -vals.iter().cloned().fold(f64::INFINITY, f64::min).log2();
    Ok(RenyiTriple { h0, h_max, h_r })
}

pub fn h0(rho: &DensityOperator) -> f64 {
    (rho.rank().max(1) as f64).log2()
}

/// `H_max(A|B) = -H_min(A|C)` where C purifies `rho_AB`.
pub fn h_max_cond(rho: &DensityOperator, partition: &Partition) -> Result<EntropyResult> {
    let (ab, _, _) = partition.arrange(rho)?;
    let psi = ab.purify()?;
    let ac = psi.reduced(&[0, 2])?;
    let r = h_min_cond(&ac, &Partition::first_second())?;
    Ok(EntropyResult { value: -r.value, bound_kind: r.bound_kind, certificate: r.certificate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::PureState;
    use crate::rng::rng_from_seed;

    fn rand_state(dims: Vec<usize>, seed: u64) -> DensityOperator {
        let mut rng = rng_from_seed(seed);
        let d = dims.iter().product();
        DensityOperator::new(linalg::random_density(d, d, &mut rng), dims).unwrap()
    }

    #[test]
    fn d_max_cases() {
        let z = DensityOperator::basis_state(2, 0);
        let mm = DensityOperator::maximally_mixed(2);
        assert!((d_max(&z, &mm).unwrap().value - 1.0).abs() < 1e-12);
        assert!(d_max(&mm, &z).unwrap().is_infinite());
        let r = rand_state(vec![3], 1);
        assert!(d_max(&r, &r).unwrap().value.abs() < 1e-9);
        let s = rand_state(vec![3], 2);
        let res = d_max(&r, &s).unwrap();
        assert!(verify_d_max(&r, &s, &res).passes());
    }

    #[test]
    fn h_min_endpoints() {
        let mut rng = rng_from_seed(3);
        let sb = DensityOperator::from_matrix(linalg::random_density(2, 2, &mut rng)).unwrap();
        let prod = DensityOperator::maximally_mixed(3).tensor(&sb).unwrap();
        let p = Partition::first_second();
        assert!((h_min_cond(&prod, &p).unwrap().value - 3f64.log2()).abs() < 1e-8);
        let me = PureState::maximally_entangled(3).to_density();
        let r = h_min_cond(&me, &p).unwrap();
        assert!((r.value + 3f64.log2()).abs() < 1e-8);
        assert!(verify_h_min(&me, &p, &r).unwrap().passes());
        let unc = h_min_cond(&me, &Partition::new(vec![0], vec![])).unwrap();
        assert!((unc.value - 3f64.log2()).abs() < 1e-9);
    }

    #[test]
    fn i_max_endpoints() {
        let p = Partition::first_second();
        let prod = rand_state(vec![2], 5).tensor(&rand_state(vec![2], 6)).unwrap();
        let r = i_max(&prod, &p, Direction::AB).unwrap();
        assert!(r.value.abs() < 1e-8, "{}", r.value);
        let mut m = CMat::zeros(4, 4);
        m[(0, 0)] = c(0.5);
        m[(3, 3)] = c(0.5);
        let cc = DensityOperator::new(m, vec![2, 2]).unwrap();
        let r = i_max(&cc, &p, Direction::AB).unwrap();
        assert!((r.value - 1.0).abs() < 1e-8);
        assert!(verify_i_max(&cc, &p, Direction::AB, &r).unwrap().passes());
        let bell = PureState::maximally_entangled(2).to_density();
        assert!((i_max(&bell, &p, Direction::AB).unwrap().value - 2.0).abs() < 1e-8);
    }

    #[test]
    fn certificates_on_random_states() {
        let p = Partition::first_second();
        for s in 0..10 {
            let rho = rand_state(vec![2, 3], 100 + s);
            let h = h_min_cond(&rho, &p).unwrap();
            assert!(verify_h_min(&rho, &p, &h).unwrap().passes());
            for dir in [Direction::AB, Direction::BA] {
                let i = i_max(&rho, &p, dir).unwrap();
                let chk = verify_i_max(&rho, &p, dir, &i).unwrap();
                assert!(chk.passes(), "{chk:?}");
            }
        }
    }

    #[test]
    fn renyi_triple() {
        let t = h0_hmax_hr(&DensityOperator::maximally_mixed(4)).unwrap();
        assert!((t.h0 - 2.0).abs() < 1e-12 && (t.h_max - 2.0).abs() < 1e-9 && (t.h_r - 2.0).abs() < 1e-9);
        let t = h0_hmax_hr(&DensityOperator::basis_state(3, 1)).unwrap();
        assert!(t.h0.abs() < 1e-12 && t.h_max.abs() < 1e-12 && t.h_r.abs() < 1e-12);
    }

    #[test]
    fn h_max_duality_endpoints() {
        let bell = PureState::maximally_entangled(2).to_density();
        let r = h_max_cond(&bell, &Partition::first_second()).unwrap();
        assert!((r.value + 1.0).abs() < 1e-8);
        let prod = PureState::basis(2, 0).tensor(&PureState::maximally_entangled(2)).unwrap().to_density();
        let r = h_max_cond(&prod, &Partition::first_second()).unwrap();
        assert!(r.value.abs() < 1e-8);
    }
}

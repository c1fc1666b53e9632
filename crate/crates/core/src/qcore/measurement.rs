use rand::Rng;

use crate::linalg::{self, c, CMat};
use crate::qcore::state::amplitude_matrix;
use crate::qcore::{DensityOperator, PureState};
use crate::{arg_err, Error, Result};

pub const COMPLETENESS_TOL: f64 = 1e-9;
pub const ISOMETRY_TOL: f64 = 1e-9;

/// A quantum instrument: per outcome a list of Kraus operators from the input
/// system to a common post-measurement system.
#[derive(Debug, Clone)]
pub struct Measurement {
    outcomes: Vec<String>,
    kraus: Vec<Vec<CMat>>,
    input_dim: usize,
    output_dim: usize,
}

impl Measurement {
    pub fn new(outcomes: Vec<String>, kraus: Vec<Vec<CMat>>) -> Result<Self> {
        if outcomes.is_empty() || outcomes.len() != kraus.len() {
            return arg_err("need one nonempty Kraus list per outcome label");
        }
        let first = kraus
            .iter()
            .flat_map(|k| k.first())
            .next()
            .ok_or_else(|| Error::Argument("measurement has no Kraus operators".into()))?;
        let (output_dim, input_dim) = first.shape();
        for (x, ks) in kraus.iter().enumerate() {
            if ks.is_empty() {
                return arg_err(format!("outcome {} has no Kraus operators", outcomes[x]));
            }
            for k in ks {
                if k.shape() != (output_dim, input_dim) {
                    return arg_err(format!(
                        "Kraus operator of outcome {} has shape {:?}, expected {:?}",
                        outcomes[x],
                        k.shape(),
                        (output_dim, input_dim)
                    ));
                }
            }
        }
        let m = Self { outcomes, kraus, input_dim, output_dim };
        let defect = m.completeness_defect();
        if defect > COMPLETENESS_TOL {
            return Err(Error::Invariant(format!("Kraus operators not trace preserving (defect {defect:.3e})")));
        }
        Ok(m)
    }

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|x| x.to_string()).collect()
    }

    /// Destructive realization of a POVM: Kraus operators `sqrt(l_k) <v_k|` with
    /// a one-dimensional post-measurement system.
    pub fn from_povm(elements: &[CMat]) -> Result<Self> {
        Self::from_povm_labeled(Self::labels(elements.len()), elements)
    }

    pub fn from_povm_labeled(outcomes: Vec<String>, elements: &[CMat]) -> Result<Self> {
        if elements.is_empty() {
            return arg_err("POVM has no elements");
        }
        let d = elements[0].nrows();
        let mut kraus = Vec::with_capacity(elements.len());
        for e in elements {
            if e.shape() != (d, d) {
                return arg_err("POVM elements must be square and of equal size");
            }
            if linalg::min_eigenvalue(e) < -1e-10 {
                return Err(Error::Invariant("POVM element is not positive".into()));
            }
            let (vals, vecs) = linalg::eigh(e);
            let mut ks: Vec<CMat> = vals
                .iter()
                .enumerate()
                .filter(|(_, &l)| l > linalg::SUPPORT_CUTOFF)
                .map(|(k, &l)| {
                    let row = vecs.column(k).adjoint() * c(l.sqrt());
                    CMat::from_row_slice(1, d, row.as_slice())
                })
                .collect();
            if ks.is_empty() {
                ks.push(CMat::zeros(1, d));
            }
            kraus.push(ks);
        }
        Self::new(outcomes, kraus)
    }

    /// Lueders instrument with Kraus operator `sqrt(Lambda_x)` per outcome.
    pub fn luders(elements: &[CMat]) -> Result<Self> {
        let kraus = elements.iter().map(|e| vec![linalg::sqrt_psd(e)]).collect();
        Self::new(Self::labels(elements.len()), kraus)
    }

    /// Rank-one projective measurement in the computational basis, destructive.
    pub fn computational(d: usize) -> Self {
        let kraus = (0..d).map(|x| vec![linalg::bra(d, x)]).collect();
        Self::new(Self::labels(d), kraus).expect("valid measurement")
    }

    /// Single-outcome measurement that discards the system.
    pub fn trivial(d: usize) -> Self {
        let ks = (0..d).map(|k| linalg::bra(d, k)).collect();
        Self::new(vec!["0".into()], vec![ks]).expect("valid measurement")
    }

    /// Symmetric three-outcome POVM on a qubit with elements `(2/3)|t_k><t_k|`.
    pub fn trine() -> Self {
        let elements: Vec<CMat> = (0..3)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
                let v = crate::CVec::from_vec(vec![c((th / 2.0).cos()), c((th / 2.0).sin())]);
                linalg::outer(&v) * c(2.0 / 3.0)
            })
            .collect();
        Self::from_povm(&elements).expect("valid trine")
    }

    /// Random POVM with `k` elements `W^{-1/2} G_x^dagger G_x W^{-1/2}`, each
    /// `G_x` a `rank x d` Ginibre matrix. `rank` is raised to `ceil(d / k)`,
    /// the smallest value for which `k` elements can sum to the identity.
    pub fn random_povm_elements<R: Rng + ?Sized>(d: usize, k: usize, rank: usize, rng: &mut R) -> Vec<CMat> {
        let rank = rank.max(d.div_ceil(k.max(1)));
        let raw: Vec<CMat> = (0..k)
            .map(|_| {
                let g = linalg::random_ginibre(rank, d, rng);
                g.adjoint() * g
            })
            .collect();
        let total = raw.iter().fold(CMat::zeros(d, d), |acc, e| acc + e);
        let w = linalg::inv_sqrt_on_support(&total);
        raw.iter().map(|e| linalg::hermitian_part(&(&w * e * &w))).collect()
    }

    /// Random POVM realized destructively.
    pub fn random_povm<R: Rng + ?Sized>(d: usize, k: usize, rank: usize, rng: &mut R) -> Self {
        Self::from_povm(&Self::random_povm_elements(d, k, rank, rng)).expect("valid random POVM")
    }

    /// Random efficient instrument on `d` dimensions: Kraus `U_x sqrt(Lambda_x)`.
    pub fn random_efficient<R: Rng + ?Sized>(d: usize, k: usize, rng: &mut R) -> Self {
        let kraus = Self::random_povm_elements(d, k, d, rng)
            .iter()
            .map(|e| vec![linalg::random_unitary(d, rng) * linalg::sqrt_psd(e)])
            .collect();
        Self::new(Self::labels(k), kraus).expect("valid random instrument")
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn num_outcomes(&self) -> usize {
        self.outcomes.len()
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn kraus(&self) -> &[Vec<CMat>] {
        &self.kraus
    }

    pub fn max_kraus_count(&self) -> usize {
        self.kraus.iter().map(|k| k.len()).max().unwrap_or(1)
    }

    /// One Kraus operator per outcome.
    pub fn is_efficient(&self) -> bool {
        self.kraus.iter().all(|k| k.len() == 1)
    }

    /// POVM elements `sum_s K_{x,s}^dagger K_{x,s}`.
    pub fn povm(&self) -> Vec<CMat> {
        self.kraus
            .iter()
            .map(|ks| {
                let mut e = CMat::zeros(self.input_dim, self.input_dim);
                for k in ks {
                    e += k.adjoint() * k;
                }
                e
            })
            .collect()
    }

    pub fn completeness_defect(&self) -> f64 {
        let mut total = CMat::zeros(self.input_dim, self.input_dim);
        for e in self.povm() {
            total += e;
        }
        linalg::max_abs_entry(&(total - linalg::identity(self.input_dim)))
    }

    /// Outcome probabilities on `rho`.
    pub fn probabilities(&self, rho: &CMat) -> Vec<f64> {
        self.povm().iter().map(|e| (e * rho).trace().re.max(0.0)).collect()
    }

    /// Unnormalized post-measurement operators `sum_s K rho K^dagger` per outcome.
    pub fn post_measurement(&self, rho: &CMat) -> Vec<CMat> {
        self.kraus
            .iter()
            .map(|ks| {
                let mut out = CMat::zeros(self.output_dim, self.output_dim);
                for k in ks {
                    out += k * rho * k.adjoint();
                }
                out
            })
            .collect()
    }

    /// Kraus operators of the quantum-classical channel `rho -> sum_x tr[Lambda_x rho] |x><x|`.
    pub fn outcome_channel_kraus(&self) -> Vec<CMat> {
        let nx = self.num_outcomes();
        let mut out = Vec::new();
        for (x, ks) in self.kraus.iter().enumerate() {
            for k in ks {
                for o in 0..self.output_dim {
                    let row = k.row(o).into_owned();
                    let mut m = CMat::zeros(nx, self.input_dim);
                    m.set_row(x, &row);
                    out.push(m);
                }
            }
        }
        out
    }
}

/// Isometry `V` with `V^dagger V = 1`.
#[derive(Debug, Clone)]
pub struct Isometry {
    matrix: CMat,
    out_dims: Vec<usize>,
}

impl Isometry {
    pub fn new(matrix: CMat, out_dims: Vec<usize>) -> Result<Self> {
        if linalg::product(&out_dims) != matrix.nrows() {
            return Err(Error::DimensionMismatch { expected: linalg::product(&out_dims), got: matrix.nrows() });
        }
        let defect = linalg::max_abs_entry(&(matrix.adjoint() * &matrix - linalg::identity(matrix.ncols())));
        if defect > ISOMETRY_TOL {
            return Err(Error::Invariant(format!("not an isometry (defect {defect:.3e})")));
        }
        Ok(Self { matrix, out_dims })
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn in_dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn out_dims(&self) -> &[usize] {
        &self.out_dims
    }

    pub fn defect(&self) -> f64 {
        linalg::max_abs_entry(&(self.matrix.adjoint() * &self.matrix - linalg::identity(self.in_dim())))
    }
}

/// `omega_XR = sum_x |x><x| (x) tr_out[(M_x (x) id)(psi)]` for `psi` on A (x) R,
/// where A is the first subsystem of `input`.
pub fn apply_measurement(m: &Measurement, input: &PureState) -> Result<DensityOperator> {
    let da = input.dims()[0];
    if da != m.input_dim() {
        return Err(Error::DimensionMismatch { expected: m.input_dim(), got: da });
    }
    let dr = input.dim() / da;
    let psi = amplitude_matrix(input.vector(), da, dr);
    let nx = m.num_outcomes();
    let mut omega = CMat::zeros(nx * dr, nx * dr);
    for (x, ks) in m.kraus().iter().enumerate() {
        let mut block = CMat::zeros(dr, dr);
        for k in ks {
            let kp = k * &psi;
            block += (kp.adjoint() * &kp).transpose();
        }
        omega.view_mut((x * dr, x * dr), (dr, dr)).copy_from(&block);
    }
    DensityOperator::new(omega, vec![nx, dr])
}

/// Stinespring isometry `A -> E (x) X_A (x) X_A'` with `E = output (x) Kraus index`.
pub fn stinespring_dilate(m: &Measurement) -> Isometry {
    let dout = m.output_dim();
    let smax = m.max_kraus_count();
    let de = dout * smax;
    let nx = m.num_outcomes();
    let mut u = CMat::zeros(de * nx * nx, m.input_dim());
    for (x, ks) in m.kraus().iter().enumerate() {
        for (s, k) in ks.iter().enumerate() {
            for o in 0..dout {
                let e = o * smax + s;
                let row = (e * nx + x) * nx + x;
                for a in 0..m.input_dim() {
                    u[(row, a)] += k[(o, a)];
                }
            }
        }
    }
    Isometry::new(u, vec![de, nx, nx]).expect("complete Kraus family dilates to an isometry")
}

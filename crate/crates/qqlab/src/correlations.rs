//! Correlation quantifiers of the mixed polarization state and of the rival
//! two-qubit pure-state model, plus the Wootters concurrence used as a
//! brute-force oracle.

use crate::core_state::QuquartParams;
use crate::density_ops::{
    mps_of, reduce_one_photon, stokes_and_polarization, von_neumann_entropy,
    DensityError, MpsDensity,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// States with `|B-|^2` within this margin of 0 or 1 are treated as pure
/// after frequency averaging.
const PURE_TOL: f64 = 1e-9;
/// `|C1|`, `|C4|` below this count as zero for the Bell-mixture closed form.
const ZERO_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum CorrelationError {
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error("optimizer did not converge; best bound {best_bound}")]
    OptimizerNotConverged { best_bound: f64 },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

/// How the relative entropy was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SRelMethod {
    ClosedFormBellMixture,
    NumericMinimization,
    ExactPure,
}

/// All correlation quantifiers for one state, both models side by side.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub k_bar: f64,
    pub c_bar: f64,
    pub s_rel: f64,
    pub mutual_info: f64,
    pub c_cl: f64,
    pub c_cl_from_k: f64,
    pub p_bar: f64,
    pub k_2qb: f64,
    pub c_2qb: f64,
    pub s_rel_method: SRelMethod,
}

/// Binary entropy in bits with clamped argument.
pub fn binary_entropy(p: f64) -> f64 {
    if !(f64::EPSILON..=1.0 - f64::EPSILON).contains(&p) {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Schmidt parameter of the mixed polarization state:
/// `K = 2 / (1 + (1 - |B-|^2)^2 - |2 C1 C4 - B+^2|^2)`.
pub fn schmidt_k_mps(q: &QuquartParams) -> f64 {
    let b2 = q.b_minus.norm_sqr();
    let cross = (q.c1 * q.c4 * 2.0 - q.b_plus * q.b_plus).norm_sqr();
    2.0 / (1.0 + (1.0 - b2) * (1.0 - b2) - cross)
}

/// Concurrence of the mixed polarization state:
/// `C = | |2 C1 C4 - B+^2| - |B-|^2 |`.
pub fn concurrence_mps(q: &QuquartParams) -> f64 {
    let cross = (q.c1 * q.c4 * 2.0 - q.b_plus * q.b_plus).norm();
    (cross - q.b_minus.norm_sqr()).abs()
}

/// Hermitian square root via eigendecomposition. Eigenvalues within
/// rounding noise of zero are flushed to exactly zero so the square root
/// does not turn O(eps) errors into O(sqrt(eps)) ones.
fn hermitian_sqrt(m: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>, CorrelationError> {
    let eig = nalgebra::SymmetricEigen::try_new(m.clone(), f64::EPSILON * 16.0, 500)
        .ok_or_else(|| CorrelationError::NumericalFailure("eigensolver stalled".into()))?;
    let v = &eig.eigenvectors;
    let scale = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let d = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        if i == j {
            let lambda = eig.eigenvalues[i];
            let root = if lambda < scale * 1e-13 { 0.0 } else { lambda.sqrt() };
            Complex64::new(root, 0.0)
        } else {
            Complex64::default()
        }
    });
    Ok(v * d * v.adjoint())
}

/// Brute-force Wootters concurrence of a two-qubit density matrix.
///
/// Works in the product basis: the concurrence is
/// `max(0, l1 - l2 - l3 - l4)` where `l_i` sort the square roots of the
/// eigenvalues of `rho (sy x sy) rho* (sy x sy)`. Those roots are computed
/// here as the singular values of `A = sqrt(rho) (sy x sy) sqrt(rho)^T`
/// (since `A A^dag = sqrt(rho) (sy x sy) rho^T (sy x sy) sqrt(rho)`),
/// which keeps the near-zero roots at full absolute accuracy.
pub fn wootters_concurrence(rho_bar: &MpsDensity) -> Result<f64, CorrelationError> {
    let rho = rho_bar.to_product_basis();
    // sigma_y (x) sigma_y in {HH, HV, VH, VV} order: antidiag(-1, 1, 1, -1)
    let mut yy = DMatrix::<Complex64>::zeros(4, 4);
    yy[(0, 3)] = Complex64::new(-1.0, 0.0);
    yy[(1, 2)] = Complex64::new(1.0, 0.0);
    yy[(2, 1)] = Complex64::new(1.0, 0.0);
    yy[(3, 0)] = Complex64::new(-1.0, 0.0);
    let root = hermitian_sqrt(&rho)?;
    let a = &root * &yy * root.transpose();
    let svd = nalgebra::SVD::try_new(a, false, false, f64::EPSILON * 16.0, 500)
        .ok_or_else(|| CorrelationError::NumericalFailure("svd stalled".into()))?;
    let mut lambdas: Vec<f64> = svd.singular_values.iter().cloned().collect();
    lambdas.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0))
}

/// Relative entropy of entanglement of the MPS, in bits, using a fixed
/// internal seed for the numeric fallback. See [`relative_entropy_seeded`].
pub fn relative_entropy(q: &QuquartParams) -> Result<(f64, SRelMethod), CorrelationError> {
    relative_entropy_seeded(q, 0x5eed_0001)
}

/// Relative entropy of entanglement of the MPS.
///
/// Three regimes:
/// - `B- = 0` or `|B-| = 1`: the averaged state stays pure; returns the
///   pure-state entanglement entropy matching the concurrence,
///   `h((1 + sqrt(1 - C^2))/2)`.
/// - `C1 = C4 = 0`: Bell mixture `diag(|B+|^2, |B-|^2)` on Psi±; closed
///   form `1 - h(p_max)` for `p_max > 1/2`, else 0.
/// - otherwise: numeric minimization over separable mixtures, seeded for
///   reproducibility.
pub fn relative_entropy_seeded(
    q: &QuquartParams,
    seed: u64,
) -> Result<(f64, SRelMethod), CorrelationError> {
    let b2 = q.b_minus.norm_sqr();
    let c = concurrence_mps(q);
    if b2 < PURE_TOL || b2 > 1.0 - PURE_TOL {
        let lambda = (1.0 + (1.0 - c * c).max(0.0).sqrt()) / 2.0;
        return Ok((binary_entropy(lambda), SRelMethod::ExactPure));
    }
    if q.c1.norm() < ZERO_TOL && q.c4.norm() < ZERO_TOL {
        let p_max = q.b_plus.norm_sqr().max(b2);
        let s = if p_max > 0.5 {
            1.0 - binary_entropy(p_max)
        } else {
            0.0
        };
        return Ok((s, SRelMethod::ClosedFormBellMixture));
    }
    let rho = mps_of(q).to_product_basis();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = crate::sep_min::minimize_relative_entropy(&rho, &mut rng)
        .map_err(|e| CorrelationError::OptimizerNotConverged {
            best_bound: e.best_bound,
        })?;
    Ok((s, SRelMethod::NumericMinimization))
}

/// `(C_cl, C_cl-from-K, I)`: classical correlations as `I - S_rel`, the
/// Schmidt-parameter form `sqrt(2 (1 - 1/K))`, and the von Neumann mutual
/// information `I = 2 S(rho_r) - S(rho)`.
pub fn classical_correlations(q: &QuquartParams) -> Result<(f64, f64, f64), CorrelationError> {
    let mps = mps_of(q);
    let reduced = reduce_one_photon(&mps);
    let mutual_info = 2.0 * von_neumann_entropy(&reduced.0)? - von_neumann_entropy(&mps.0)?;
    let (s_rel, _) = relative_entropy(q)?;
    let c_cl = mutual_info - s_rel;
    let c_cl_from_k = (2.0 * (1.0 - 1.0 / schmidt_k_mps(q))).max(0.0).sqrt();
    Ok((c_cl, c_cl_from_k, mutual_info))
}

/// Schmidt parameter and concurrence of the two-qubit pure-state model:
/// `C = |2 C1 C4 - B+^2 + B-^2|`, `K = 2 / (2 - C^2)`.
pub fn two_qubit_model_metrics(q: &QuquartParams) -> (f64, f64) {
    let c = (q.c1 * q.c4 * 2.0 - q.b_plus * q.b_plus + q.b_minus * q.b_minus).norm();
    (2.0 / (2.0 - c * c), c)
}

/// Builds the complete comparison report for one state.
pub fn correlation_report(q: &QuquartParams) -> Result<CorrelationReport, CorrelationError> {
    let (s_rel, s_rel_method) = relative_entropy(q)?;
    let (c_cl, c_cl_from_k, mutual_info) = classical_correlations(q)?;
    let reduced = reduce_one_photon(&mps_of(q));
    let (_, p_bar) = stokes_and_polarization(&reduced);
    let (k_2qb, c_2qb) = two_qubit_model_metrics(q);
    Ok(CorrelationReport {
        k_bar: schmidt_k_mps(q),
        c_bar: concurrence_mps(q),
        s_rel,
        mutual_info,
        c_cl,
        c_cl_from_k,
        p_bar,
        k_2qb,
        c_2qb,
        s_rel_method,
    })
}

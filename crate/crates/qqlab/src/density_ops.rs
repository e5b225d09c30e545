//! Density matrices of the ququart and its frequency-averaged reductions:
//! the pure 16x16 state, the 4x4 mixed polarization state (MPS), the
//! one-photon 2x2 reduction, Stokes parameters, and von Neumann entropy.

use crate::amplitude::FRAC_1_SQRT_2;
use crate::core_state::{PolFreqWaveFunction, QuquartParams};
use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DensityError {
    #[error("trace deviates from 1: {trace}")]
    NotTraceOne { trace: f64 },
    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue}")]
    NotPsd { min_eigenvalue: f64 },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

/// Pure-state 16x16 density matrix, rows/cols indexed by
/// `(sigma1, omega1, sigma2, omega2)` in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix16(pub DMatrix<Complex64>);

/// Mixed polarization state: 4x4 Hermitian matrix in the ordered basis
/// {Psi_HH, Psi+, Psi_VV, Psi-}.
#[derive(Debug, Clone, PartialEq)]
pub struct MpsDensity(pub DMatrix<Complex64>);

/// One-photon 2x2 reduced density matrix in the {H, V} basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedDensity2(pub DMatrix<Complex64>);

/// Stokes vector of a one-photon polarization state.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StokesVector {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl StokesVector {
    pub fn length(&self) -> f64 {
        (self.s1 * self.s1 + self.s2 * self.s2 + self.s3 * self.s3).sqrt()
    }
}

/// Unitary taking Bell-basis coordinates to product-basis coordinates:
/// columns are {Psi_HH, Psi+, Psi_VV, Psi-} expressed in {HH, HV, VH, VV}.
pub fn bell_basis_unitary() -> DMatrix<Complex64> {
    let r = FRAC_1_SQRT_2;
    let rows: [[f64; 4]; 4] = [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, r, 0.0, r],
        [0.0, r, 0.0, -r],
        [0.0, 0.0, 1.0, 0.0],
    ];
    DMatrix::from_fn(4, 4, |i, j| Complex64::new(rows[i][j], 0.0))
}

fn trace(m: &DMatrix<Complex64>) -> Complex64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

/// Max absolute deviation from Hermiticity.
pub fn hermitian_defect(m: &DMatrix<Complex64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Real eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<f64>, DensityError> {
    let eig = nalgebra::SymmetricEigen::try_new(m.clone(), f64::EPSILON * 16.0, 500)
        .ok_or_else(|| DensityError::NumericalFailure("eigensolver did not converge".into()))?;
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(vals)
}

/// `rho = psi psi^dagger` of the two-boson wave function.
pub fn full_density(psi: &PolFreqWaveFunction) -> DensityMatrix16 {
    let v = psi.as_slice();
    DensityMatrix16(DMatrix::from_fn(16, 16, |i, j| v[i] * v[j].conj()))
}

/// Partial trace of the 16x16 matrix over both frequency indices,
/// re-expressed in the Bell-type basis {Psi_HH, Psi+, Psi_VV, Psi-}.
pub fn trace_out_frequency(rho: &DensityMatrix16) -> Result<MpsDensity, DensityError> {
    let t = trace(&rho.0);
    if (t.re - 1.0).abs() > 1e-9 || t.im.abs() > 1e-9 {
        return Err(DensityError::NotTraceOne { trace: t.re });
    }
    // product polarization basis: (sigma1, sigma2) row-major = {HH, HV, VH, VV}
    let mut pol = DMatrix::<Complex64>::zeros(4, 4);
    let idx = |s: usize, w: usize, s2: usize, w2: usize| ((s * 2 + w) * 2 + s2) * 2 + w2;
    for s1 in 0..2 {
        for s2 in 0..2 {
            for t1 in 0..2 {
                for t2 in 0..2 {
                    let mut acc = Complex64::default();
                    for w1 in 0..2 {
                        for w2 in 0..2 {
                            acc += rho.0[(idx(s1, w1, s2, w2), idx(t1, w1, t2, w2))];
                        }
                    }
                    pol[(s1 * 2 + s2, t1 * 2 + t2)] = acc;
                }
            }
        }
    }
    let u = bell_basis_unitary();
    Ok(MpsDensity(u.adjoint() * pol * u))
}

/// Closed-form MPS density built directly from the ququart amplitudes:
/// qutrit block `(C1, B+, C4) (C1, B+, C4)^dagger` plus `|B-|^2` at (4,4).
pub fn mps_from_params(q: &QuquartParams) -> MpsDensity {
    let v = [q.c1, q.b_plus, q.c4];
    let mut m = DMatrix::<Complex64>::zeros(4, 4);
    for i in 0..3 {
        for j in 0..3 {
            m[(i, j)] = v[i] * v[j].conj();
        }
    }
    m[(3, 3)] = Complex64::new(q.b_minus.norm_sqr(), 0.0);
    MpsDensity(m)
}

impl MpsDensity {
    /// The same state in the product polarization basis {HH, HV, VH, VV}.
    pub fn to_product_basis(&self) -> DMatrix<Complex64> {
        let u = bell_basis_unitary();
        &u * &self.0 * u.adjoint()
    }
}

/// Traces out one photon of the MPS. The state is exchange-symmetric, so
/// the result does not depend on which photon is kept.
pub fn reduce_one_photon(rho_bar: &MpsDensity) -> ReducedDensity2 {
    let p = rho_bar.to_product_basis();
    let mut r = DMatrix::<Complex64>::zeros(2, 2);
    for a in 0..2 {
        for b in 0..2 {
            r[(a, b)] = p[(a * 2, b * 2)] + p[(a * 2 + 1, b * 2 + 1)];
        }
    }
    ReducedDensity2(r)
}

/// Traces the full 16x16 pure density down to one photon (polarization
/// only). Used to check `P_bar = P^(4)`.
pub fn reduce_full_to_one_photon(rho: &DensityMatrix16) -> ReducedDensity2 {
    let idx = |s: usize, w: usize, s2: usize, w2: usize| ((s * 2 + w) * 2 + s2) * 2 + w2;
    let mut r = DMatrix::<Complex64>::zeros(2, 2);
    for a in 0..2 {
        for b in 0..2 {
            let mut acc = Complex64::default();
            for w in 0..2 {
                for s2 in 0..2 {
                    for w2 in 0..2 {
                        acc += rho.0[(idx(a, w, s2, w2), idx(b, w, s2, w2))];
                    }
                }
            }
            r[(a, b)] = acc;
        }
    }
    ReducedDensity2(r)
}

/// Stokes vector and degree of polarization of a one-photon state.
/// Convention: `s3 = rho_HH - rho_VV`, `s1 = 2 Re rho_HV`, `s2 = -2 Im rho_HV`.
pub fn stokes_and_polarization(rho_r: &ReducedDensity2) -> (StokesVector, f64) {
    let m = &rho_r.0;
    let s = StokesVector {
        s1: 2.0 * m[(0, 1)].re,
        s2: -2.0 * m[(0, 1)].im,
        s3: m[(0, 0)].re - m[(1, 1)].re,
    };
    let p = s.length();
    (s, p)
}

/// `S = -sum(lambda log2 lambda)` in bits, with `0 log 0 := 0`.
/// Eigenvalues in `[-1e-10, 0)` are clamped to zero.
pub fn von_neumann_entropy(rho: &DMatrix<Complex64>) -> Result<f64, DensityError> {
    let eigs = hermitian_eigenvalues(rho)?;
    if let Some(&min) = eigs.first() {
        if min < -1e-8 {
            return Err(DensityError::NotPsd {
                min_eigenvalue: min,
            });
        }
    }
    let mut s = 0.0;
    for lambda in eigs {
        let lambda = lambda.max(0.0);
        if lambda > 0.0 {
            s -= lambda * lambda.log2();
        }
    }
    Ok(s.max(0.0))
}

/// Inverse purity `1 / Tr(rho^2)` of a Hermitian matrix.
pub fn inverse_purity(rho: &DMatrix<Complex64>) -> f64 {
    let sq = rho * rho;
    1.0 / trace(&sq).re
}

/// Pipeline shortcut: ququart -> wave function -> full density -> MPS.
pub fn mps_of(q: &QuquartParams) -> MpsDensity {
    trace_out_frequency(&full_density(&crate::core_state::wave_function(q)))
        .expect("unit-norm ququart has trace-one density")
}

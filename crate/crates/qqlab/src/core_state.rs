//! Pure biphoton ququart states: amplitudes, the symmetric two-boson wave
//! function, polarizer-frame rotation, and the pure-state Schmidt number.
//!
//! A ququart is parametrized by four complex amplitudes `(C1, B+, C4, B-)`
//! on the basis {Psi_HH Psi+^fr, Psi+^pol Psi+^fr, Psi_VV Psi+^fr,
//! Psi-^pol Psi-^fr}. The antisymmetric Bell factors only appear as a
//! product, which keeps the total wave function exchange-symmetric.

use crate::amplitude::{is_finite, Amplitude, FRAC_1_SQRT_2, SQRT_2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Construction tolerance on the state norm.
pub const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum StateError {
    #[error("state is not normalized: |psi|^2 = {norm_sq}")]
    NotNormalized { norm_sq: f64 },
    #[error("all four amplitudes are zero")]
    ZeroState,
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

/// Polarization index. `H` maps to position 0, `V` to 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pol {
    H,
    V,
}

/// Frequency index. `High` (omega_h) maps to position 0, `Low` (omega_l) to 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Freq {
    High,
    Low,
}

impl Pol {
    pub const BOTH: [Pol; 2] = [Pol::H, Pol::V];
    #[inline]
    pub fn index(self) -> usize {
        match self {
            Pol::H => 0,
            Pol::V => 1,
        }
    }
}

impl Freq {
    pub const BOTH: [Freq; 2] = [Freq::High, Freq::Low];
    #[inline]
    pub fn index(self) -> usize {
        match self {
            Freq::High => 0,
            Freq::Low => 1,
        }
    }
}

/// The four complex amplitudes defining a pure ququart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuquartParams {
    #[serde(with = "crate::amplitude::complex_pair")]
    pub c1: Amplitude,
    #[serde(with = "crate::amplitude::complex_pair")]
    pub b_plus: Amplitude,
    #[serde(with = "crate::amplitude::complex_pair")]
    pub c4: Amplitude,
    #[serde(with = "crate::amplitude::complex_pair")]
    pub b_minus: Amplitude,
}

/// The purely polarization qutrit part `(C1, B+, C4)` of a ququart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QutritParams {
    pub c1: Amplitude,
    pub b_plus: Amplitude,
    pub c4: Amplitude,
}

impl QuquartParams {
    pub fn norm_sq(&self) -> f64 {
        self.c1.norm_sqr() + self.b_plus.norm_sqr() + self.c4.norm_sqr() + self.b_minus.norm_sqr()
    }

    pub fn qutrit(&self) -> QutritParams {
        QutritParams {
            c1: self.c1,
            b_plus: self.b_plus,
            c4: self.c4,
        }
    }

    /// Multiplies all four amplitudes by a unit phase so that `B+` is real
    /// and non-negative. When `B+ = 0` the phase makes `C1` real >= 0
    /// instead, then `C4`, then `B-`.
    pub fn canonicalize(&self) -> QuquartParams {
        let reference = [self.b_plus, self.c1, self.c4, self.b_minus]
            .into_iter()
            .find(|z| z.norm() > 0.0)
            .unwrap_or(Complex64::new(1.0, 0.0));
        let phase = reference / reference.norm();
        let u = phase.conj();
        QuquartParams {
            c1: self.c1 * u,
            b_plus: self.b_plus * u,
            c4: self.c4 * u,
            b_minus: self.b_minus * u,
        }
    }
}

/// Validates and builds a ququart from its four amplitudes.
///
/// With `renormalize` unset the squared norm must be within [`NORM_TOL`]
/// of 1; with it set any nonzero input is scaled to unit norm.
pub fn make_ququart(
    c1: Amplitude,
    b_plus: Amplitude,
    c4: Amplitude,
    b_minus: Amplitude,
    renormalize: bool,
) -> Result<QuquartParams, StateError> {
    for z in [c1, b_plus, c4, b_minus] {
        if !is_finite(z) {
            return Err(StateError::NumericalFailure(
                "non-finite amplitude".to_string(),
            ));
        }
    }
    let mut q = QuquartParams {
        c1,
        b_plus,
        c4,
        b_minus,
    };
    let norm_sq = q.norm_sq();
    if norm_sq == 0.0 {
        return Err(StateError::ZeroState);
    }
    if (norm_sq - 1.0).abs() > NORM_TOL {
        if !renormalize {
            return Err(StateError::NotNormalized { norm_sq });
        }
        let inv = 1.0 / norm_sq.sqrt();
        q.c1 *= inv;
        q.b_plus *= inv;
        q.c4 *= inv;
        q.b_minus *= inv;
    }
    Ok(q)
}

/// `B± = (C2 ± C3) / sqrt(2)`.
pub fn b_from_c(c2: Amplitude, c3: Amplitude) -> (Amplitude, Amplitude) {
    ((c2 + c3) / SQRT_2, (c2 - c3) / SQRT_2)
}

/// Inverse of [`b_from_c`]: `C2 = (B+ + B-)/sqrt(2)`, `C3 = (B+ - B-)/sqrt(2)`.
pub fn c_from_b(b_plus: Amplitude, b_minus: Amplitude) -> (Amplitude, Amplitude) {
    ((b_plus + b_minus) / SQRT_2, (b_plus - b_minus) / SQRT_2)
}

/// The 16 amplitudes `Psi(sigma1, omega1; sigma2, omega2)` of a two-boson
/// polarization-frequency state.
#[derive(Debug, Clone, PartialEq)]
pub struct PolFreqWaveFunction {
    amp: [Complex64; 16],
}

#[inline]
fn tensor_index(s1: Pol, w1: Freq, s2: Pol, w2: Freq) -> usize {
    ((s1.index() * 2 + w1.index()) * 2 + s2.index()) * 2 + w2.index()
}

impl PolFreqWaveFunction {
    #[inline]
    pub fn amp(&self, s1: Pol, w1: Freq, s2: Pol, w2: Freq) -> Complex64 {
        self.amp[tensor_index(s1, w1, s2, w2)]
    }

    /// Flat amplitudes in row-major `(sigma1, omega1, sigma2, omega2)` order.
    pub fn as_slice(&self) -> &[Complex64; 16] {
        &self.amp
    }

    pub fn norm_sq(&self) -> f64 {
        self.amp.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Max violation of the bosonic exchange symmetry
    /// `amp(x1, x2) = amp(x2, x1)`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for s1 in Pol::BOTH {
            for w1 in Freq::BOTH {
                for s2 in Pol::BOTH {
                    for w2 in Freq::BOTH {
                        let d = (self.amp(s1, w1, s2, w2) - self.amp(s2, w2, s1, w1)).norm();
                        worst = worst.max(d);
                    }
                }
            }
        }
        worst
    }
}

fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// Polarization basis tensors: Psi_HH, Psi_VV and the Bell states Psi±.
fn pol_basis(s1: Pol, s2: Pol) -> (f64, f64, f64, f64) {
    let (i, j) = (s1.index(), s2.index());
    let hh = delta(i, 0) * delta(j, 0);
    let vv = delta(i, 1) * delta(j, 1);
    let plus = (delta(i, 0) * delta(j, 1) + delta(i, 1) * delta(j, 0)) * FRAC_1_SQRT_2;
    let minus = (delta(i, 0) * delta(j, 1) - delta(i, 1) * delta(j, 0)) * FRAC_1_SQRT_2;
    (hh, plus, vv, minus)
}

/// Frequency Bell states Psi±(omega1, omega2).
fn freq_bell(w1: Freq, w2: Freq) -> (f64, f64) {
    let (i, j) = (w1.index(), w2.index());
    let plus = (delta(i, 0) * delta(j, 1) + delta(i, 1) * delta(j, 0)) * FRAC_1_SQRT_2;
    let minus = (delta(i, 0) * delta(j, 1) - delta(i, 1) * delta(j, 0)) * FRAC_1_SQRT_2;
    (plus, minus)
}

/// Expands a ququart into its 16-amplitude two-boson wave function:
/// `Psi = Psi3(sigma) Psi+(omega) + B- Psi-(sigma) Psi-(omega)`.
pub fn wave_function(q: &QuquartParams) -> PolFreqWaveFunction {
    let mut amp = [Complex64::default(); 16];
    for s1 in Pol::BOTH {
        for w1 in Freq::BOTH {
            for s2 in Pol::BOTH {
                for w2 in Freq::BOTH {
                    let (hh, p_plus, vv, p_minus) = pol_basis(s1, s2);
                    let (f_plus, f_minus) = freq_bell(w1, w2);
                    let qutrit = q.c1 * hh + q.b_plus * p_plus + q.c4 * vv;
                    amp[tensor_index(s1, w1, s2, w2)] =
                        qutrit * f_plus + q.b_minus * p_minus * f_minus;
                }
            }
        }
    }
    PolFreqWaveFunction { amp }
}

/// Re-expresses a ququart in the polarizer frame turned by `alpha` radians.
/// `B-` is invariant; the qutrit part transforms as
/// `C1' = cos^2(a) C1 + sqrt(2) cos(a) sin(a) B+ + sin^2(a) C4`,
/// `B+' = -sqrt(2) cos(a) sin(a) (C1 - C4) + cos(2a) B+`,
/// `C4' = sin^2(a) C1 - sqrt(2) cos(a) sin(a) B+ + cos^2(a) C4`.
pub fn rotate_frame(q: &QuquartParams, alpha: f64) -> QuquartParams {
    let (s, c) = alpha.sin_cos();
    let (c2, s2, cs) = (c * c, s * s, c * s);
    let cos2a = (alpha * 2.0).cos();
    QuquartParams {
        c1: q.c1 * c2 + q.b_plus * (SQRT_2 * cs) + q.c4 * s2,
        b_plus: (q.c4 - q.c1) * (SQRT_2 * cs) + q.b_plus * cos2a,
        c4: q.c1 * s2 - q.b_plus * (SQRT_2 * cs) + q.c4 * c2,
        b_minus: q.b_minus,
    }
}

/// Schmidt number `K = 1 / sum(s_i^4)` of a pure two-boson state, from the
/// singular values of the amplitude tensor reshaped photon-1 x photon-2.
/// `K > 1` means the state is entangled.
pub fn pure_schmidt_number(psi: &PolFreqWaveFunction) -> Result<f64, StateError> {
    let m = nalgebra::DMatrix::from_row_slice(4, 4, psi.as_slice());
    let svd = nalgebra::SVD::try_new(m, false, false, f64::EPSILON * 16.0, 200)
        .ok_or_else(|| StateError::NumericalFailure("SVD did not converge".to_string()))?;
    let sum4: f64 = svd.singular_values.iter().map(|s| s.powi(4)).sum();
    Ok(1.0 / sum4)
}

/// Draws a Haar-like random ququart: four complex Gaussian amplitudes
/// scaled to unit norm.
pub fn random_ququart<R: rand::Rng>(rng: &mut R) -> QuquartParams {
    use rand_distr::{Distribution, StandardNormal};
    let mut draw = || {
        Complex64::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        )
    };
    make_ququart(draw(), draw(), draw(), draw(), true).expect("gaussian draw is nonzero")
}

//! Inversion of count records to state parameters: magnitudes from the
//! HV-frame record, phases from small-angle slopes of the turned-frame
//! probabilities, `B+` from the 45-degree-frame equation, scenario
//! dispatch, and the phase of `B-` from frequency-resolved records.

use crate::core_state::{QuquartParams, StateError};
use crate::measurement::{outcome_distribution, CountRecord, MeasurementConfig};
use crate::amplitude::SQRT_2;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_4, PI};
use thiserror::Error;

/// Small-angle offset used by the exact-mode slope records.
pub const ALPHA0_EXACT: f64 = 1e-4;
/// Absolute floor for declaring a reconstructed squared magnitude zero
/// in the phase-recovery stage.
pub const DEGENERATE_PROB_FLOOR: f64 = 1e-7;
/// Small-angle offset used by sampled-count slope records (5 degrees).
pub const ALPHA0_SAMPLED: f64 = 5.0 * PI / 180.0;

/// Magnitudes below this are treated as exact zeros for exact inputs.
const EXACT_PROB_ZERO: f64 = 1e-8;
/// Flat-slope floor.
const FLAT_SLOPE_FLOOR: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum ReconstructionError {
    #[error("count records disagree on their totals")]
    InconsistentTotals,
    #[error("count record is empty")]
    EmptyRecord,
    #[error("polarizer frame {0} rad is degenerate for this inversion")]
    DegenerateAngle(f64),
    #[error("measured values are outside the physical range: {0}")]
    OutOfRange(String),
    #[error("no root of the B+ equation on the feasible interval")]
    NoRoot,
    #[error("phase of B- is unobservable in this configuration")]
    Degenerate,
    #[error("missing records: {}", .0.join("; "))]
    MissingRecords(Vec<String>),
    #[error(transparent)]
    State(#[from] StateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    Linear,
    Parabola,
    Flat,
}

/// Tangent and curvature of `w(alpha)` at one working point, from a
/// three-point parabola fit.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SlopeEstimate {
    pub tan_theta: f64,
    pub parabola_k: f64,
    pub alpha0: f64,
    pub fit_kind: FitKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    ZeroC,
    SingleC,
    General,
    ZeroBplus,
}

/// Parameters of the frequency-averaged state recovered from
/// polarization-only records.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MpsEstimate {
    pub abs_c1: f64,
    pub abs_c4: f64,
    /// Real and non-negative by convention.
    pub b_plus: f64,
    pub abs_b_minus: f64,
    pub phi1: f64,
    pub phi4: f64,
    pub scenario: Scenario,
    /// The records determine only cosines: the joint sign of all phases
    /// (complex conjugation of the state) is unobservable.
    pub phi1_sign_ambiguous: bool,
    pub phi4_sign_ambiguous: bool,
    /// More than one candidate survived the B+ root search.
    pub ambiguous_root: bool,
}

/// Full estimate including the `B-` phase from frequency-resolved data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuquartEstimate {
    pub mps: MpsEstimate,
    pub phi_minus: f64,
    pub phi_minus_sign_ambiguous: bool,
    /// Named closing residuals of the equations used.
    pub residuals: BTreeMap<String, f64>,
}

impl QuquartEstimate {
    /// Reassembles the state under the canonical phase conventions.
    pub fn to_params(&self) -> Result<QuquartParams, StateError> {
        use num_complex::Complex64;
        crate::core_state::make_ququart(
            Complex64::from_polar(self.mps.abs_c1, self.mps.phi1),
            self.mps.b_plus.into(),
            Complex64::from_polar(self.mps.abs_c4, self.mps.phi4),
            Complex64::from_polar(self.mps.abs_b_minus, self.phi_minus),
            true,
        )
    }
}

/// One solution of the B+ equation with its phases and residuals.
#[derive(Debug, Clone, Copy)]
pub struct BPlusSolution {
    pub b_plus: f64,
    pub cos_phi1: f64,
    pub cos_phi4: f64,
    /// Sign branch of `sin(phi1) sin(phi4)` in `cos(phi1 - phi4)`.
    pub branch: f64,
    pub eq_residual: f64,
}

fn ratio(record: &CountRecord, label: &str) -> Result<f64, ReconstructionError> {
    if record.counts.is_empty() {
        return Err(ReconstructionError::EmptyRecord);
    }
    let count = record.counts.get(label).copied().unwrap_or(0.0);
    if record.config.n_total == 0 {
        return Ok(count);
    }
    let total: f64 = record.counts.values().sum();
    if (total - record.config.n_total as f64).abs() > 0.5 {
        return Err(ReconstructionError::InconsistentTotals);
    }
    Ok(count / record.config.n_total as f64)
}

/// Binomial standard error of a probability estimate; 0 for exact records.
fn prob_se(w: f64, n_total: u64) -> f64 {
    if n_total == 0 {
        0.0
    } else {
        let n = n_total as f64;
        (w.clamp(0.0, 1.0) * (1.0 - w.clamp(0.0, 1.0)) / n).sqrt().max(1.0 / n)
    }
}

/// Statistical gate for declaring a measured probability zero.
fn prob_is_zero(w: f64, n_total: u64) -> bool {
    w < 3.0 * prob_se(w, n_total) + EXACT_PROB_ZERO
}

/// `(|C1|, |C4|, cross)` from the HV-frame record: `|C1| = sqrt(w_H|H)`,
/// `|C4| = sqrt(w_V|V)`, `cross = w_H|V = (|B+|^2 + |B-|^2)/2`.
pub fn estimate_hv_magnitudes(
    record: &CountRecord,
) -> Result<(f64, f64, f64), ReconstructionError> {
    let w_hh = ratio(record, "AA")?;
    let w_vv = ratio(record, "OO")?;
    // photon exchange fixes w_H|V = w_V|H; average the two counters
    let cross = (ratio(record, "AO")? + ratio(record, "OA")?) / 2.0;
    Ok((w_hh.max(0.0).sqrt(), w_vv.max(0.0).sqrt(), cross))
}

/// Scenario dispatch on the measured magnitudes and (optionally) the two
/// slope fits.
pub fn classify_scenario(
    c1_is_zero: bool,
    c4_is_zero: bool,
    slopes: Option<(&SlopeEstimate, &SlopeEstimate)>,
) -> Scenario {
    match (c1_is_zero, c4_is_zero) {
        (true, true) => Scenario::ZeroC,
        (true, false) | (false, true) => Scenario::SingleC,
        (false, false) => match slopes {
            Some((s1, s4)) if s1.fit_kind == FitKind::Flat && s4.fit_kind == FitKind::Flat => {
                Scenario::ZeroBplus
            }
            _ => Scenario::General,
        },
    }
}

/// `C1 = C4 = 0` branch: `|B+|^2 = 2 w_a|a / sin^2(2a)`,
/// `|B-| = sqrt(1 - |B+|^2)`.
pub fn reconstruct_zero_c(
    w_alpha_alpha: f64,
    alpha: f64,
) -> Result<(f64, f64), ReconstructionError> {
    let s2 = (2.0 * alpha).sin();
    if s2.abs() < 1e-6 {
        return Err(ReconstructionError::DegenerateAngle(alpha));
    }
    let b_plus_sq = 2.0 * w_alpha_alpha / (s2 * s2);
    if b_plus_sq > 1.0 + 1e-6 {
        return Err(ReconstructionError::OutOfRange(format!(
            "implied |B+|^2 = {b_plus_sq}"
        )));
    }
    let b_plus_sq = b_plus_sq.clamp(0.0, 1.0);
    Ok((b_plus_sq.sqrt(), (1.0 - b_plus_sq).max(0.0).sqrt()))
}

/// Single nonzero `C` branch: from the 45-degree-frame cross probability
/// `w = |C|^2/4 + |B-|^2/2`, recover `(|B-|, B+)`.
pub fn reconstruct_single_c(
    abs_c: f64,
    w_cross_45: f64,
) -> Result<(f64, f64), ReconstructionError> {
    let b_minus_sq = 2.0 * (w_cross_45 - abs_c * abs_c / 4.0);
    if b_minus_sq < -1e-6 {
        return Err(ReconstructionError::OutOfRange(format!(
            "implied |B-|^2 = {b_minus_sq}"
        )));
    }
    let b_minus_sq = b_minus_sq.clamp(0.0, 1.0);
    let b_plus_sq = (1.0 - abs_c * abs_c - b_minus_sq).clamp(0.0, 1.0);
    Ok((b_minus_sq.sqrt(), b_plus_sq.sqrt()))
}

/// Three-point parabola fit `w(alpha) = w0 + t alpha + k alpha^2` through
/// the records at `-alpha0, 0, +alpha0`.
pub fn estimate_slopes(
    w_minus: f64,
    w_zero: f64,
    w_plus: f64,
    alpha0: f64,
    n_total: u64,
) -> SlopeEstimate {
    let tan_theta = (w_plus - w_minus) / (2.0 * alpha0);
    let parabola_k = (w_plus + w_minus - 2.0 * w_zero) / (2.0 * alpha0 * alpha0);
    let se_w = prob_se(w_plus, n_total).hypot(prob_se(w_minus, n_total));
    let se_t = se_w / (2.0 * alpha0);
    let flat_threshold = (3.0 * se_t).max(FLAT_SLOPE_FLOOR);
    let fit_kind = if tan_theta.abs() < flat_threshold {
        FitKind::Flat
    } else if (parabola_k * alpha0).abs() < 0.05 * tan_theta.abs() {
        FitKind::Linear
    } else {
        FitKind::Parabola
    };
    SlopeEstimate {
        tan_theta,
        parabola_k,
        alpha0,
        fit_kind,
    }
}

/// General branch: solve for `B+` on the feasible interval.
///
/// With `cos(phi1) = t1 / (2^{3/2} |C1| B+)` and
/// `cos(phi4) = -t4 / (2^{3/2} |C4| B+)`, the 45-degree cross probability
/// closes the system through
/// `|C1 - C4|^2 = |C1|^2 + |C4|^2 - 2 |C1||C4| cos(phi1 - phi4)
///             = 4 w45 - 4 cross + 2 B+^2`,
/// where `cos(phi1 - phi4) = cos(phi1) cos(phi4) ± sin(phi1) sin(phi4)`
/// and both sign branches are carried through the root search.
pub fn solve_b_plus_general(
    abs_c1: f64,
    abs_c4: f64,
    tan_theta1: f64,
    tan_theta4: f64,
    cross: f64,
    w_cross_45: f64,
) -> Result<Vec<BPlusSolution>, ReconstructionError> {
    let b_min = (tan_theta1.abs() / (2.0 * SQRT_2 * abs_c1))
        .max(tan_theta4.abs() / (2.0 * SQRT_2 * abs_c4));
    let b_max = (2.0 * cross).max(0.0).sqrt();
    if b_min > b_max + 1e-9 {
        return Err(ReconstructionError::NoRoot);
    }
    let b_max = b_max.min(1.0);
    let rhs = 4.0 * w_cross_45 - 4.0 * cross;
    let cosines = |b: f64| {
        let c1 = (tan_theta1 / (2.0 * SQRT_2 * abs_c1 * b)).clamp(-1.0, 1.0);
        let c4 = (-tan_theta4 / (2.0 * SQRT_2 * abs_c4 * b)).clamp(-1.0, 1.0);
        (c1, c4)
    };
    let residual = |b: f64, branch: f64| {
        let (c1, c4) = cosines(b);
        let sins = ((1.0 - c1 * c1).max(0.0) * (1.0 - c4 * c4).max(0.0)).sqrt();
        let cos_diff = c1 * c4 + branch * sins;
        abs_c1 * abs_c1 + abs_c4 * abs_c4 - 2.0 * abs_c1 * abs_c4 * cos_diff
            - (rhs + 2.0 * b * b)
    };

    let mut solutions: Vec<BPlusSolution> = Vec::new();
    let lo = (b_min + 1e-12).min(b_max);
    for branch in [1.0, -1.0] {
        // scan for sign changes, then bisect each bracket
        const GRID: usize = 64;
        let mut prev_b = lo;
        let mut prev_r = residual(prev_b, branch);
        for i in 1..=GRID {
            let b = lo + (b_max - lo) * i as f64 / GRID as f64;
            let r = residual(b, branch);
            if prev_r == 0.0 || prev_r * r < 0.0 || (i == GRID && r == 0.0) {
                let (mut a, mut c) = (prev_b, b);
                let mut ra = prev_r;
                for _ in 0..200 {
                    let m = (a + c) / 2.0;
                    let rm = residual(m, branch);
                    if rm.abs() < 1e-14 || (c - a) < 1e-15 {
                        a = m;
                        break;
                    }
                    if ra * rm <= 0.0 {
                        c = m;
                    } else {
                        a = m;
                        ra = rm;
                    }
                }
                let root = (a + c) / 2.0;
                let (c1, c4) = cosines(root);
                solutions.push(BPlusSolution {
                    b_plus: root,
                    cos_phi1: c1,
                    cos_phi4: c4,
                    branch,
                    eq_residual: residual(root, branch).abs(),
                });
            }
            prev_b = b;
            prev_r = r;
        }
        // roots sitting exactly on a bracket endpoint (cos(phi) = +-1 puts
        // them at b_min == b_max) produce no sign change; admit endpoints
        // with a small residual as candidates and let the forward-model
        // replay arbitrate
        for b in [lo, b_max] {
            if residual(b, branch).abs() < 1e-2 {
                let (c1, c4) = cosines(b);
                solutions.push(BPlusSolution {
                    b_plus: b,
                    cos_phi1: c1,
                    cos_phi4: c4,
                    branch,
                    eq_residual: residual(b, branch).abs(),
                });
            }
        }
    }
    // merge branch duplicates (sin(phi1) sin(phi4) = 0 makes them equal)
    solutions.sort_by(|a, b| a.b_plus.partial_cmp(&b.b_plus).unwrap());
    solutions.dedup_by(|a, b| {
        (a.b_plus - b.b_plus).abs() < 1e-7
            && (a.cos_phi1 - b.cos_phi1).abs() < 1e-7
            && (a.cos_phi4 - b.cos_phi4).abs() < 1e-7
            && ((a.cos_phi1 * a.cos_phi4
                + a.branch
                    * ((1.0 - a.cos_phi1 * a.cos_phi1).max(0.0)
                        * (1.0 - a.cos_phi4 * a.cos_phi4).max(0.0))
                        .sqrt())
                - (b.cos_phi1 * b.cos_phi4
                    + b.branch
                        * ((1.0 - b.cos_phi1 * b.cos_phi1).max(0.0)
                            * (1.0 - b.cos_phi4 * b.cos_phi4).max(0.0))
                            .sqrt()))
            .abs()
                < 1e-7
    });
    if solutions.is_empty() {
        return Err(ReconstructionError::NoRoot);
    }
    Ok(solutions)
}

/// Predicted parabola curvatures `(k1, k4)` of the two diagonal
/// probabilities for a candidate solution — the surplus observables that
/// deduplicate B+ roots: `k1 = 2 B+^2 + 2(|C1||C4| cos(phi1 - phi4) - |C1|^2)`
/// and symmetrically for `k4`.
pub fn predicted_curvatures(
    abs_c1: f64,
    abs_c4: f64,
    sol: &BPlusSolution,
) -> (f64, f64) {
    let sins = ((1.0 - sol.cos_phi1 * sol.cos_phi1).max(0.0)
        * (1.0 - sol.cos_phi4 * sol.cos_phi4).max(0.0))
    .sqrt();
    let cos_diff = sol.cos_phi1 * sol.cos_phi4 + sol.branch * sins;
    let shared = 2.0 * sol.b_plus * sol.b_plus + 2.0 * abs_c1 * abs_c4 * cos_diff;
    (shared - 2.0 * abs_c1 * abs_c1, shared - 2.0 * abs_c4 * abs_c4)
}

/// `B+ = 0` branch: `cos(phi4) = (k/(2|C1|) + |C1|)/|C4|` with the
/// `phi1 = 0` convention; the sign of `phi4` stays ambiguous.
pub fn reconstruct_zero_bplus(
    abs_c1: f64,
    abs_c4: f64,
    parabola_k: f64,
) -> Result<(f64, bool), ReconstructionError> {
    let cos_phi4 = (parabola_k / (2.0 * abs_c1) + abs_c1) / abs_c4;
    if cos_phi4.abs() > 1.0 + 1e-6 {
        return Err(ReconstructionError::OutOfRange(format!(
            "implied cos(phi4) = {cos_phi4}"
        )));
    }
    Ok((cos_phi4.clamp(-1.0, 1.0).acos(), true))
}

/// Recovers `phi_minus` from one frequency-resolved record.
///
/// The pooled cross count gives `w = |B+^a + B-|^2 / 2`, so
/// `cos(phi_minus - phi_ref) = (2w - |B+^a|^2 - |B-|^2) / (2 |B+^a| |B-|)`
/// with `phi_ref = 0` at `a = 0` (B+ real) or `phi_ref = arg(C4 - C1)` in
/// the `B+ = 0` path at a turned frame.
pub fn reconstruct_phase_minus(
    mps: &MpsEstimate,
    freq_record: &CountRecord,
) -> Result<QuquartEstimate, ReconstructionError> {
    let (phi_ref, cos_rel) = phase_minus_cosine(mps, freq_record)?;
    if cos_rel.abs() > 1.0 + 1e-6 {
        return Err(ReconstructionError::OutOfRange(format!(
            "implied cos(phi_minus - phi_ref) = {cos_rel}"
        )));
    }
    let phi_minus = phi_ref + cos_rel.clamp(-1.0, 1.0).acos();
    let mut residuals = BTreeMap::new();
    residuals.insert(
        "phase_minus_cos_excess".to_string(),
        (cos_rel.abs() - 1.0).max(0.0),
    );
    Ok(QuquartEstimate {
        mps: mps.clone(),
        phi_minus,
        phi_minus_sign_ambiguous: cos_rel.abs() < 1.0 - 1e-12,
        residuals,
    })
}

/// Reference phase and raw `cos(phi_minus - phi_ref)` implied by one
/// frequency-resolved record, before range validation.
fn phase_minus_cosine(
    mps: &MpsEstimate,
    freq_record: &CountRecord,
) -> Result<(f64, f64), ReconstructionError> {
    use num_complex::Complex64;
    let alpha = frame_of(&freq_record.config).ok_or(ReconstructionError::EmptyRecord)?;
    let (s, c) = alpha.sin_cos();
    let c1 = Complex64::from_polar(mps.abs_c1, mps.phi1);
    let c4 = Complex64::from_polar(mps.abs_c4, mps.phi4);
    let b_plus_alpha = (c4 - c1) * (SQRT_2 * c * s) + Complex64::from(mps.b_plus) * (c * c - s * s);
    let amp = b_plus_alpha.norm();
    // the equation degenerates when either interfering amplitude sits
    // below the zero gate; reconstructed magnitudes carry more error
    // than raw ratios, hence the wider floor
    let n_total = freq_record.config.n_total;
    let gate = |w: f64| w < 3.0 * prob_se(w, n_total) + DEGENERATE_PROB_FLOOR;
    if gate(mps.abs_b_minus * mps.abs_b_minus) || gate(amp * amp) {
        return Err(ReconstructionError::Degenerate);
    }
    let w = 2.0 * ratio(freq_record, "AhOl")?;
    let cos_rel =
        (2.0 * w - amp * amp - mps.abs_b_minus * mps.abs_b_minus) / (2.0 * amp * mps.abs_b_minus);
    Ok((b_plus_alpha.arg(), cos_rel))
}

/// Sum of squared deviations between a trial state's exact forward model
/// and the measured ratios, over every record in the set.
fn replay_error(q: &QuquartParams, records: &[CountRecord]) -> f64 {
    let mut err = 0.0;
    for rec in records {
        let dist = outcome_distribution(q, &rec.config);
        for (label, p) in dist.labels().iter().zip(dist.probabilities()) {
            let meas = ratio(rec, label).unwrap_or(0.0);
            err += (p - meas) * (p - meas);
        }
    }
    err
}

/// The frame angle of an equal-angle configuration, signed into
/// `(-pi/2, pi/2]` so that small negative offsets read as negative.
fn frame_of(config: &MeasurementConfig) -> Option<f64> {
    if (config.ch1.angle - config.ch2.angle).abs() > 1e-9 {
        return None;
    }
    let a = config.ch1.angle;
    Some(if a > PI / 2.0 { a - PI } else { a })
}

/// The standard measurement plan covering every scenario: records at
/// frames `0, ±alpha0, 45deg` plus frequency-resolved records at `0` and
/// `45deg`. `n_total = 0` plans exact-probability records; per-record
/// seeds are `seed_base + index`.
pub fn standard_plan(n_total: u64, seed_base: u64) -> Vec<MeasurementConfig> {
    let alpha0 = if n_total == 0 {
        ALPHA0_EXACT
    } else {
        ALPHA0_SAMPLED
    };
    vec![
        MeasurementConfig::pair(0.0, 0.0, n_total, seed_base),
        MeasurementConfig::pair(alpha0, alpha0, n_total, seed_base + 1),
        MeasurementConfig::pair(-alpha0, -alpha0, n_total, seed_base + 2),
        MeasurementConfig::pair(FRAC_PI_4, FRAC_PI_4, n_total, seed_base + 3),
        MeasurementConfig::pair_freq_resolved(0.0, 0.0, n_total, seed_base + 4),
        MeasurementConfig::pair_freq_resolved(FRAC_PI_4, FRAC_PI_4, n_total, seed_base + 5),
    ]
}

struct RecordSet<'a> {
    records: &'a [CountRecord],
}

impl<'a> RecordSet<'a> {
    fn find_pol(&self, frame: f64) -> Option<&'a CountRecord> {
        self.records.iter().find(|r| {
            !r.config.frequency_resolved()
                && frame_of(&r.config).is_some_and(|f| (f - frame).abs() < 1e-9)
        })
    }

    fn find_freq(&self, frame: f64) -> Option<&'a CountRecord> {
        self.records.iter().find(|r| {
            r.config.frequency_resolved()
                && frame_of(&r.config).is_some_and(|f| (f - frame).abs() < 1e-9)
        })
    }

    /// A symmetric slope pair `(-a0, +a0)` with `a0` small.
    fn find_slope_pair(&self) -> Option<(&'a CountRecord, &'a CountRecord, f64)> {
        for r in self.records.iter().filter(|r| !r.config.frequency_resolved()) {
            if let Some(f) = frame_of(&r.config) {
                if f > 1e-12 && f < 0.3 {
                    if let Some(neg) = self.find_pol(-f) {
                        return Some((neg, r, f));
                    }
                }
            }
        }
        None
    }
}

/// Full pipeline: magnitudes, scenario dispatch, phases, `phi_minus`.
pub fn reconstruct_full(records: &[CountRecord]) -> Result<QuquartEstimate, ReconstructionError> {
    let set = RecordSet { records };
    let mut missing: Vec<String> = Vec::new();

    let hv = set.find_pol(0.0);
    if hv.is_none() {
        missing.push("polarization record with both channels at 0 deg".into());
    }
    let rec45 = set.find_pol(FRAC_PI_4);
    if rec45.is_none() {
        missing.push("polarization record with both channels at 45 deg".into());
    }
    if !missing.is_empty() {
        return Err(ReconstructionError::MissingRecords(missing));
    }
    let hv = hv.unwrap();
    let rec45 = rec45.unwrap();
    let n_total = hv.config.n_total;

    let (abs_c1, abs_c4, cross) = estimate_hv_magnitudes(hv)?;
    let c1_zero = prob_is_zero(abs_c1 * abs_c1, n_total);
    let c4_zero = prob_is_zero(abs_c4 * abs_c4, n_total);

    let slope_data = set.find_slope_pair();
    let slopes = match (&slope_data, set.find_pol(0.0)) {
        (Some((neg, pos, a0)), Some(zero)) => {
            let w0_aa = ratio(zero, "AA")?;
            let w0_oo = ratio(zero, "OO")?;
            let s1 = estimate_slopes(
                ratio(neg, "AA")?,
                w0_aa,
                ratio(pos, "AA")?,
                *a0,
                n_total,
            );
            let s4 = estimate_slopes(
                ratio(neg, "OO")?,
                w0_oo,
                ratio(pos, "OO")?,
                *a0,
                n_total,
            );
            Some((s1, s4))
        }
        _ => None,
    };

    let scenario = classify_scenario(
        c1_zero,
        c4_zero,
        slopes.as_ref().map(|(a, b)| (a, b)),
    );

    let mut residuals = BTreeMap::new();
    // the General path already selects phi_minus during replay scoring
    let mut phi_minus_override: Option<(f64, bool)> = None;
    let w45_aa = ratio(rec45, "AA")?;
    let w45_cross = (ratio(rec45, "AO")? + ratio(rec45, "OA")?) / 2.0;

    let mps = match scenario {
        Scenario::ZeroC => {
            let (b_plus, abs_b_minus) = reconstruct_zero_c(w45_aa, FRAC_PI_4)?;
            MpsEstimate {
                abs_c1: 0.0,
                abs_c4: 0.0,
                b_plus,
                abs_b_minus,
                phi1: 0.0,
                phi4: 0.0,
                scenario,
                phi1_sign_ambiguous: false,
                phi4_sign_ambiguous: false,
                ambiguous_root: false,
            }
        }
        Scenario::SingleC => {
            let abs_c = if c4_zero { abs_c1 } else { abs_c4 };
            let (abs_b_minus, b_plus) = reconstruct_single_c(abs_c, w45_cross)?;
            // the surviving C's phase relative to B+ is still visible in
            // the small-angle slope when both are nonzero
            let mut phi1 = 0.0;
            let mut phi4 = 0.0;
            let mut ambiguous = false;
            if b_plus > 1e-6 {
                if let Some((s1, s4)) = &slopes {
                    if c4_zero {
                        let cos = (s1.tan_theta / (2.0 * SQRT_2 * abs_c1 * b_plus))
                            .clamp(-1.0, 1.0);
                        phi1 = cos.acos();
                        ambiguous = cos.abs() < 1.0 - 1e-12;
                    } else {
                        let cos = (-s4.tan_theta / (2.0 * SQRT_2 * abs_c4 * b_plus))
                            .clamp(-1.0, 1.0);
                        phi4 = cos.acos();
                        ambiguous = cos.abs() < 1.0 - 1e-12;
                    }
                }
            }
            MpsEstimate {
                abs_c1: if c1_zero { 0.0 } else { abs_c1 },
                abs_c4: if c4_zero { 0.0 } else { abs_c4 },
                b_plus,
                abs_b_minus,
                phi1,
                phi4,
                scenario,
                phi1_sign_ambiguous: ambiguous && c4_zero,
                phi4_sign_ambiguous: ambiguous && c1_zero,
                ambiguous_root: false,
            }
        }
        Scenario::ZeroBplus => {
            let (s1, _) = slopes.as_ref().expect("scenario requires slopes");
            let abs_b_minus = (2.0 * cross).clamp(0.0, 1.0).sqrt();
            let (phi4, ambiguous) = reconstruct_zero_bplus(abs_c1, abs_c4, s1.parabola_k)?;
            MpsEstimate {
                abs_c1,
                abs_c4,
                b_plus: 0.0,
                abs_b_minus,
                phi1: 0.0,
                phi4,
                scenario,
                phi1_sign_ambiguous: false,
                phi4_sign_ambiguous: ambiguous,
                ambiguous_root: false,
            }
        }
        Scenario::General => {
            let (s1, s4) = match &slopes {
                Some(pair) => pair,
                None => {
                    return Err(ReconstructionError::MissingRecords(vec![
                        "slope records at symmetric small frames ±alpha0".into(),
                    ]))
                }
            };
            let solutions = solve_b_plus_general(
                abs_c1,
                abs_c4,
                s1.tan_theta,
                s4.tan_theta,
                cross,
                w45_cross,
            )?;
            // spurious roots can agree with every scalar observable used
            // so far, so candidates are scored by replaying the full
            // forward model against all records
            // (replay score, estimate, chosen phi_minus, score gap to the
            // opposite phi_minus sign)
            let eval = |b_plus: f64, branch: f64| -> (f64, MpsEstimate, f64, f64) {
                let abs_b_minus = (2.0 * cross - b_plus * b_plus).clamp(0.0, 1.0).sqrt();
                let cos_phi1 =
                    (s1.tan_theta / (2.0 * SQRT_2 * abs_c1 * b_plus)).clamp(-1.0, 1.0);
                let cos_phi4 =
                    (-s4.tan_theta / (2.0 * SQRT_2 * abs_c4 * b_plus)).clamp(-1.0, 1.0);
                let mps = MpsEstimate {
                    abs_c1,
                    abs_c4,
                    b_plus,
                    abs_b_minus,
                    phi1: cos_phi1.acos(),
                    phi4: branch * cos_phi4.acos(),
                    scenario,
                    phi1_sign_ambiguous: cos_phi1.abs() < 1.0 - 1e-12,
                    phi4_sign_ambiguous: cos_phi4.abs() < 1.0 - 1e-12,
                    ambiguous_root: false,
                };
                // the lab-frame frequency record pins cos(phi_minus) only;
                // the 45-degree one sees the sign relative to the other
                // phases, so the replay tries both. An infeasible implied
                // cosine outside [-1, 1] adds a penalty.
                let (candidates, penalty) = if abs_b_minus < 1e-6 {
                    (vec![0.0], 0.0)
                } else {
                    match set.find_freq(0.0).map(|r| phase_minus_cosine(&mps, r)) {
                        Some(Ok((phi_ref, cos_rel))) => {
                            let delta = cos_rel.clamp(-1.0, 1.0).acos();
                            (
                                vec![phi_ref + delta, phi_ref - delta],
                                (cos_rel.abs() - 1.0).max(0.0),
                            )
                        }
                        _ => (vec![0.0], 0.0),
                    }
                };
                let mut scores = Vec::new();
                for &phi_minus in &candidates {
                    let trial = crate::core_state::make_ququart(
                        num_complex::Complex64::from_polar(abs_c1, mps.phi1),
                        b_plus.into(),
                        num_complex::Complex64::from_polar(abs_c4, mps.phi4),
                        num_complex::Complex64::from_polar(abs_b_minus, phi_minus),
                        true,
                    );
                    scores.push(match trial {
                        Ok(params) => replay_error(&params, records) + penalty,
                        Err(_) => f64::INFINITY,
                    });
                }
                let best = if scores.len() > 1 && scores[1] < scores[0] { 1 } else { 0 };
                let gap = if scores.len() > 1 {
                    (scores[0] - scores[1]).abs()
                } else {
                    f64::INFINITY
                };
                (scores[best], mps, candidates[best], gap)
            };
            let mut scored: Vec<(f64, f64, MpsEstimate, f64, f64)> = solutions
                .iter()
                .map(|sol| {
                    let (score, mps, pm, gap) = eval(sol.b_plus, sol.branch);
                    (score, sol.branch, mps, pm, gap)
                })
                .collect();
            scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let replay_tol = if n_total == 0 {
                1e-10
            } else {
                32.0 / n_total as f64
            };
            let ambiguous_root = scored.len() > 1 && scored[1].0 < scored[0].0 + replay_tol;
            let (mut score, branch, mut mps, mut pm, mut pm_gap) = scored.swap_remove(0);
            // near-tangent roots of the single B+ equation are
            // ill-conditioned; polish against the replay score, which
            // stays sharply curved at the true parameters
            {
                let width = 5e-3;
                let b_hi = (2.0 * cross).max(0.0).sqrt().min(1.0);
                let (mut lo, mut hi) = (
                    (mps.b_plus - width).max(1e-12),
                    (mps.b_plus + width).min(b_hi),
                );
                let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
                let mut x1 = hi - inv_phi * (hi - lo);
                let mut x2 = lo + inv_phi * (hi - lo);
                let (mut f1, mut f2) = (eval(x1, branch).0, eval(x2, branch).0);
                for _ in 0..80 {
                    if f1 < f2 {
                        hi = x2;
                        x2 = x1;
                        f2 = f1;
                        x1 = hi - inv_phi * (hi - lo);
                        f1 = eval(x1, branch).0;
                    } else {
                        lo = x1;
                        x1 = x2;
                        f1 = f2;
                        x2 = lo + inv_phi * (hi - lo);
                        f2 = eval(x2, branch).0;
                    }
                }
                let (polished_score, polished, polished_pm, polished_gap) =
                    eval((lo + hi) / 2.0, branch);
                if polished_score < score {
                    score = polished_score;
                    mps = polished;
                    pm = polished_pm;
                    pm_gap = polished_gap;
                }
            }
            mps.ambiguous_root = ambiguous_root;
            phi_minus_override = Some((pm, pm_gap < replay_tol));
            residuals.insert("replay_error".to_string(), score);
            mps
        }
    };

    let norm_defect = (mps.abs_c1 * mps.abs_c1
        + mps.abs_c4 * mps.abs_c4
        + mps.b_plus * mps.b_plus
        + mps.abs_b_minus * mps.abs_b_minus
        - 1.0)
        .abs();
    residuals.insert("normalization_defect".to_string(), norm_defect);

    // phi_minus needs a frequency-resolved record unless |B-| vanishes
    let b_minus_sq = mps.abs_b_minus * mps.abs_b_minus;
    if b_minus_sq < 3.0 * prob_se(b_minus_sq, n_total) + DEGENERATE_PROB_FLOOR {
        return Ok(QuquartEstimate {
            mps,
            phi_minus: 0.0,
            phi_minus_sign_ambiguous: false,
            residuals,
        });
    }
    let freq_frame = if mps.b_plus > 1e-6 { 0.0 } else { FRAC_PI_4 };
    let freq_rec = set.find_freq(freq_frame).ok_or_else(|| {
        ReconstructionError::MissingRecords(vec![format!(
            "frequency-resolved record with both channels at {:.0} deg",
            freq_frame.to_degrees()
        )])
    })?;
    let mut estimate = reconstruct_phase_minus(&mps, freq_rec)?;
    if let Some((phi_minus, sign_ambiguous)) = phi_minus_override {
        estimate.phi_minus = phi_minus;
        estimate.phi_minus_sign_ambiguous = sign_ambiguous;
    }
    estimate.residuals.append(&mut residuals.clone());
    Ok(estimate)
}

//! Forward model of the coincidence experiment: exact conditional
//! probabilities in any polarizer frame, with or without frequency
//! resolution, and seeded stochastic count simulation.

use crate::core_state::{rotate_frame, wave_function, Freq, QuquartParams};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// RNG algorithm identifier recorded in count records.
pub const RNG_ALGORITHM: &str = "chacha8";

/// Outcome labels of a polarization-only run: `A` is transmission along
/// the channel's polarizer angle, `O` along the orthogonal direction.
pub const LABELS_4: [&str; 4] = ["AA", "AO", "OA", "OO"];

/// Outcome labels of a frequency-resolved run, `{A|O}{h|l}` per channel,
/// in the same index convention as the wave function amplitudes.
pub const LABELS_16: [&str; 16] = [
    "AhAh", "AhAl", "AhOh", "AhOl", "AlAh", "AlAl", "AlOh", "AlOl", "OhAh", "OhAl", "OhOh",
    "OhOl", "OlAh", "OlAl", "OlOh", "OlOl",
];

/// One polarizer-plus-detector channel of the coincidence scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizerSetting {
    /// 1 or 2.
    pub channel: u8,
    /// Radians, 0 = horizontal; normalized to `[0, pi)`.
    pub angle: f64,
    /// `Some` marks a frequency-resolved run; the value names the band
    /// the experimenter singles out in that channel.
    pub frequency_filter: Option<Freq>,
}

impl PolarizerSetting {
    pub fn new(channel: u8, angle: f64, frequency_filter: Option<Freq>) -> Self {
        PolarizerSetting {
            channel,
            angle: angle.rem_euclid(std::f64::consts::PI),
            frequency_filter,
        }
    }
}

/// One planned measurement series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementConfig {
    pub ch1: PolarizerSetting,
    pub ch2: PolarizerSetting,
    /// Planned coincidence count.
    pub n_total: u64,
    pub seed: u64,
    /// Uniform accidental-background fraction mixed into the distribution.
    #[serde(default)]
    pub background: f64,
}

impl MeasurementConfig {
    /// Both channels at the given angles, frequency-blind.
    pub fn pair(angle1: f64, angle2: f64, n_total: u64, seed: u64) -> Self {
        MeasurementConfig {
            ch1: PolarizerSetting::new(1, angle1, None),
            ch2: PolarizerSetting::new(2, angle2, None),
            n_total,
            seed,
            background: 0.0,
        }
    }

    /// Frequency-resolved variant of [`MeasurementConfig::pair`].
    pub fn pair_freq_resolved(angle1: f64, angle2: f64, n_total: u64, seed: u64) -> Self {
        MeasurementConfig {
            ch1: PolarizerSetting::new(1, angle1, Some(Freq::High)),
            ch2: PolarizerSetting::new(2, angle2, Some(Freq::Low)),
            n_total,
            seed,
            background: 0.0,
        }
    }

    pub fn frequency_resolved(&self) -> bool {
        self.ch1.frequency_filter.is_some() || self.ch2.frequency_filter.is_some()
    }
}

/// Exact outcome probabilities of one configuration; sums to 1.
#[derive(Debug, Clone, PartialEq)]
pub enum OutcomeDistribution {
    /// Order `AA, AO, OA, OO`.
    Polarization4([f64; 4]),
    /// Index `((p1*2 + w1)*2 + p2)*2 + w2` with `A = 0, O = 1, h = 0, l = 1`.
    PolarizationFrequency16([f64; 16]),
}

impl OutcomeDistribution {
    pub fn probabilities(&self) -> &[f64] {
        match self {
            OutcomeDistribution::Polarization4(p) => p,
            OutcomeDistribution::PolarizationFrequency16(p) => p,
        }
    }

    pub fn labels(&self) -> &'static [&'static str] {
        match self {
            OutcomeDistribution::Polarization4(_) => &LABELS_4,
            OutcomeDistribution::PolarizationFrequency16(_) => &LABELS_16,
        }
    }
}

/// One simulated (or exact) measurement series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub config: MeasurementConfig,
    /// Outcome label to count. Sampled records hold integers summing to
    /// `n_total`; exact-mode records (`n_total = 0`) hold probabilities.
    pub counts: BTreeMap<String, f64>,
    pub algorithm: String,
    pub timestamp: String,
}

/// Conditional probabilities in the lab (HV) frame:
/// `w_H|H = |C1|^2`, `w_V|V = |C4|^2`, `w_H|V = w_V|H = (|B+|^2 + |B-|^2)/2`.
pub fn conditional_probabilities_hv(q: &QuquartParams) -> OutcomeDistribution {
    let cross = (q.b_plus.norm_sqr() + q.b_minus.norm_sqr()) / 2.0;
    OutcomeDistribution::Polarization4([q.c1.norm_sqr(), cross, cross, q.c4.norm_sqr()])
}

/// Conditional probabilities with both polarizers turned by `alpha`,
/// through the closed forms
/// `w_a|a = |C1 cos^2 a + sqrt2 B+ cos a sin a + C4 sin^2 a|^2`,
/// `w_{90+a}|{90+a} = |C1 sin^2 a - sqrt2 B+ cos a sin a + C4 cos^2 a|^2`,
/// cross terms `(|B+^a|^2 + |B-|^2)/2` — an independent code path from
/// rotate-then-[`conditional_probabilities_hv`].
pub fn conditional_probabilities_rotated(q: &QuquartParams, alpha: f64) -> OutcomeDistribution {
    let (s, c) = alpha.sin_cos();
    let sqrt2cs = std::f64::consts::SQRT_2 * c * s;
    let c1a = q.c1 * (c * c) + q.b_plus * sqrt2cs + q.c4 * (s * s);
    let c4a = q.c1 * (s * s) - q.b_plus * sqrt2cs + q.c4 * (c * c);
    let bpa = (q.c4 - q.c1) * sqrt2cs + q.b_plus * (c * c - s * s);
    let cross = (bpa.norm_sqr() + q.b_minus.norm_sqr()) / 2.0;
    OutcomeDistribution::Polarization4([c1a.norm_sqr(), cross, cross, c4a.norm_sqr()])
}

/// Ordered frequency-resolved distribution with both polarizers at
/// `alpha`: `P[(p, w) in ch1, (p', w') in ch2] = |Psi_a(p, w; p', w')|^2`
/// over the rotated wave function.
pub fn freq_resolved_distribution(q: &QuquartParams, alpha: f64) -> OutcomeDistribution {
    let rotated = rotate_frame(q, alpha);
    let psi = wave_function(&rotated);
    let mut probs = [0.0; 16];
    for (i, a) in psi.as_slice().iter().enumerate() {
        probs[i] = a.norm_sqr();
    }
    OutcomeDistribution::PolarizationFrequency16(probs)
}

/// The quantity `w_{a,h}|{a+90,l}` in the convention of the count-ratio
/// formulas, i.e. twice the ordered `(A,h),(O,l)` probability (the two
/// ordered outcomes related by photon exchange are pooled). Equals
/// `|B+^a + B-|^2 / 2`. With `high_in_ch1 = false` the mirrored
/// `w_{a,l}|{a+90,h} = |B+^a - B-|^2 / 2` is returned instead.
pub fn pooled_cross_frequency(dist: &OutcomeDistribution, high_in_ch1: bool) -> f64 {
    let probs = match dist {
        OutcomeDistribution::PolarizationFrequency16(p) => p,
        OutcomeDistribution::Polarization4(_) => return 0.0,
    };
    // (A,h),(O,l) sits at index 3; (A,l),(O,h) at index 6
    if high_in_ch1 {
        2.0 * probs[3]
    } else {
        2.0 * probs[6]
    }
}

/// Exact distribution for an arbitrary pair of polarizer angles, by
/// contracting the wave function with each channel's analyzer basis.
/// Reduces to the closed forms when the two angles coincide.
pub fn outcome_distribution(q: &QuquartParams, config: &MeasurementConfig) -> OutcomeDistribution {
    let psi = wave_function(q);
    let basis = |angle: f64| {
        let (s, c) = angle.sin_cos();
        // rows: A (along the polarizer), O (orthogonal)
        [[c, s], [-s, c]]
    };
    let e1 = basis(config.ch1.angle);
    let e2 = basis(config.ch2.angle);
    let mut probs = [0.0; 16];
    for p1 in 0..2 {
        for w1 in 0..2 {
            for p2 in 0..2 {
                for w2 in 0..2 {
                    let mut amp = Complex64::default();
                    for s1 in 0..2 {
                        for s2 in 0..2 {
                            let idx = ((s1 * 2 + w1) * 2 + s2) * 2 + w2;
                            amp += psi.as_slice()[idx] * e1[p1][s1] * e2[p2][s2];
                        }
                    }
                    probs[((p1 * 2 + w1) * 2 + p2) * 2 + w2] = amp.norm_sqr();
                }
            }
        }
    }
    if config.frequency_resolved() {
        OutcomeDistribution::PolarizationFrequency16(probs)
    } else {
        let mut pol = [0.0; 4];
        for p1 in 0..2 {
            for p2 in 0..2 {
                for w1 in 0..2 {
                    for w2 in 0..2 {
                        pol[p1 * 2 + p2] += probs[((p1 * 2 + w1) * 2 + p2) * 2 + w2];
                    }
                }
            }
        }
        OutcomeDistribution::Polarization4(pol)
    }
}

/// Draws one multinomial count record, deterministic given `config.seed`.
/// Sampling is by sequential binomial conditioning, so the cost is linear
/// in the number of outcomes and the joint distribution is exact.
pub fn simulate_coincidences(q: &QuquartParams, config: &MeasurementConfig) -> CountRecord {
    let dist = outcome_distribution(q, config);
    let probs = dist.probabilities();
    let n_out = probs.len() as f64;
    let mixed: Vec<f64> = probs
        .iter()
        .map(|p| (1.0 - config.background) * p + config.background / n_out)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut counts = BTreeMap::new();
    let mut remaining = config.n_total;
    let mut mass_left = 1.0;
    for (label, &p) in dist.labels().iter().zip(&mixed) {
        let drawn = if label == dist.labels().last().unwrap() || mass_left <= 0.0 {
            remaining
        } else {
            let cond = (p / mass_left).clamp(0.0, 1.0);
            Binomial::new(remaining, cond)
                .map(|b| b.sample(&mut rng))
                .unwrap_or(0)
        };
        counts.insert((*label).to_string(), drawn as f64);
        remaining -= drawn;
        mass_left -= p;
    }
    CountRecord {
        config: *config,
        counts,
        algorithm: RNG_ALGORITHM.to_string(),
        timestamp: String::new(),
    }
}

/// Exact-mode record: the counts column holds the outcome probabilities
/// themselves and `n_total` is the 0 sentinel.
pub fn exact_record(q: &QuquartParams, config: &MeasurementConfig) -> CountRecord {
    let dist = outcome_distribution(q, config);
    let mut config = *config;
    config.n_total = 0;
    let counts = dist
        .labels()
        .iter()
        .zip(dist.probabilities())
        .map(|(l, p)| ((*l).to_string(), *p))
        .collect();
    CountRecord {
        config,
        counts,
        algorithm: RNG_ALGORITHM.to_string(),
        timestamp: String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use crate::amplitude::FRAC_1_SQRT_2;
    use crate::core_state::{make_ququart, random_ququart};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn q(c1: f64, bp: f64, c4: f64, bm: f64) -> QuquartParams {
        make_ququart(c1.into(), bp.into(), c4.into(), bm.into(), false).unwrap()
    }

    fn assert_dist(d: &OutcomeDistribution, want: &[f64], tol: f64) {
        for (got, want) in d.probabilities().iter().zip(want) {
            assert!((got - want).abs() < tol, "{d:?} vs {want:?}");
        }
    }

    #[test]
    fn hv_probabilities_reference_values() {
        assert_dist(
            &conditional_probabilities_hv(&q(1.0, 0.0, 0.0, 0.0)),
            &[1.0, 0.0, 0.0, 0.0],
            1e-15,
        );
        assert_dist(
            &conditional_probabilities_hv(&q(0.0, 0.0, 0.0, 1.0)),
            &[0.0, 0.5, 0.5, 0.0],
            1e-15,
        );
        assert_dist(
            &conditional_probabilities_hv(&q(0.6, 0.0, 0.8, 0.0)),
            &[0.36, 0.0, 0.0, 0.64],
            1e-15,
        );
    }

    #[test]
    fn probabilities_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let st = random_ququart(&mut rng);
            let alpha = rng.gen::<f64>() * PI;
            let sum4: f64 = conditional_probabilities_rotated(&st, alpha)
                .probabilities()
                .iter()
                .sum();
            assert!((sum4 - 1.0).abs() < 1e-12);
            let sum16: f64 = freq_resolved_distribution(&st, alpha)
                .probabilities()
                .iter()
                .sum();
            assert!((sum16 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rotated_closed_forms_match_rotation_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..500 {
            let st = random_ququart(&mut rng);
            let alpha = rng.gen::<f64>() * PI;
            let closed = conditional_probabilities_rotated(&st, alpha);
            let rotated = conditional_probabilities_hv(&rotate_frame(&st, alpha));
            assert_dist(&closed, rotated.probabilities(), 1e-12);
        }
    }

    #[test]
    fn rotated_reference_values() {
        let st = q(0.0, 1.0, 0.0, 0.0);
        let d = conditional_probabilities_rotated(&st, FRAC_PI_4);
        assert!((d.probabilities()[0] - 0.5).abs() < 1e-12);
        // the antisymmetric component is rotationally invariant
        let singlet = q(0.0, 0.0, 0.0, 1.0);
        for alpha in [0.1, 0.7, 1.3] {
            assert_dist(
                &conditional_probabilities_rotated(&singlet, alpha),
                &[0.0, 0.5, 0.5, 0.0],
                1e-12,
            );
        }
        assert_dist(
            &conditional_probabilities_rotated(&q(1.0, 0.0, 0.0, 0.0), 0.0),
            conditional_probabilities_hv(&q(1.0, 0.0, 0.0, 0.0)).probabilities(),
            1e-15,
        );
    }

    #[test]
    fn frequency_marginal_matches_polarization_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..500 {
            let st = random_ququart(&mut rng);
            let alpha = rng.gen::<f64>() * PI;
            let fine = freq_resolved_distribution(&st, alpha);
            let coarse = conditional_probabilities_rotated(&st, alpha);
            let p = fine.probabilities();
            for p1 in 0..2 {
                for p2 in 0..2 {
                    let mut sum = 0.0;
                    for w1 in 0..2 {
                        for w2 in 0..2 {
                            sum += p[((p1 * 2 + w1) * 2 + p2) * 2 + w2];
                        }
                    }
                    assert!((sum - coarse.probabilities()[p1 * 2 + p2]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn exchange_symmetry_of_ordered_outcomes() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..200 {
            let st = random_ququart(&mut rng);
            let p = freq_resolved_distribution(&st, rng.gen::<f64>())
                .probabilities()
                .to_vec();
            for p1 in 0..2 {
                for w1 in 0..2 {
                    for p2 in 0..2 {
                        for w2 in 0..2 {
                            let a = p[((p1 * 2 + w1) * 2 + p2) * 2 + w2];
                            let b = p[((p2 * 2 + w2) * 2 + p1) * 2 + w1];
                            assert!((a - b).abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn pooled_cross_frequency_reference_values() {
        // |B+^a + B-|^2 / 2 at a = 0
        let d = freq_resolved_distribution(&q(0.0, 1.0, 0.0, 0.0), 0.0);
        assert!((pooled_cross_frequency(&d, true) - 0.5).abs() < 1e-12);

        let d = freq_resolved_distribution(&q(0.0, FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2), 0.0);
        assert!((pooled_cross_frequency(&d, true) - 1.0).abs() < 1e-12);
        assert!(pooled_cross_frequency(&d, false).abs() < 1e-12);

        // destructive interference at phi_minus = pi
        let st = make_ququart(
            Complex64::default(),
            FRAC_1_SQRT_2.into(),
            Complex64::default(),
            Complex64::from_polar(FRAC_1_SQRT_2, PI),
            false,
        )
        .unwrap();
        let d = freq_resolved_distribution(&st, 0.0);
        assert!(pooled_cross_frequency(&d, true).abs() < 1e-12);
    }

    #[test]
    fn outcome_distribution_handles_mixed_angles() {
        // ch1 at 135 deg, ch2 at 45 deg equals the 45-deg frame's OA cell
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let st = random_ququart(&mut rng);
            let cfg = MeasurementConfig::pair(3.0 * FRAC_PI_4, FRAC_PI_4, 1, 0);
            let d = outcome_distribution(&st, &cfg);
            let frame = conditional_probabilities_rotated(&st, FRAC_PI_4);
            assert!((d.probabilities()[0] - frame.probabilities()[2]).abs() < 1e-12);
        }
    }

    #[test]
    fn simulate_degenerate_and_deterministic() {
        let st = q(1.0, 0.0, 0.0, 0.0);
        let cfg = MeasurementConfig::pair(0.0, 0.0, 1000, 42);
        let rec = simulate_coincidences(&st, &cfg);
        assert_eq!(rec.counts["AA"], 1000.0);
        assert_eq!(rec.counts["AO"] + rec.counts["OA"] + rec.counts["OO"], 0.0);

        let st2 = random_ququart(&mut ChaCha8Rng::seed_from_u64(3));
        let cfg = MeasurementConfig::pair(0.3, 0.3, 100_000, 7);
        assert_eq!(
            simulate_coincidences(&st2, &cfg),
            simulate_coincidences(&st2, &cfg)
        );
        let total: f64 = simulate_coincidences(&st2, &cfg).counts.values().sum();
        assert_eq!(total, 100_000.0);
    }

    #[test]
    fn simulate_singlet_cross_ratio_within_3_sigma() {
        let st = q(0.0, 0.0, 0.0, 1.0);
        let cfg = MeasurementConfig::pair(0.0, FRAC_PI_2, 1_000_000, 12345);
        let rec = simulate_coincidences(&st, &cfg);
        // both channels transmitting here means w_H|V = 1/2; 3 sigma = 1.5e-3
        let ratio = rec.counts["AA"] / 1e6;
        assert!((0.4985..=0.5015).contains(&ratio), "{ratio}");
    }

    #[test]
    fn simulate_chi_square_goodness_of_fit() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let st = random_ququart(&mut ChaCha8Rng::seed_from_u64(29));
        let cfg0 = MeasurementConfig::pair(0.4, 0.4, 100_000, 0);
        let exact = outcome_distribution(&st, &cfg0);
        for seed in 0..100 {
            let cfg = MeasurementConfig { seed, ..cfg0 };
            let rec = simulate_coincidences(&st, &cfg);
            let mut chi2 = 0.0;
            let mut dof = 0;
            for (label, &p) in exact.labels().iter().zip(exact.probabilities()) {
                let expected = p * cfg.n_total as f64;
                if expected < 5.0 {
                    continue;
                }
                let observed = rec.counts[*label];
                chi2 += (observed - expected).powi(2) / expected;
                dof += 1;
            }
            assert!(dof > 1);
            let p_value = 1.0 - ChiSquared::new((dof - 1) as f64).unwrap().cdf(chi2);
            assert!(p_value > 1e-3, "seed {seed}: chi2={chi2:.2} p={p_value:.2e}");
        }
    }
}

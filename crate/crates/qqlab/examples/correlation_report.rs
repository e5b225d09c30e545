//! Correlation measures of the frequency-averaged mixed polarization
//! state next to the rival two-qubit model that treats frequency as a
//! fixed label.
//!
//! The showcase state |B+| = |B-| = 1/√2 is maximally correlated in the
//! mixed-state picture (K = 2, unpolarized photons) yet the two-qubit
//! model calls it fully uncorrelated (K = 1).

use num_complex::Complex64;
use qqlab::correlations::correlation_report;
use qqlab::core_state::make_ququart;
use std::f64::consts::FRAC_1_SQRT_2;

fn main() {
    let states = [
        ("product H,H", make_ququart(1.0.into(), 0.0.into(), 0.0.into(), 0.0.into(), false)),
        (
            "|B+| = |B-| = 1/sqrt(2)",
            make_ququart(
                0.0.into(),
                FRAC_1_SQRT_2.into(),
                0.0.into(),
                FRAC_1_SQRT_2.into(),
                false,
            ),
        ),
        (
            "generic",
            make_ququart(
                Complex64::from_polar(0.5, 0.3),
                0.5.into(),
                Complex64::from_polar(0.5, -0.4),
                Complex64::from_polar(0.5, 0.7),
                false,
            ),
        ),
    ];

    for (name, q) in states {
        let q = q.unwrap();
        let r = correlation_report(&q).unwrap();
        println!("--- {name}");
        println!("  mixed polarization state: K = {:.6}  C = {:.6}  S_rel = {:.6} ({:?})", r.k_bar, r.c_bar, r.s_rel, r.s_rel_method);
        println!("  classical / total:        C_cl = {:.6}  I = {:.6}  P = {:.6}", r.c_cl, r.mutual_info, r.p_bar);
        println!("  two-qubit model:          K = {:.6}  C = {:.6}", r.k_2qb, r.c_2qb);
    }
}

//! Sweep |B-|² over the two-Bell-state family (C1 = C4 = 0) and compare
//! the concurrence of the mixed polarization state with its relative
//! entropy of entanglement.
//!
//! The two measures coincide at |B-|² ∈ {0, 1/2, 1} and the relative
//! entropy stays below the concurrence everywhere in between.

use qqlab::correlations::correlation_report;
use qqlab::core_state::make_ququart;

fn main() {
    println!("{:>10} {:>10} {:>10} {:>10}", "|B-|^2", "K", "C", "S_rel");
    for i in 0..=20 {
        let b_minus_sq = i as f64 / 20.0;
        let q = make_ququart(
            0.0.into(),
            (1.0 - b_minus_sq).sqrt().into(),
            0.0.into(),
            b_minus_sq.sqrt().into(),
            true,
        )
        .unwrap();
        let r = correlation_report(&q).unwrap();
        println!(
            "{:>10.3} {:>10.6} {:>10.6} {:>10.6}",
            b_minus_sq, r.k_bar, r.c_bar, r.s_rel
        );
    }
}

//! Biphoton polarization-frequency ququarts as two-boson states.
//!
//! The crate models pure ququart states, the mixed polarization states
//! (MPS) they become under frequency-blind detection, correlation
//! quantifiers of both pictures, a forward model of coincidence-counting
//! experiments, and the inverse problem of reconstructing all state
//! parameters from (possibly noisy) count records.
//!
//! Start from [`core_state::make_ququart`], or see the `examples/`
//! directory for one runnable program per capability. The `qqlab` binary
//! exposes the same pipeline as `synth`, `simulate`, `reconstruct`,
//! `analyze`, `compare` and `sweep` subcommands.

pub mod amplitude;
pub mod cli;
pub mod core_state;
pub mod correlations;
pub mod density_ops;
pub mod io;
pub mod measurement;
pub mod reconstruction;
pub mod sep_min;

pub use amplitude::Amplitude;
pub use core_state::{make_ququart, QuquartParams};

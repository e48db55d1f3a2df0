//! Asymptotic secret-key rates for discrete-phase-randomized mode-pairing
//! QKD.
//!
//! The crate is organized bottom-up:
//!
//! - [`series`]: pseudo-photon probabilities, the `S_k` sums and the
//!   fidelity series, all as truncated residue-class series.
//! - [`fidelity`]: basis dependence, the balance parameter and the
//!   phase-error bound.
//! - [`channel`]: analytic model of the symmetric channel, pairing and
//!   sifting statistics.
//! - [`decoy`]: two-stage linear-program estimation of pseudo-photon yields
//!   from observed gains, on an embedded bounded-variable simplex.
//! - [`keyrate`]: the key-rate pipeline, intensity optimization, sweeps and
//!   the PLOB baseline.
//! - [`mc`]: a Monte Carlo simulation of clicks and pairing that checks the
//!   analytic pairing statistics.
//! - [`cli`]: the batch front end behind the `dprmp` binary.

// `!(x > 0.0)` is used deliberately so NaN falls into the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cli;
pub mod decoy;
pub mod error;
pub mod fidelity;
pub mod keyrate;
pub mod mc;
pub mod series;

pub use error::{Error, Result};

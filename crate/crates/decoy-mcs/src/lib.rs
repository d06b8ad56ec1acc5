//! Photon-number statistics of modified coherent states and decoy-state QKD
//! security bounds.
//!
//! A modified coherent state (MCS) is a coherent state passed through a
//! squeeze-type unitary chosen so that one selected multi-photon probability
//! vanishes: with the convention `c = α²/(μν)`, `c = 1` cancels the
//! two-photon component and `c = 3` the three-photon component. Suppressing
//! early multi-photon terms weakens photon-number-splitting attacks, which
//! shows up as a longer secure distance for decoy-state BB84.
//!
//! Layered bottom-up:
//! - [`photon_stats`] — coherent/MCS photon-number distributions, plus an
//!   independent Fock-space oracle for tests;
//! - [`channel`] — fiber-loss channel model (per-photon-number yields and
//!   error rates, mixture observables);
//! - [`bounds`] — decoy-state lower/upper bounds on the single-photon yield
//!   and QBER for 2- and 3-intensity protocols;
//! - [`keyrate`] — secret key rate and secure-distance search;
//! - [`optimizer`] — intensity optimization and the ΔL-vs-c sweep.

// Validation code writes `!(x > 0.0)` on purpose: unlike `x <= 0.0`, the
// negated form also rejects NaN arguments.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod channel;
pub mod error;
pub mod keyrate;
pub mod optimizer;
pub mod photon_stats;

pub use error::{Error, Result};

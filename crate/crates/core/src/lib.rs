//! Hold-out (out-of-sample) model selection for finite-state, uniformly
//! ergodic Markov chains.
//!
//! The crate is organised bottom-up:
//!
//! * [`chain`] — transition kernels, stationary laws, mixing profiles, the
//!   pseudo-spectral gap and the markovization of higher-order chains.
//! * [`sampling`] — seeded, order-independent trajectory simulation.
//! * [`predictors`] — losses, exact/empirical risks, Bayes and ERM tables,
//!   hold-out and oracle selection.
//! * [`bounds`] — closed-form tail, expectation and oracle bounds plus noise
//!   models.
//! * [`harness`] — replicated Monte Carlo experiments checking that the
//!   bounds dominate the observed tail frequencies.

pub mod bounds;
pub mod chain;
mod error;
pub mod harness;
pub mod predictors;
pub mod sampling;

pub use error::{Error, Result};

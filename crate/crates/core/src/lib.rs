//! Markov-jammer avoidance: a radar learns a jammer's channel-hopping chain
//! from noisy energy-detector observations and hops away from it.
//!
//! The crate is organized bottom-up:
//!
//! - [`markov`]: circulant jammer chains, entropy, calibration, exact oracle
//! - [`signal`]: multi-channel received-signal environment and energy detection
//! - [`nn`]: small fully-connected and recurrent Q-networks, Adam, gradient checks
//! - [`rl`]: replay memory, Mellowmax, TD updates and the training loop
//! - [`strategies`]: random / KARAA / LARA hopping and their closed-form jam rates
//! - [`harness`]: config files, seeded sweeps and CSV output
//!
//! Channel and state indices are zero-based everywhere.

// Negated comparisons reject NaN in validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod harness;
pub mod markov;
pub mod nn;
pub mod rl;
pub mod rng;
pub mod signal;
pub mod strategies;

pub use error::{Error, Result};

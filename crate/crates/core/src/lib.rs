//! Finite-time collapse models for black boxes with correlated outputs.
//!
//! A box answering a collapse-triggering input settles on its latent outcome
//! over a finite duration. While it settles, a partner box probed at the
//! right time sees statistics that depend on the remote input. This crate
//! evaluates those statistics exactly, checks them by seeded Monte Carlo,
//! and measures the resulting signal in total variation and in bits.

// `!(x > 0.0)` style comparisons are used on purpose to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod behaviors;
pub mod cli;
pub mod collapse;
pub mod error;
pub mod mc;
pub mod quadrature;
pub mod scenarios;
pub mod signaling;

pub use error::{Error, Result};

//! Stochastic cost model for remanufacturing returns.
//!
//! Batch sizes follow a hybrid Pareto mixture: a truncated normal body
//! below a threshold and a generalized Pareto tail above it. Batches above
//! the threshold form the extreme regime, with timing given by Bernoulli
//! or two-state Markov chain draws. Each core costs `a0 * (1 - q^theta)`
//! with regime-specific parameters, and bootstrap envelopes summarize the
//! resulting cumulative cost paths.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bootstrap;
pub mod cost;
pub mod error;
pub mod evt;
pub mod io;
pub mod metrics;
pub mod optim;
pub mod pipeline;
pub mod report;
pub mod returns;
mod serde_float;

pub use error::{Result, ScormError};

//! Factor-augmented Bayesian treatment-effects model for panel outcomes.

pub mod cli;
pub mod error;
pub mod exec;
pub mod gibbs;
pub mod inference;
pub mod model;
pub mod simulator;
pub mod stats;

pub use error::{Error, Result};

#[cfg(test)]
pub(crate) mod testutil;

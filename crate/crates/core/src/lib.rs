// `!(x > 0.0)` is used on purpose throughout so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain_models;
pub mod drift_verifier;
pub mod error;
pub mod finite_chain;
pub mod harness;
pub mod monte_carlo;
pub mod numeric;
pub mod rate_calculus;
pub mod rate_fit;
pub mod rng;
pub mod series;

pub use error::{Error, Result};

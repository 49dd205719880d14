//! Deterministic random number generation, distribution sampling, special
//! functions, and summary statistics shared by the rest of the crate.
//!
//! All randomness flows through [`RngStream`]: a xoshiro256++ generator whose
//! state is derived from a `(master_seed, stream_id)` pair by a SplitMix64
//! avalanche mix. Every pipeline reserves stream ids up front, so results do
//! not depend on thread scheduling.

mod dist;
mod rng;
mod special;
mod summary;

pub use dist::{sample, validate_covariance, DistSpec, Samples};
pub use rng::{derive_substream, RngStream};
pub use special::{erf, erfc, normal_cdf, normal_pdf, normal_quantile};
pub use summary::{summary, Summary};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("covariance matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    Factorization(f64),
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("empty input")]
    EmptyInput,
    #[error("invalid distribution: {0}")]
    InvalidDist(String),
}

//! Robust linear regression when a large, arbitrary fraction of the responses
//! is corrupted by noise chosen independently of the design.
//!
//! * [`huber`]: Huber-loss estimator, its minimizer and curvature diagnostics.
//! * [`median`]: coordinate-wise median estimators (dense, bootstrapped, sparse,
//!   non-spherical) and their building blocks.
//! * [`spread`]: well-spreadness diagnostics for column spans of design matrices.
//! * [`harness`]: Monte-Carlo sweeps, aggregation and rate fitting.
//! * [`model`], [`rng`], [`io`]: data model, reproducible randomness and file formats.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod estimate;
pub mod harness;
pub mod huber;
pub mod io;
pub mod linalg;
pub mod median;
pub mod model;
pub mod rng;
pub mod serde_vec;
pub mod spread;

pub use error::{Error, Result};
pub use huber::{minimize_huber, EstimatorResult, HuberParams};
pub use median::{CovarianceEstimate, MedianConfig};
pub use model::{NoiseSpec, RegressionInstance, Truth};
pub use rng::RandomSource;

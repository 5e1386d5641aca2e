//! Coordinate-wise median estimators for Gaussian designs.
//!
//! The basic step divides every response by one covariate, keeps rows where that
//! covariate is not too small, and takes the median of the ratios. Running it on
//! fresh sample cells against the residual of the running estimate shrinks the
//! error geometrically; sparse and non-spherical variants wrap the same step.

mod bootstrap;
mod covariance;
mod iteration;
mod select;
mod sparse;

pub use bootstrap::{bootstrap_median, bootstrap_schedule, partition_cells, BootstrapOutput, TraceEntry};
pub use covariance::{
    estimate_covariance, estimate_norm_bound, fit_nonspherical, nonspherical_bootstrap, nonspherical_iteration,
    nonspherical_schedule, CovarianceEstimate,
};
pub use iteration::{multivariate_median_iteration, univariate_median};
pub use select::{select_median, select_nth};
pub use sparse::{keep_top_k, sparse_bootstrap, sparse_threshold_iteration, sparse_topk_iteration, threshold_small};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MedianConfig {
    /// Rows with `|x_ij|` below this are left out of coordinate `j`'s median.
    pub magnitude_cutoff: f64,
    /// Upper bound on `3 (1 + ||beta_star||)` used by the bootstrapped variants.
    pub delta_bound: f64,
    pub sparsity_k: Option<usize>,
    /// Apply the sign-flip plus Gaussian-jitter transform before each iteration.
    pub preprocess: bool,
}

impl Default for MedianConfig {
    fn default() -> Self {
        Self {
            magnitude_cutoff: 0.5,
            delta_bound: 3.0,
            sparsity_k: None,
            preprocess: true,
        }
    }
}

impl MedianConfig {
    pub fn with_delta(delta_bound: f64) -> Self {
        Self {
            delta_bound,
            ..Self::default()
        }
    }

    pub(crate) fn check_cutoff(&self) -> Result<()> {
        if !(self.magnitude_cutoff >= 0.0 && self.magnitude_cutoff.is_finite()) {
            return Err(Error::invalid(format!(
                "magnitude cutoff must be finite and non-negative, got {}",
                self.magnitude_cutoff
            )));
        }
        Ok(())
    }

    pub(crate) fn check_delta(&self) -> Result<()> {
        if !(self.delta_bound >= 3.0 && self.delta_bound.is_finite()) {
            return Err(Error::invalid(format!(
                "delta bound must be finite and >= 3, got {}",
                self.delta_bound
            )));
        }
        Ok(())
    }

    pub(crate) fn require_k(&self, d: usize) -> Result<usize> {
        match self.sparsity_k {
            None => Err(Error::invalid("sparse estimators need sparsity_k")),
            Some(0) => Err(Error::invalid("sparsity_k must be at least 1")),
            Some(k) if k > d => Err(Error::invalid(format!("sparsity_k = {k} exceeds dimension {d}"))),
            Some(k) => Ok(k),
        }
    }
}

/// Design where row `i` has a single nonzero entry in column `i mod d`, so noiseless
/// ratios are exact per coordinate.
#[cfg(test)]
pub(crate) fn block_design(n: usize, d: usize, seed: u64) -> nalgebra::DMatrix<f64> {
    let mut s = crate::rng::RandomSource::new(seed, 0).stream();
    let mut x = nalgebra::DMatrix::zeros(n, d);
    for i in 0..n {
        x[(i, i % d)] = s.rademacher() * (1.0 + s.uniform());
    }
    x
}

//! One entry point over every estimator, shared by the harness and the command line.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::huber::{minimize_huber, HuberParams};
use crate::linalg::ols;
use crate::median::{
    bootstrap_median, fit_nonspherical, multivariate_median_iteration, sparse_bootstrap, MedianConfig, TraceEntry,
};
use crate::model::RegressionInstance;
use crate::rng::RandomSource;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EstimatorKind {
    Huber,
    MedianIter,
    MedianBootstrap,
    SparseBootstrap(usize),
    NonsphericalBootstrap,
    OlsBaseline,
}

impl EstimatorKind {
    pub fn needs_delta(&self) -> bool {
        matches!(
            self,
            EstimatorKind::MedianBootstrap | EstimatorKind::SparseBootstrap(_) | EstimatorKind::NonsphericalBootstrap
        )
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorKind::Huber => f.write_str("huber"),
            EstimatorKind::MedianIter => f.write_str("median_iter"),
            EstimatorKind::MedianBootstrap => f.write_str("median_bootstrap"),
            EstimatorKind::SparseBootstrap(k) => write!(f, "sparse_bootstrap:{k}"),
            EstimatorKind::NonsphericalBootstrap => f.write_str("nonspherical_bootstrap"),
            EstimatorKind::OlsBaseline => f.write_str("ols_baseline"),
        }
    }
}

/// Accepts both the config spellings (`median_bootstrap`) and the short command-line ones (`median-boot`).
impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(k) = s
            .strip_prefix("sparse_bootstrap:")
            .or_else(|| s.strip_prefix("sparse-boot:"))
        {
            let k: usize = k
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("sparsity in '{s}' is not a count")))?;
            if k == 0 {
                return Err(Error::invalid("sparsity must be at least 1"));
            }
            return Ok(EstimatorKind::SparseBootstrap(k));
        }
        Ok(match s {
            "huber" => EstimatorKind::Huber,
            "median" | "median_iter" => EstimatorKind::MedianIter,
            "median-boot" | "median_bootstrap" => EstimatorKind::MedianBootstrap,
            "nonspherical" | "nonspherical_bootstrap" => EstimatorKind::NonsphericalBootstrap,
            "ols" | "ols_baseline" => EstimatorKind::OlsBaseline,
            _ => return Err(Error::Parse(format!("unknown estimator '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitOutcome {
    #[serde(with = "crate::serde_vec")]
    pub beta_hat: DVector<f64>,
    pub iterations: usize,
    pub final_grad_norm: Option<f64>,
    pub final_loss: Option<f64>,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceEntry>>,
}

/// Runs `kind` on `inst`. `delta` is required by the bootstrapped median variants.
pub fn fit(
    inst: &RegressionInstance,
    kind: EstimatorKind,
    huber: &HuberParams,
    delta: Option<f64>,
    rng: &RandomSource,
) -> Result<FitOutcome> {
    let median_cfg = |k: Option<usize>| -> Result<MedianConfig> {
        let delta_bound = match (kind.needs_delta(), delta) {
            (true, Some(v)) => v,
            (true, None) => return Err(Error::invalid(format!("estimator {kind} needs a delta bound"))),
            (false, v) => v.unwrap_or(3.0),
        };
        Ok(MedianConfig {
            delta_bound,
            sparsity_k: k,
            ..MedianConfig::default()
        })
    };
    let boot = |out: crate::median::BootstrapOutput| FitOutcome {
        iterations: out.trace.len(),
        beta_hat: out.beta_hat,
        final_grad_norm: None,
        final_loss: None,
        converged: true,
        trace: Some(out.trace),
    };
    Ok(match kind {
        EstimatorKind::Huber => {
            let r = minimize_huber(inst, huber, None)?;
            FitOutcome {
                beta_hat: r.beta_hat,
                iterations: r.iterations,
                final_grad_norm: Some(r.final_grad_norm),
                final_loss: Some(r.final_loss),
                converged: r.converged,
                trace: None,
            }
        }
        EstimatorKind::MedianIter => FitOutcome {
            beta_hat: multivariate_median_iteration(inst, &median_cfg(None)?, rng)?,
            iterations: 1,
            final_grad_norm: None,
            final_loss: None,
            converged: true,
            trace: None,
        },
        EstimatorKind::MedianBootstrap => boot(bootstrap_median(inst, &median_cfg(None)?, rng)?),
        EstimatorKind::SparseBootstrap(k) => boot(sparse_bootstrap(inst, &median_cfg(Some(k))?, rng)?),
        EstimatorKind::NonsphericalBootstrap => boot(fit_nonspherical(inst, &median_cfg(None)?, rng)?),
        EstimatorKind::OlsBaseline => FitOutcome {
            beta_hat: ols(inst.x(), inst.y())?,
            iterations: 1,
            final_grad_norm: None,
            final_loss: None,
            converged: true,
            trace: None,
        },
    })
}

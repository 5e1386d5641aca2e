use std::path::Path;
use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::aggregate::{aggregate, format_aggregate_csv, format_scaling_csv};
use super::config::{DeltaChoice, ExperimentConfig};
use crate::error::{Error, Result};
use crate::estimate::{fit, EstimatorKind};
use crate::huber::orthogonalize_columns;
use crate::median::estimate_norm_bound;
use crate::model::{build_instance, error_metrics, gaussian_design, make_noise, RegressionInstance};
use crate::rng::{hash_seed, RandomSource};

/// Caps the number of worker threads used by [`run_trials`].
pub const THREADS_ENV: &str = "ROBUST_REGRESS_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n: usize,
    pub d: usize,
    pub alpha: f64,
    pub estimator: String,
    pub trial: usize,
    pub err_param: Option<f64>,
    pub err_pred: Option<f64>,
    pub runtime_ms: Option<f64>,
    pub converged: bool,
    pub seed: u64,
    pub failure: Option<String>,
}

pub fn trial_seed(master_seed: u64, grid_index: usize, trial: usize) -> u64 {
    hash_seed(&[master_seed, grid_index as u64, trial as u64])
}

/// Design, noise and `beta_star` for one trial; identical for every estimator in the config.
pub fn trial_instance(cfg: &ExperimentConfig, n: usize, seed: u64) -> Result<RegressionInstance> {
    let d = cfg.d;
    let mut x = gaussian_design(n, d, &RandomSource::new(seed, 1))?;
    if cfg.orthogonalize {
        x = orthogonalize_columns(&x)?.xo;
    }
    let eta = make_noise(n, &cfg.noise, &RandomSource::new(seed, 2))?.values;
    let mut s = RandomSource::new(seed, 3).stream();
    let mut beta = DVector::zeros(d);
    match cfg.beta.sparsity {
        Some(k) => {
            let support = s.sample_without_replacement(d, k);
            for (&j, v) in support.iter().zip(s.unit_vector(k)) {
                beta[j] = v;
            }
        }
        None => beta = DVector::from_vec(s.unit_vector(d)),
    }
    beta *= cfg.beta.norm;
    build_instance(beta, x, eta)
}

fn run_one(
    cfg: &ExperimentConfig,
    inst: &RegressionInstance,
    kind: EstimatorKind,
    seed: u64,
) -> (Result<(f64, f64, bool)>, f64) {
    let start = Instant::now();
    let result = (|| {
        let delta = if kind.needs_delta() {
            Some(match cfg.delta {
                DeltaChoice::Oracle => 3.0 * (1.0 + inst.require_truth()?.beta_star.norm()),
                DeltaChoice::Estimate => estimate_norm_bound(inst)?,
                DeltaChoice::Fixed(v) => v,
            })
        } else {
            None
        };
        let out = fit(inst, kind, &cfg.huber, delta, &RandomSource::new(seed, 4))?;
        let m = error_metrics(&out.beta_hat, inst)?;
        if !(m.err_param.is_finite() && m.err_pred.is_finite()) {
            return Err(Error::EstimationFailure("estimate is not finite".into()));
        }
        Ok((m.err_param, m.err_pred, out.converged))
    })();
    (result, start.elapsed().as_secs_f64() * 1e3)
}

fn run_trial(cfg: &ExperimentConfig, grid_index: usize, n: usize, trial: usize) -> Vec<TrialRecord> {
    let seed = trial_seed(cfg.master_seed, grid_index, trial);
    let base = |estimator: String| TrialRecord {
        n,
        d: cfg.d,
        alpha: cfg.noise.alpha,
        estimator,
        trial,
        err_param: None,
        err_pred: None,
        runtime_ms: None,
        converged: false,
        seed,
        failure: None,
    };
    let inst = match trial_instance(cfg, n, seed) {
        Ok(inst) => inst,
        Err(e) => {
            return cfg
                .estimators
                .iter()
                .map(|k| TrialRecord {
                    failure: Some(format!("{}: {e}", e.code())),
                    ..base(k.to_string())
                })
                .collect()
        }
    };
    cfg.estimators
        .iter()
        .map(|&kind| {
            let (res, ms) = run_one(cfg, &inst, kind, seed);
            let mut rec = base(kind.to_string());
            rec.runtime_ms = cfg.timing.then_some(ms);
            match res {
                Ok((p, q, converged)) => {
                    rec.err_param = Some(p);
                    rec.err_pred = Some(q);
                    rec.converged = converged;
                }
                Err(e) => rec.failure = Some(format!("{}: {e}", e.code())),
            }
            rec
        })
        .collect()
}

/// Thread cap from the environment; `None` when unset, empty or zero.
pub fn thread_count_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) if v.trim().is_empty() => Ok(None),
        Ok(v) => {
            let k: usize = v
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("{THREADS_ENV} must be a count, got '{v}'")))?;
            Ok((k > 0).then_some(k))
        }
    }
}

/// Every (grid point, trial, estimator) record, in that order regardless of scheduling.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let tasks: Vec<(usize, usize, usize)> = cfg
        .grid
        .iter()
        .enumerate()
        .flat_map(|(g, &n)| (0..cfg.trials).map(move |t| (g, n, t)))
        .collect();
    let work = || -> Vec<TrialRecord> {
        tasks
            .par_iter()
            .map(|&(g, n, t)| run_trial(cfg, g, n, t))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    };
    match thread_count_from_env()? {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::invalid(format!("cannot start thread pool: {e}")))?;
            Ok(pool.install(work))
        }
        None => Ok(work()),
    }
}

pub fn format_records_jsonl(records: &[TrialRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

/// Writes `records.jsonl`, `aggregate.csv` and, with three or more grid points, `scaling.csv`.
pub fn write_outputs(dir: &Path, records: &[TrialRecord]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("records.jsonl"), format_records_jsonl(records)?)?;
    let rows = aggregate(records)?;
    std::fs::write(dir.join("aggregate.csv"), format_aggregate_csv(&rows))?;
    if let Some(text) = format_scaling_csv(&rows) {
        std::fs::write(dir.join("scaling.csv"), text)?;
    }
    Ok(())
}

use nalgebra::DVector;

use super::bootstrap::{bootstrap_schedule, run_cells, BootstrapOutput};
use super::iteration::multivariate_median_iteration;
use super::MedianConfig;
use crate::error::{Error, Result};
use crate::model::RegressionInstance;
use crate::rng::RandomSource;

/// Keeps the `k` largest magnitudes (lower index wins ties) and zeroes the rest.
pub fn keep_top_k(v: &DVector<f64>, k: usize) -> DVector<f64> {
    if k >= v.len() {
        return v.clone();
    }
    let mut order: Vec<usize> = (0..v.len()).collect();
    // Stable sort keeps ascending index among equal magnitudes.
    order.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()));
    let mut out = DVector::zeros(v.len());
    for &j in &order[..k] {
        out[j] = v[j];
    }
    out
}

/// Zeroes entries with `|v_j| < threshold`.
pub fn threshold_small(v: &DVector<f64>, threshold: f64) -> DVector<f64> {
    v.map(|x| if x.abs() < threshold { 0.0 } else { x })
}

pub fn sparse_topk_iteration(
    inst: &RegressionInstance,
    cfg: &MedianConfig,
    rng: &RandomSource,
) -> Result<DVector<f64>> {
    let k = cfg.require_k(inst.d())?;
    Ok(keep_top_k(&multivariate_median_iteration(inst, cfg, rng)?, k))
}

fn threshold_iteration(
    inst: &RegressionInstance,
    cfg: &MedianConfig,
    k: usize,
    delta: f64,
    rng: &RandomSource,
) -> Result<DVector<f64>> {
    let raw = multivariate_median_iteration(inst, cfg, rng)?;
    Ok(threshold_small(&raw, delta / (100.0 * (k as f64).sqrt())))
}

/// Median iteration followed by zeroing every coordinate below `delta_bound / (100 sqrt(k))`.
pub fn sparse_threshold_iteration(
    inst: &RegressionInstance,
    cfg: &MedianConfig,
    rng: &RandomSource,
) -> Result<DVector<f64>> {
    let k = cfg.require_k(inst.d())?;
    if !(cfg.delta_bound > 0.0 && cfg.delta_bound.is_finite()) {
        return Err(Error::invalid(format!(
            "delta bound must be finite and positive, got {}",
            cfg.delta_bound
        )));
    }
    threshold_iteration(inst, cfg, k, cfg.delta_bound, rng)
}

/// Thresholded iterations with a halving bound, then one top-`k` iteration on the final half.
pub fn sparse_bootstrap(inst: &RegressionInstance, cfg: &MedianConfig, rng: &RandomSource) -> Result<BootstrapOutput> {
    let k = cfg.require_k(inst.d())?;
    cfg.check_cutoff()?;
    cfg.check_delta()?;
    let sizes = bootstrap_schedule(inst.n(), cfg.delta_bound)?;
    let t = sizes.len();
    run_cells(inst, &sizes, rng, |i, sub, r| {
        if i < t {
            threshold_iteration(sub, cfg, k, sparse_delta(cfg.delta_bound, i), r)
        } else {
            sparse_topk_iteration(sub, cfg, r)
        }
    })
}

/// Bound used by thresholded iteration `i` (1-based): `delta / 2^(i-1)`.
pub(crate) fn sparse_delta(delta: f64, i: usize) -> f64 {
    delta / 2f64.powi(i as i32 - 1)
}

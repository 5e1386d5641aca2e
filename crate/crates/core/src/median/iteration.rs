use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::select::select_median;
use super::MedianConfig;
use crate::error::{Error, Result};
use crate::model::{preprocess_symmetrize, RegressionInstance};
use crate::rng::RandomSource;

/// Median of `y_i / x_ij` over rows with `|x_ij| >= cutoff`; `None` when no row qualifies.
pub(crate) fn column_median(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    j: usize,
    cutoff: f64,
    buf: &mut Vec<f64>,
) -> Option<f64> {
    buf.clear();
    buf.extend(
        x.column(j)
            .iter()
            .zip(y.iter())
            .filter(|(xi, _)| xi.abs() >= cutoff)
            .map(|(xi, yi)| yi / xi),
    );
    select_median(buf).ok()
}

fn prepared(inst: &RegressionInstance, cfg: &MedianConfig, rng: &RandomSource) -> Option<RegressionInstance> {
    cfg.preprocess.then(|| preprocess_symmetrize(inst, rng))
}

/// Single-covariate median estimator.
pub fn univariate_median(inst: &RegressionInstance, cfg: &MedianConfig, rng: &RandomSource) -> Result<f64> {
    if inst.d() != 1 {
        return Err(Error::invalid(format!(
            "univariate estimator needs d = 1, got d = {}",
            inst.d()
        )));
    }
    cfg.check_cutoff()?;
    let pre = prepared(inst, cfg, rng);
    let work = pre.as_ref().unwrap_or(inst);
    column_median(
        work.x(),
        work.y(),
        0,
        cfg.magnitude_cutoff,
        &mut Vec::with_capacity(work.n()),
    )
    .ok_or_else(|| Error::EstimationFailure(format!("no row has |x| >= {} for the median", cfg.magnitude_cutoff)))
}

/// One shared preprocessing pass, then a per-coordinate median against each column.
pub fn multivariate_median_iteration(
    inst: &RegressionInstance,
    cfg: &MedianConfig,
    rng: &RandomSource,
) -> Result<DVector<f64>> {
    cfg.check_cutoff()?;
    let pre = prepared(inst, cfg, rng);
    let work = pre.as_ref().unwrap_or(inst);
    let n = work.n();
    let medians: Vec<f64> = (0..work.d())
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(n),
            |buf, j| {
                column_median(work.x(), work.y(), j, cfg.magnitude_cutoff, buf).ok_or_else(|| {
                    Error::EstimationFailure(format!("coordinate {j}: no row has |x_ij| >= {}", cfg.magnitude_cutoff))
                })
            },
        )
        .collect::<Result<_>>()?;
    Ok(DVector::from_vec(medians))
}

use serde::Serialize;

use super::run::TrialRecord;
use crate::error::{Error, Result};
use crate::median::select_median;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    pub q05: f64,
    pub q95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub n: usize,
    pub d: usize,
    pub alpha: f64,
    pub estimator: String,
    pub metric: String,
    #[serde(flatten)]
    pub summary: Summary,
}

/// `sorted[floor(q (len - 1))]` on an ascending slice.
pub fn quantile_lower(sorted: &[f64], q: f64) -> f64 {
    let idx = (q * (sorted.len() - 1) as f64).floor() as usize;
    sorted[idx.min(sorted.len() - 1)]
}

pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::invalid("cannot summarize an empty group"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    Ok(Summary {
        // Clamp against rounding so that the mean never leaves [min, max].
        mean: mean.clamp(sorted[0], sorted[sorted.len() - 1]),
        median: select_median(&mut values.to_vec())?,
        q05: quantile_lower(&sorted, 0.05),
        q95: quantile_lower(&sorted, 0.95),
    })
}

const METRICS: [&str; 2] = ["err_param", "err_pred"];

/// `(n, d, alpha bits, estimator)`
type GroupKey = (usize, usize, u64, String);

/// One row per (grid point, estimator, metric), in order of first appearance; failed trials are skipped.
pub fn aggregate(records: &[TrialRecord]) -> Result<Vec<AggregateRow>> {
    if records.is_empty() {
        return Err(Error::invalid("no records to aggregate"));
    }
    let mut groups: Vec<(GroupKey, Vec<&TrialRecord>)> = Vec::new();
    for r in records {
        let key = (r.n, r.d, r.alpha.to_bits(), r.estimator.clone());
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    let mut rows = Vec::new();
    for ((n, d, alpha, estimator), members) in groups {
        for metric in METRICS {
            let values: Vec<f64> = members
                .iter()
                .filter_map(|r| if metric == "err_param" { r.err_param } else { r.err_pred })
                .collect();
            if values.is_empty() {
                continue;
            }
            rows.push(AggregateRow {
                n,
                d,
                alpha: f64::from_bits(alpha),
                estimator: estimator.clone(),
                metric: metric.to_string(),
                summary: summarize(&values)?,
            });
        }
    }
    Ok(rows)
}

pub fn format_aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from("n,d,alpha,estimator,metric,mean,median,q05,q95\n");
    for r in rows {
        let s = r.summary;
        out.push_str(&format!(
            "{},{},{},{},{},{:e},{:e},{:e},{:e}\n",
            r.n, r.d, r.alpha, r.estimator, r.metric, s.mean, s.median, s.q05, s.q95
        ));
    }
    out
}

/// Least-squares slope of `ln(err)` against `ln(n)`.
pub fn scaling_fit(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::invalid(format!(
            "scaling fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(&(n, e)) = points
        .iter()
        .find(|&&(n, e)| !(n > 0.0 && e > 0.0 && n.is_finite() && e.is_finite()))
    {
        return Err(Error::invalid(format!(
            "scaling fit needs positive finite values, got ({n}, {e})"
        )));
    }
    let k = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("scaling fit needs at least two distinct sample sizes"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Median-error slopes per (estimator, metric) when the grid has at least three sample sizes.
pub(crate) fn format_scaling_csv(rows: &[AggregateRow]) -> Option<String> {
    let mut keys: Vec<(usize, u64, &str, &str)> = Vec::new();
    for r in rows {
        let key = (r.d, r.alpha.to_bits(), r.estimator.as_str(), r.metric.as_str());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let mut out = String::from("d,alpha,estimator,metric,slope\n");
    let mut any = false;
    for (d, alpha, est, metric) in keys {
        let points: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.d == d && r.alpha.to_bits() == alpha && r.estimator == est && r.metric == metric)
            .map(|r| (r.n as f64, r.summary.median))
            .collect();
        if let Ok(slope) = scaling_fit(&points) {
            any = true;
            out.push_str(&format!("{d},{},{est},{metric},{slope:e}\n", f64::from_bits(alpha)));
        }
    }
    any.then_some(out)
}

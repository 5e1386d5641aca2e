use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::iteration::multivariate_median_iteration;
use super::MedianConfig;
use crate::error::{Error, Result};
use crate::model::RegressionInstance;
use crate::rng::RandomSource;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub cell_size: usize,
    pub increment_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapOutput {
    pub beta_hat: DVector<f64>,
    pub trace: Vec<TraceEntry>,
}

pub(crate) fn ceil_ln(x: f64) -> usize {
    x.ln().ceil().max(0.0) as usize
}

/// Cell sizes for `ceil(ln delta)` iterations: equal cells of `n / (2 (t - 1))`, then a final half.
pub fn bootstrap_schedule(n: usize, delta: f64) -> Result<Vec<usize>> {
    if !(delta >= 3.0 && delta.is_finite()) {
        return Err(Error::invalid(format!(
            "delta bound must be finite and >= 3, got {delta}"
        )));
    }
    let t = ceil_ln(delta);
    let mut sizes = vec![n / (2 * (t - 1)); t - 1];
    sizes.push(n / 2);
    Ok(sizes)
}

/// Disjoint row cells taken consecutively from one random permutation of `0..n`.
pub fn partition_cells(n: usize, sizes: &[usize], rng: &RandomSource) -> Result<Vec<Vec<usize>>> {
    let total: usize = sizes.iter().sum();
    if total > n {
        return Err(Error::invalid(format!("cells need {total} rows but only {n} exist")));
    }
    let perm = rng.stream().permutation(n);
    let mut start = 0;
    Ok(sizes
        .iter()
        .map(|&len| {
            let cell = perm[start..start + len].to_vec();
            start += len;
            cell
        })
        .collect())
}

pub(crate) fn check_cells(n: usize, sizes: &[usize]) -> Result<()> {
    if let Some(i) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::invalid(format!(
            "bootstrap cell {} is empty with n = {n}; use more samples or a smaller delta bound",
            i + 1
        )));
    }
    Ok(())
}

/// Runs `step` on each cell's residual instance and accumulates the increments.
///
/// The permutation comes from `rng.derive(0)`; iteration `i` (1-based) draws from `rng.derive(i)`.
pub(crate) fn run_cells<F>(
    inst: &RegressionInstance,
    sizes: &[usize],
    rng: &RandomSource,
    mut step: F,
) -> Result<BootstrapOutput>
where
    F: FnMut(usize, &RegressionInstance, &RandomSource) -> Result<DVector<f64>>,
{
    check_cells(inst.n(), sizes)?;
    let cells = partition_cells(inst.n(), sizes, &rng.derive(0))?;
    let mut beta = DVector::zeros(inst.d());
    let mut trace = Vec::with_capacity(cells.len());
    for (k, cell) in cells.iter().enumerate() {
        let iteration = k + 1;
        let sub = inst.residual_subset(cell, &beta);
        let inc = step(iteration, &sub, &rng.derive(iteration as u64))?;
        trace.push(TraceEntry {
            iteration,
            cell_size: cell.len(),
            increment_norm: inc.norm(),
        });
        beta += inc;
    }
    Ok(BootstrapOutput { beta_hat: beta, trace })
}

/// Dense estimator: median iterations on fresh cells against the running residual.
pub fn bootstrap_median(inst: &RegressionInstance, cfg: &MedianConfig, rng: &RandomSource) -> Result<BootstrapOutput> {
    cfg.check_cutoff()?;
    cfg.check_delta()?;
    let sizes = bootstrap_schedule(inst.n(), cfg.delta_bound)?;
    run_cells(inst, &sizes, rng, |_, sub, r| {
        multivariate_median_iteration(sub, cfg, r)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_instance, gaussian_design, make_noise, NoiseSpec, OutlierPattern};
    use proptest::prelude::*;
    use std::collections::HashSet;

    #[test]
    fn schedule_lengths() {
        assert_eq!(bootstrap_schedule(100, 3.0).unwrap(), vec![50, 50]);
        assert_eq!(bootstrap_schedule(1000, 30.0).unwrap(), vec![166, 166, 166, 500]);
        assert_eq!(bootstrap_schedule(10, 1e4).unwrap().len(), 10);
        assert!(bootstrap_schedule(100, 2.9).is_err());
        assert!(bootstrap_schedule(100, f64::INFINITY).is_err());
    }

    #[test]
    fn empty_cell_is_reported() {
        let x = gaussian_design(1, 2, &RandomSource::new(0, 0)).unwrap();
        let inst = RegressionInstance::new(x, DVector::zeros(1)).unwrap();
        match bootstrap_median(&inst, &MedianConfig::with_delta(3.0), &RandomSource::new(0, 1)) {
            Err(Error::InvalidArgument(msg)) => assert!(msg.contains("more samples")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn noiseless_recovers_in_one_step() {
        let x = crate::median::block_design(400, 3, 2);
        let beta = DVector::from_vec(vec![1.0, -4.0, 2.5]);
        let inst = build_instance(beta.clone(), x, DVector::zeros(400)).unwrap();
        let cfg = MedianConfig {
            preprocess: false,
            ..MedianConfig::with_delta(30.0)
        };
        let out = bootstrap_median(&inst, &cfg, &RandomSource::new(2, 1)).unwrap();
        assert_eq!(out.trace.len(), 4);
        assert!((&out.beta_hat - &beta).norm() < 1e-12);
        assert!((out.trace[0].increment_norm - beta.norm()).abs() < 1e-12);
        for e in &out.trace[1..] {
            assert!(e.increment_norm < 1e-12, "{e:?}");
        }
        assert_eq!(
            out.trace.iter().map(|e| e.cell_size).collect::<Vec<_>>(),
            vec![66, 66, 66, 200]
        );
    }

    #[test]
    fn spike_noise_is_resisted() {
        let n = 20_000;
        let x = gaussian_design(n, 5, &RandomSource::new(9, 0)).unwrap();
        let eta = make_noise(
            n,
            &NoiseSpec::new(0.3, OutlierPattern::ConstantSpike(1e6)),
            &RandomSource::new(9, 1),
        )
        .unwrap();
        let beta = DVector::from_element(5, 1.0);
        let inst = build_instance(beta.clone(), x, eta.values).unwrap();
        let delta = 3.0 * (1.0 + beta.norm());
        let out = bootstrap_median(&inst, &MedianConfig::with_delta(delta), &RandomSource::new(9, 2)).unwrap();
        assert!((&out.beta_hat - &beta).norm() < 0.5, "{}", out.beta_hat);
    }

    proptest! {
        #[test]
        fn cells_are_disjoint_and_sized(n in 1usize..400, delta in 3.0f64..1e5, seed: u64) {
            let sizes = bootstrap_schedule(n, delta).unwrap();
            prop_assert!(sizes.iter().sum::<usize>() <= n);
            let rng = RandomSource::new(seed, 3);
            let cells = partition_cells(n, &sizes, &rng).unwrap();
            let again = partition_cells(n, &sizes, &rng).unwrap();
            prop_assert_eq!(&cells, &again);
            let mut seen = HashSet::new();
            for (cell, &len) in cells.iter().zip(&sizes) {
                prop_assert_eq!(cell.len(), len);
                for &i in cell {
                    prop_assert!(i < n);
                    prop_assert!(seen.insert(i));
                }
            }
        }
    }
}

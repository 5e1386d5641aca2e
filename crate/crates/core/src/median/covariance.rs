use nalgebra::{DMatrix, DVector};

use super::bootstrap::{ceil_ln, run_cells, BootstrapOutput};
use super::iteration::multivariate_median_iteration;
use super::MedianConfig;
use crate::error::{Error, Result};
use crate::linalg::{inverse_sqrt_spd, ols};
use crate::model::RegressionInstance;
use crate::rng::RandomSource;

const EIGEN_FLOOR: f64 = 1e-12;

/// Positive-definite covariance estimate with its cached symmetric inverse square root.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    sigma_hat: DMatrix<f64>,
    source_sample_count: usize,
    inv_sqrt: DMatrix<f64>,
}

impl CovarianceEstimate {
    pub fn new(sigma_hat: DMatrix<f64>, source_sample_count: usize) -> Result<Self> {
        if !sigma_hat.is_square() || sigma_hat.nrows() == 0 {
            return Err(Error::shape(format!(
                "covariance must be square and non-empty, got {:?}",
                sigma_hat.shape()
            )));
        }
        let d = sigma_hat.nrows();
        for i in 0..d {
            for j in 0..i {
                if (sigma_hat[(i, j)] - sigma_hat[(j, i)]).abs() > 1e-12 {
                    return Err(Error::invalid(format!("covariance is not symmetric at ({i}, {j})")));
                }
            }
        }
        let inv_sqrt = inverse_sqrt_spd(&sigma_hat, EIGEN_FLOOR)?;
        Ok(Self {
            sigma_hat,
            source_sample_count,
            inv_sqrt,
        })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            sigma_hat: DMatrix::identity(d, d),
            source_sample_count: 0,
            inv_sqrt: DMatrix::identity(d, d),
        }
    }

    pub fn sigma_hat(&self) -> &DMatrix<f64> {
        &self.sigma_hat
    }

    pub fn source_sample_count(&self) -> usize {
        self.source_sample_count
    }

    pub fn inv_sqrt(&self) -> &DMatrix<f64> {
        &self.inv_sqrt
    }

    pub fn dim(&self) -> usize {
        self.sigma_hat.nrows()
    }
}

/// Second-moment matrix of the first `floor(n/2)` rows, normalized by that row count.
pub fn estimate_covariance(x: &DMatrix<f64>) -> Result<CovarianceEstimate> {
    let (n, d) = x.shape();
    let half = n / 2;
    if half < d || half == 0 {
        return Err(Error::invalid(format!(
            "covariance needs floor(n/2) >= d, got n = {n}, d = {d}"
        )));
    }
    let head = x.rows(0, half);
    let mut sigma = head.tr_mul(&head) / half as f64;
    for i in 0..d {
        for j in 0..i {
            sigma[(i, j)] = sigma[(j, i)];
        }
    }
    CovarianceEstimate::new(sigma, half)
}

/// Data-driven stand-in for `3 (1 + ||beta_star||)` from least squares on the first half.
pub fn estimate_norm_bound(inst: &RegressionInstance) -> Result<f64> {
    let half = inst.n() / 2;
    if half < inst.d() || half == 0 {
        return Err(Error::SingularMatrix(format!(
            "first half has {half} rows for {} covariates",
            inst.d()
        )));
    }
    let x = inst.x().rows(0, half).into_owned();
    let y = inst.y().rows(0, half).into_owned();
    let beta = ols(&x, &y)?;
    let resid = (&y - &x * &beta).norm();
    let delta = 3.0 * (1.0 + beta.norm() + (inst.d() as f64).sqrt() * resid / half as f64);
    Ok(delta.max(3.0))
}

/// Median iteration on the whitened design `X Sigma^{-1/2}`, mapped back by `Sigma^{-1/2}`.
pub fn nonspherical_iteration(
    inst: &RegressionInstance,
    cfg: &MedianConfig,
    sigma_hat: &CovarianceEstimate,
    rng: &RandomSource,
) -> Result<DVector<f64>> {
    if sigma_hat.dim() != inst.d() {
        return Err(Error::shape(format!(
            "covariance is {0}x{0} for d = {1}",
            sigma_hat.dim(),
            inst.d()
        )));
    }
    let w = sigma_hat.inv_sqrt();
    let whitened = RegressionInstance::new(inst.x() * w, inst.y().clone())?;
    let inner = multivariate_median_iteration(&whitened, cfg, rng)?;
    Ok(w * inner)
}

/// `ceil(ln delta)` cells of `n / (2 t1)` followed by `ceil(ln n)` cells of `n / (2 t2)`.
pub fn nonspherical_schedule(n: usize, delta: f64) -> Result<Vec<usize>> {
    if !(delta >= 3.0 && delta.is_finite()) {
        return Err(Error::invalid(format!(
            "delta bound must be finite and >= 3, got {delta}"
        )));
    }
    let t1 = ceil_ln(delta);
    let t2 = ceil_ln(n.max(1) as f64);
    let mut sizes = vec![n / (2 * t1); t1];
    if t2 > 0 {
        sizes.extend(std::iter::repeat_n(n / (2 * t2), t2));
    }
    Ok(sizes)
}

pub fn nonspherical_bootstrap(
    inst: &RegressionInstance,
    cfg: &MedianConfig,
    sigma_hat: &CovarianceEstimate,
    rng: &RandomSource,
) -> Result<BootstrapOutput> {
    cfg.check_cutoff()?;
    cfg.check_delta()?;
    let sizes = nonspherical_schedule(inst.n(), cfg.delta_bound)?;
    run_cells(inst, &sizes, rng, |_, sub, r| {
        nonspherical_iteration(sub, cfg, sigma_hat, r)
    })
}

/// Covariance from the first half of the rows, bootstrap on the second half only.
pub fn fit_nonspherical(inst: &RegressionInstance, cfg: &MedianConfig, rng: &RandomSource) -> Result<BootstrapOutput> {
    let sigma = estimate_covariance(inst.x())?;
    let half = inst.n() / 2;
    let rows: Vec<usize> = (half..inst.n()).collect();
    let second = inst.residual_subset(&rows, &DVector::zeros(inst.d()));
    nonspherical_bootstrap(&second, cfg, &sigma, rng)
}

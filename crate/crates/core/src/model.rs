//! Regression data model, oblivious noise generators and the two
//! sign-randomizing preprocessing transforms.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomSource;

/// Ground truth retained alongside an instance for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub beta_star: DVector<f64>,
    pub eta: DVector<f64>,
}

/// A design matrix `x` (`n` samples by `d` covariates) with responses `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionInstance {
    x: DMatrix<f64>,
    y: DVector<f64>,
    truth: Option<Truth>,
}

impl RegressionInstance {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let (n, d) = x.shape();
        if n == 0 || d == 0 {
            return Err(Error::invalid(format!("design must be non-empty, got {n}x{d}")));
        }
        if y.len() != n {
            return Err(Error::shape(format!("y has {} entries, design has {n} rows", y.len())));
        }
        Ok(Self { x, y, truth: None })
    }

    /// Attaches ground truth after checking `y = x * beta_star + eta` to `1e-9` relative.
    pub fn with_truth(mut self, truth: Truth) -> Result<Self> {
        if truth.beta_star.len() != self.d() || truth.eta.len() != self.n() {
            return Err(Error::shape(format!(
                "truth has beta_star of length {} and eta of length {} for a {}x{} design",
                truth.beta_star.len(),
                truth.eta.len(),
                self.n(),
                self.d()
            )));
        }
        let fitted = &self.x * &truth.beta_star + &truth.eta;
        for (a, b) in fitted.iter().zip(self.y.iter()) {
            if (a - b).abs() > 1e-9 * (1.0 + a.abs().max(b.abs())) {
                return Err(Error::invalid("truth is inconsistent with y = X beta_star + eta"));
            }
        }
        self.truth = Some(truth);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn truth(&self) -> Option<&Truth> {
        self.truth.as_ref()
    }

    pub fn require_truth(&self) -> Result<&Truth> {
        self.truth.as_ref().ok_or(Error::MissingTruth)
    }

    pub fn into_parts(self) -> (DMatrix<f64>, DVector<f64>, Option<Truth>) {
        (self.x, self.y, self.truth)
    }

    pub fn without_truth(&self) -> Self {
        Self {
            x: self.x.clone(),
            y: self.y.clone(),
            truth: None,
        }
    }

    /// Rows `rows` (in that order) with responses `y - x * offset`; truth is dropped.
    pub fn residual_subset(&self, rows: &[usize], offset: &DVector<f64>) -> Self {
        let x = self.x.select_rows(rows);
        let fitted = &x * offset;
        let y = DVector::from_iterator(rows.len(), rows.iter().zip(fitted.iter()).map(|(&i, f)| self.y[i] - f));
        Self { x, y, truth: None }
    }
}

/// Magnitude law of the outlier entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OutlierPattern {
    /// `±magnitude` with a random sign.
    ConstantSpike(f64),
    /// `sigma * N(0,1)`.
    ScaledGaussian(f64),
    /// Random sign times a Pareto(shape) variate with scale 1.
    HeavyTail(f64),
}

/// Law of the inlier entries; draws are clipped to `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InlierLaw {
    Zero,
    UniformPm1,
    Gaussian(f64),
}

/// Where the inlier slots go.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Placement {
    /// Chosen uniformly without replacement.
    Random,
    /// The first `ceil(alpha n)` positions.
    Prefix,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub alpha: f64,
    pub pattern: OutlierPattern,
    pub inlier_law: InlierLaw,
    pub placement: Placement,
}

impl NoiseSpec {
    pub fn new(alpha: f64, pattern: OutlierPattern) -> Self {
        Self {
            alpha,
            pattern,
            inlier_law: InlierLaw::Zero,
            placement: Placement::Random,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        match self.pattern {
            OutlierPattern::ConstantSpike(m) if !m.is_finite() => {
                return Err(Error::invalid("spike magnitude must be finite"))
            }
            OutlierPattern::ScaledGaussian(s) if !(s.is_finite() && s >= 0.0) => {
                return Err(Error::invalid("gaussian outlier sigma must be finite and non-negative"))
            }
            OutlierPattern::HeavyTail(shape) if !(shape > 0.0 && shape.is_finite()) => {
                return Err(Error::invalid("pareto shape must be positive"))
            }
            _ => {}
        }
        if let InlierLaw::Gaussian(s) = self.inlier_law {
            if !(0.0..=0.5).contains(&s) {
                return Err(Error::invalid(format!("inlier sigma must lie in [0, 1/2], got {s}")));
            }
        }
        Ok(())
    }

    /// Number of inlier slots, `ceil(alpha n)`, robust to the rounding of `alpha * n`.
    pub fn inlier_count(&self, n: usize) -> usize {
        let x = self.alpha * n as f64;
        let r = x.round();
        let k = if (x - r).abs() <= 1e-9 * x.max(1.0) {
            r
        } else {
            x.ceil()
        };
        (k as usize).min(n)
    }
}

/// A generated noise vector together with its inlier positions (ascending).
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseVector {
    pub values: DVector<f64>,
    pub inliers: Vec<usize>,
}

/// `n x d` design with i.i.d. standard normal entries, filled row by row.
pub fn gaussian_design(n: usize, d: usize, rng: &RandomSource) -> Result<DMatrix<f64>> {
    if n == 0 || d == 0 {
        return Err(Error::invalid(format!(
            "design dimensions must be positive, got {n}x{d}"
        )));
    }
    let mut s = rng.stream();
    let mut x = DMatrix::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            x[(i, j)] = s.normal();
        }
    }
    Ok(x)
}

/// Oblivious noise: `ceil(alpha n)` inlier slots drawn from the inlier law
/// (clipped to `[-1,1]`), the remaining slots from the outlier pattern.
pub fn make_noise(n: usize, spec: &NoiseSpec, rng: &RandomSource) -> Result<NoiseVector> {
    spec.validate()?;
    let k = spec.inlier_count(n);
    let mut s = rng.stream();
    let mut inliers = match spec.placement {
        Placement::Random => s.sample_without_replacement(n, k),
        Placement::Prefix => (0..k).collect(),
    };
    inliers.sort_unstable();
    let mut is_inlier = vec![false; n];
    for &i in &inliers {
        is_inlier[i] = true;
    }
    let mut values = DVector::zeros(n);
    for i in 0..n {
        values[i] = if is_inlier[i] {
            let v = match spec.inlier_law {
                InlierLaw::Zero => 0.0,
                InlierLaw::UniformPm1 => 2.0 * s.uniform() - 1.0,
                InlierLaw::Gaussian(sigma) => sigma * s.normal(),
            };
            v.clamp(-1.0, 1.0)
        } else {
            match spec.pattern {
                OutlierPattern::ConstantSpike(m) => s.rademacher() * m,
                OutlierPattern::ScaledGaussian(sigma) => sigma * s.normal(),
                OutlierPattern::HeavyTail(shape) => {
                    let u = 1.0 - s.uniform();
                    s.rademacher() * u.powf(-1.0 / shape)
                }
            }
        };
    }
    Ok(NoiseVector { values, inliers })
}

/// `y = x * beta_star + eta`, truth retained.
pub fn build_instance(beta_star: DVector<f64>, x: DMatrix<f64>, eta: DVector<f64>) -> Result<RegressionInstance> {
    let (n, d) = x.shape();
    if beta_star.len() != d {
        return Err(Error::shape(format!(
            "beta_star has length {}, design has {d} columns",
            beta_star.len()
        )));
    }
    if eta.len() != n {
        return Err(Error::shape(format!(
            "eta has length {}, design has {n} rows",
            eta.len()
        )));
    }
    if n == 0 || d == 0 {
        return Err(Error::invalid("design must be non-empty"));
    }
    let y = &x * &beta_star + &eta;
    Ok(RegressionInstance {
        x,
        y,
        truth: Some(Truth { beta_star, eta }),
    })
}

/// Sign flip plus Gaussian jitter of every response: `y'_i = s_i y_i + w_i`, `x'_i = s_i x_i`.
pub fn preprocess_symmetrize(inst: &RegressionInstance, rng: &RandomSource) -> RegressionInstance {
    let n = inst.n();
    let mut s = rng.stream();
    let mut signs = Vec::with_capacity(n);
    let mut jitter = Vec::with_capacity(n);
    for _ in 0..n {
        signs.push(s.rademacher());
        jitter.push(s.normal());
    }
    symmetrize_with(inst, &signs, &jitter).expect("lengths match by construction")
}

/// [`preprocess_symmetrize`] with explicit signs and jitter.
pub fn symmetrize_with(inst: &RegressionInstance, signs: &[f64], jitter: &[f64]) -> Result<RegressionInstance> {
    let n = inst.n();
    if signs.len() != n || jitter.len() != n {
        return Err(Error::shape("signs and jitter must have one entry per row"));
    }
    let mut x = inst.x.clone();
    let mut y = inst.y.clone();
    for i in 0..n {
        let sigma = signs[i];
        y[i] = sigma * y[i] + jitter[i];
        if sigma != 1.0 {
            let mut row = x.row_mut(i);
            row *= sigma;
        }
    }
    let truth = inst.truth.as_ref().map(|t| Truth {
        beta_star: t.beta_star.clone(),
        eta: DVector::from_iterator(n, (0..n).map(|i| signs[i] * t.eta[i] + jitter[i])),
    });
    Ok(RegressionInstance { x, y, truth })
}

/// `n` rows drawn uniformly with replacement, each multiplied by an independent sign.
pub fn resample_instance(inst: &RegressionInstance, rng: &RandomSource) -> RegressionInstance {
    let n = inst.n();
    let mut s = rng.stream();
    let mut indices = Vec::with_capacity(n);
    let mut signs = Vec::with_capacity(n);
    for _ in 0..n {
        indices.push(s.index_below(n));
        signs.push(s.rademacher());
    }
    resample_with(inst, &indices, &signs).expect("indices in range by construction")
}

/// [`resample_instance`] with explicit row indices and signs.
pub fn resample_with(inst: &RegressionInstance, indices: &[usize], signs: &[f64]) -> Result<RegressionInstance> {
    let n = inst.n();
    if indices.len() != signs.len() {
        return Err(Error::shape("indices and signs must have equal length"));
    }
    if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
        return Err(Error::invalid(format!("row index {bad} out of range for {n} rows")));
    }
    let m = indices.len();
    let mut x = inst.x.select_rows(indices);
    for (i, &sigma) in signs.iter().enumerate() {
        if sigma != 1.0 {
            let mut row = x.row_mut(i);
            row *= sigma;
        }
    }
    let y = DVector::from_iterator(m, indices.iter().zip(signs).map(|(&g, &s)| s * inst.y[g]));
    let truth = inst.truth.as_ref().map(|t| Truth {
        beta_star: t.beta_star.clone(),
        eta: DVector::from_iterator(m, indices.iter().zip(signs).map(|(&g, &s)| s * t.eta[g])),
    });
    Ok(RegressionInstance { x, y, truth })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    /// `||beta_hat - beta_star||^2`
    pub err_param: f64,
    /// `(1/n) ||X (beta_hat - beta_star)||^2`
    pub err_pred: f64,
}

pub fn error_metrics(beta_hat: &DVector<f64>, inst: &RegressionInstance) -> Result<ErrorMetrics> {
    let truth = inst.require_truth()?;
    if beta_hat.len() != inst.d() {
        return Err(Error::shape(format!(
            "estimate has length {}, expected {}",
            beta_hat.len(),
            inst.d()
        )));
    }
    let diff = beta_hat - &truth.beta_star;
    let pred = &inst.x * &diff;
    Ok(ErrorMetrics {
        err_param: diff.norm_squared(),
        err_pred: pred.norm_squared() / inst.n() as f64,
    })
}

use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimate::EstimatorKind;
use crate::huber::HuberParams;
use crate::model::{InlierLaw, NoiseSpec, OutlierPattern, Placement};

/// How the bootstrapped median variants get their norm bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaChoice {
    /// `3 (1 + ||beta_star||)` from the generated truth.
    Oracle,
    /// Least-squares estimate from the first half of each instance.
    Estimate,
    Fixed(f64),
}

/// Distribution of `beta_star`: uniform direction scaled to `norm`, optionally on a random support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaLaw {
    pub norm: f64,
    pub sparsity: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub grid: Vec<usize>,
    pub d: usize,
    pub noise: NoiseSpec,
    pub estimators: Vec<EstimatorKind>,
    pub trials: usize,
    pub master_seed: u64,
    pub orthogonalize: bool,
    pub beta: BetaLaw,
    pub delta: DeltaChoice,
    pub huber: HuberParams,
    /// Record wall-clock time per trial; off by default so outputs are reproducible byte for byte.
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn new(grid: Vec<usize>, d: usize, noise: NoiseSpec, estimators: Vec<EstimatorKind>) -> Self {
        Self {
            grid,
            d,
            noise,
            estimators,
            trials: 1,
            master_seed: 0,
            orthogonalize: false,
            beta: BetaLaw {
                norm: 5.0,
                sparsity: None,
            },
            delta: DeltaChoice::Oracle,
            huber: HuberParams::default(),
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::invalid("sample-size grid is empty"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.d == 0 {
            return Err(Error::invalid("d must be at least 1"));
        }
        if let Some(&n) = self.grid.iter().find(|&&n| n == 0) {
            return Err(Error::invalid(format!("grid contains n = {n}")));
        }
        if self.estimators.is_empty() {
            return Err(Error::invalid("no estimator configured"));
        }
        if !(self.beta.norm >= 0.0 && self.beta.norm.is_finite()) {
            return Err(Error::invalid("beta_norm must be finite and non-negative"));
        }
        if let Some(s) = self.beta.sparsity {
            if s == 0 || s > self.d {
                return Err(Error::invalid(format!(
                    "beta_sparsity must be in 1..={}, got {s}",
                    self.d
                )));
            }
        }
        for e in &self.estimators {
            if let EstimatorKind::SparseBootstrap(k) = e {
                if *k > self.d {
                    return Err(Error::invalid(format!("sparsity {k} exceeds d = {}", self.d)));
                }
            }
        }
        if let DeltaChoice::Fixed(v) = self.delta {
            if !(v >= 3.0 && v.is_finite()) {
                return Err(Error::invalid(format!("delta must be >= 3, got {v}")));
            }
        }
        self.noise.validate()?;
        self.huber.validate()
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Parses `key = value` lines; `#` starts a comment.
    ///
    /// Required keys: `n` (comma list), `d`, `alpha`, `noise`, `estimator` (comma list).
    pub fn parse(text: &str) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut grid = None;
        let mut d = None;
        let mut alpha = None;
        let mut pattern = None;
        let mut estimators = None;
        let mut inlier_law = InlierLaw::Zero;
        let mut placement = Placement::Random;
        let mut cfg = ExperimentConfig::new(
            Vec::new(),
            0,
            NoiseSpec::new(1.0, OutlierPattern::ConstantSpike(0.0)),
            Vec::new(),
        );
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {lineno}: expected 'key = value'")))?;
            let key = key.trim();
            let value = value.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::Parse(format!("line {lineno}: duplicate key '{key}'")));
            }
            let bad = |what: &str| Error::Parse(format!("line {lineno}: {key} = '{value}' is not {what}"));
            match key {
                "n" => {
                    grid = Some(
                        value
                            .split(',')
                            .map(|s| s.trim().parse::<usize>().map_err(|_| bad("a list of counts")))
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                "d" => d = Some(value.parse::<usize>().map_err(|_| bad("a count"))?),
                "alpha" => alpha = Some(value.parse::<f64>().map_err(|_| bad("a real"))?),
                "noise" => pattern = Some(parse_noise_pattern(value)?),
                "inliers" => {
                    inlier_law = match value {
                        "zero" => InlierLaw::Zero,
                        "uniform" => InlierLaw::UniformPm1,
                        _ => match value.strip_prefix("gauss:") {
                            Some(s) => InlierLaw::Gaussian(s.parse().map_err(|_| bad("zero, uniform or gauss:SIGMA"))?),
                            None => return Err(bad("zero, uniform or gauss:SIGMA")),
                        },
                    }
                }
                "placement" => {
                    placement = match value {
                        "random" => Placement::Random,
                        "prefix" => Placement::Prefix,
                        _ => return Err(bad("random or prefix")),
                    }
                }
                "estimator" => {
                    estimators = Some(
                        value
                            .split(',')
                            .map(str::parse)
                            .collect::<Result<Vec<EstimatorKind>>>()?,
                    )
                }
                "trials" => cfg.trials = value.parse().map_err(|_| bad("a count"))?,
                "master_seed" | "seed" => cfg.master_seed = value.parse().map_err(|_| bad("an unsigned integer"))?,
                "orthogonalize" => cfg.orthogonalize = value.parse().map_err(|_| bad("true or false"))?,
                "timing" => cfg.timing = value.parse().map_err(|_| bad("true or false"))?,
                "beta_norm" => cfg.beta.norm = value.parse().map_err(|_| bad("a real"))?,
                "beta_sparsity" => cfg.beta.sparsity = Some(value.parse().map_err(|_| bad("a count"))?),
                "delta" => {
                    cfg.delta = match value {
                        "oracle" => DeltaChoice::Oracle,
                        "auto" | "estimate" => DeltaChoice::Estimate,
                        v => DeltaChoice::Fixed(v.parse().map_err(|_| bad("oracle, auto or a real"))?),
                    }
                }
                "h" => cfg.huber.h = value.parse().map_err(|_| bad("a real"))?,
                "huber_scale" => cfg.huber.scale = value.parse().map_err(|_| bad("a real"))?,
                "grad_tol" => cfg.huber.grad_tol = value.parse().map_err(|_| bad("a real"))?,
                "max_iters" => cfg.huber.max_iters = value.parse().map_err(|_| bad("a count"))?,
                _ => return Err(Error::Parse(format!("line {lineno}: unknown key '{key}'"))),
            }
        }
        let missing = |k: &str| Error::Parse(format!("missing required key '{k}'"));
        cfg.grid = grid.ok_or_else(|| missing("n"))?;
        cfg.d = d.ok_or_else(|| missing("d"))?;
        cfg.estimators = estimators.ok_or_else(|| missing("estimator"))?;
        cfg.noise = NoiseSpec {
            alpha: alpha.ok_or_else(|| missing("alpha"))?,
            pattern: pattern.ok_or_else(|| missing("noise"))?,
            inlier_law,
            placement,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// `spike:MAG`, `gauss:SIGMA` or `pareto:SHAPE`.
pub fn parse_noise_pattern(s: &str) -> Result<OutlierPattern> {
    let (kind, arg) = s.split_once(':').ok_or_else(|| {
        Error::Parse(format!(
            "noise '{s}' must look like spike:MAG, gauss:SIGMA or pareto:SHAPE"
        ))
    })?;
    let v: f64 = arg
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("noise parameter '{arg}' is not a real")))?;
    let pattern = match kind.trim() {
        "spike" => OutlierPattern::ConstantSpike(v),
        "gauss" => OutlierPattern::ScaledGaussian(v),
        "pareto" => OutlierPattern::HeavyTail(v),
        other => return Err(Error::Parse(format!("unknown noise kind '{other}'"))),
    };
    NoiseSpec::new(0.5, pattern).validate()?;
    Ok(pattern)
}

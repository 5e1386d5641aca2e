//! Command-line front end: `gen`, `fit`, `bench` and `spread-check`.
//!
//! Exit codes: 0 on success, 1 on user error, 2 when an estimator fails.
//! Every error is reported as one `error: <code>: <message>` line on stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimate::{fit, EstimatorKind, FitOutcome};
use crate::harness::{parse_noise_pattern, run_trials, trial_instance, write_outputs, BetaLaw, ExperimentConfig};
use crate::huber::HuberParams;
use crate::io::{read_instance, read_truth, write_instance, write_truth};
use crate::median::estimate_norm_bound;
use crate::model::{error_metrics, NoiseSpec};
use crate::rng::RandomSource;
use crate::spread::spread_witness_search;

#[derive(Debug, Parser)]
#[command(
    name = "robust-regress",
    version,
    about = "Robust linear regression under oblivious outliers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a Gaussian-design instance with oblivious noise
    Gen(GenArgs),
    /// Fit an estimator to an instance file
    Fit(FitArgs),
    /// Run a Monte-Carlo sweep described by a config file
    Bench(BenchArgs),
    /// Search a design for rows that concentrate its column span
    SpreadCheck(SpreadArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Number of samples
    #[arg(long)]
    pub n: usize,
    /// Number of covariates
    #[arg(long)]
    pub d: usize,
    /// Inlier fraction in (0, 1]
    #[arg(long)]
    pub alpha: f64,
    /// Outlier law: spike:MAG, gauss:SIGMA or pareto:SHAPE
    #[arg(long)]
    pub noise: String,
    /// Master seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Norm of the planted coefficient vector
    #[arg(long, default_value_t = 5.0)]
    pub beta_norm: f64,
    /// Instance CSV to write
    #[arg(long)]
    pub out: PathBuf,
    /// Optional CSV for beta_star and eta
    #[arg(long)]
    pub truth_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Instance CSV
    #[arg(long = "in")]
    pub input: PathBuf,
    /// huber, median, median-boot, sparse-boot:K, nonspherical or ols
    #[arg(long, default_value = "huber")]
    pub estimator: String,
    /// Huber transition point
    #[arg(long, default_value_t = 2.0)]
    pub h: f64,
    /// Norm bound for the bootstrapped median estimators, or "auto"
    #[arg(long)]
    pub delta: Option<String>,
    /// Seed for the randomized estimators
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Truth CSV; adds err_param and err_pred to the report
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// JSON report to write
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Sweep description (key = value lines)
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory for records.jsonl and aggregate.csv
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SpreadArgs {
    /// Instance CSV (only the design is used)
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Number of rows that may be removed
    #[arg(long)]
    pub m: usize,
    /// Random restarts of the search
    #[arg(long, default_value_t = 32)]
    pub restarts: usize,
    /// Seed for the restarts
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// JSON report to write
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct FitReport {
    estimator: String,
    delta: Option<f64>,
    #[serde(flatten)]
    outcome: FitOutcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    err_param: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    err_pred: Option<f64>,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::EstimationFailure(_) | Error::SingularMatrix(_) | Error::NotPositiveDefinite(_) => 2,
        _ => 1,
    }
}

fn write_json(path: &std::path::Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(std::fs::write(path, text)?)
}

fn gen(a: &GenArgs) -> Result<()> {
    let noise = NoiseSpec::new(a.alpha, parse_noise_pattern(&a.noise)?);
    let mut cfg = ExperimentConfig::new(vec![a.n], a.d, noise, vec![EstimatorKind::Huber]);
    cfg.beta = BetaLaw {
        norm: a.beta_norm,
        sparsity: None,
    };
    cfg.validate()?;
    let inst = trial_instance(&cfg, a.n, a.seed)?;
    write_instance(&a.out, &inst)?;
    if let Some(p) = &a.truth_out {
        write_truth(p, inst.require_truth()?)?;
    }
    Ok(())
}

fn fit_cmd(a: &FitArgs) -> Result<()> {
    let kind: EstimatorKind = a.estimator.parse()?;
    let mut inst = read_instance(&a.input)?;
    if let Some(p) = &a.truth {
        inst = inst.with_truth(read_truth(p)?)?;
    }
    let delta = match a.delta.as_deref().map(str::trim) {
        None if kind.needs_delta() => {
            return Err(Error::invalid(format!(
                "estimator {kind} needs --delta (a number or auto)"
            )))
        }
        None => None,
        Some("auto") => Some(estimate_norm_bound(&inst)?),
        Some(v) => Some(
            v.parse::<f64>()
                .map_err(|_| Error::Parse(format!("--delta '{v}' is neither a real nor auto")))?,
        ),
    };
    let huber = HuberParams {
        h: a.h,
        ..HuberParams::default()
    };
    let outcome = fit(&inst, kind, &huber, delta, &RandomSource::new(a.seed, 0))?;
    let metrics = match inst.truth() {
        Some(_) => Some(error_metrics(&outcome.beta_hat, &inst)?),
        None => None,
    };
    let report = FitReport {
        estimator: kind.to_string(),
        delta,
        outcome,
        err_param: metrics.map(|m| m.err_param),
        err_pred: metrics.map(|m| m.err_pred),
    };
    write_json(&a.out, &report)
}

fn bench(a: &BenchArgs) -> Result<()> {
    let cfg = ExperimentConfig::from_file(&a.config)?;
    let records = run_trials(&cfg)?;
    write_outputs(&a.out, &records)
}

fn spread_check(a: &SpreadArgs) -> Result<()> {
    let inst = read_instance(&a.input)?;
    let report = spread_witness_search(inst.x(), a.m, a.restarts, &RandomSource::new(a.seed, 0))?;
    write_json(&a.out, &report)
}

pub fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Fit(a) => fit_cmd(a),
        Command::Bench(a) => bench(a),
        Command::SpreadCheck(a) => spread_check(a),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let rendered = e.to_string();
            let mut lines = rendered.lines();
            let first = lines.next().unwrap_or("").trim_start_matches("error: ");
            let _ = writeln!(stderr, "error: usage: {first}");
            for line in lines {
                let _ = writeln!(stderr, "{line}");
            }
            return 1;
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            let _ = writeln!(stderr, "error: {}: {msg}", e.code());
            exit_code(&e)
        }
    }
}

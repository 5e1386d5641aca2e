//! Monte-Carlo sweeps over sample size, with per-trial records, aggregate
//! statistics and power-law rate fits.

mod aggregate;
mod config;
mod run;

pub use aggregate::{aggregate, format_aggregate_csv, quantile_lower, scaling_fit, summarize, AggregateRow, Summary};
pub use config::{parse_noise_pattern, BetaLaw, DeltaChoice, ExperimentConfig};
pub use run::{
    format_records_jsonl, run_trials, thread_count_from_env, trial_instance, trial_seed, write_outputs, TrialRecord,
    THREADS_ENV,
};

//! Scenario configs, Monte-Carlo runner, reports and the false-alarm formula.

mod config;
mod far;
mod report;
mod scenarios;

pub use config::{Inputs, Params, PsdSource, ScenarioConfig, ScenarioName, Thresholds};
pub use far::{false_alarm_rate, FalseAlarmParams};
pub use report::{
    emit_report, quantile, quantiles, summarize, write_trials_csv, Figure, Quantiles, ScenarioOutcome, Summary,
    TrialReport, SUMMARY_SCHEMA,
};
pub use scenarios::{monte_carlo, run_scenario, DEFAULT_BOGUS_SIGMA_PHASE, DEFAULT_TARGET_SNR};

//! Run summaries and multi-algorithm CSV.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::experiment::ExperimentResult;
use super::trace::fixed;
use super::HarnessError;

pub const SUMMARY_FILE: &str = "summary.json";

/// Machine-readable record of one CLI run.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary<'a, T: Serialize> {
    pub command: &'a str,
    pub crate_version: &'a str,
    pub config: &'a ExperimentConfig,
    pub results: T,
}

impl<'a, T: Serialize> RunSummary<'a, T> {
    pub fn new(command: &'a str, config: &'a ExperimentConfig, results: T) -> Self {
        Self {
            command,
            crate_version: env!("CARGO_PKG_VERSION"),
            config,
            results,
        }
    }
}

pub fn write_summary<T: Serialize>(dir: &Path, summary: &RunSummary<'_, T>) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    std::fs::write(dir.join(SUMMARY_FILE), text)?;
    Ok(())
}

/// One row per round with the instance-averaged cumulative regret and
/// per-step reward of every algorithm.
pub fn write_comparison_csv<W: Write>(results: &[ExperimentResult], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    for r in results {
        header.push(format!("{}_cum_regret", r.algorithm));
        header.push(format!("{}_per_step_reward", r.algorithm));
    }
    w.write_record(&header)?;
    let curves: Vec<(Vec<f64>, Vec<f64>)> = results
        .iter()
        .map(|r| (r.mean_cumulative_regret(), r.mean_per_step_reward()))
        .collect();
    let rounds = results.iter().map(|r| r.rounds).min().unwrap_or(0);
    for t in 0..rounds {
        let mut row = vec![(t + 1).to_string()];
        for (regret, reward) in &curves {
            row.push(fixed(regret[t]));
            row.push(fixed(reward[t]));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

//! Per-round regret bookkeeping and its CSV form.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub seeds: Vec<usize>,
    /// Nodes activated by the chosen seeds.
    pub reward: f64,
    /// Nodes activated by the baseline seeds under the same diffusion sample.
    pub baseline_reward: f64,
}

/// Rewards of one bandit run with exact prefix sums.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    rounds: Vec<RoundRecord>,
    cum_regret: Vec<f64>,
    cum_reward: Vec<f64>,
}

impl RegretTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: RoundRecord) {
        let regret = self.cumulative_regret_at(self.len()) + record.baseline_reward - record.reward;
        let reward = self.cum_reward.last().copied().unwrap_or(0.0) + record.reward;
        self.cum_regret.push(regret);
        self.cum_reward.push(reward);
        self.rounds.push(record);
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn rounds(&self) -> &[RoundRecord] {
        &self.rounds
    }

    /// `R(t) = Σ_{s≤t} (baseline_s − reward_s)`; `R(0) = 0`.
    pub fn cumulative_regret_at(&self, t: usize) -> f64 {
        if t == 0 {
            0.0
        } else {
            self.cum_regret[t - 1]
        }
    }

    /// `R(t)` for `t = 1..=T`.
    pub fn cumulative_regret(&self) -> &[f64] {
        &self.cum_regret
    }

    pub fn final_regret(&self) -> f64 {
        self.cumulative_regret_at(self.len())
    }

    /// `(Σ_{s≤t} reward_s) / t` for `t ≥ 1`.
    pub fn per_step_reward_at(&self, t: usize) -> f64 {
        assert!(t >= 1 && t <= self.len(), "round {t} outside 1..={}", self.len());
        self.cum_reward[t - 1] / t as f64
    }

    pub fn total_reward(&self) -> f64 {
        self.cum_reward.last().copied().unwrap_or(0.0)
    }

    pub fn total_baseline_reward(&self) -> f64 {
        self.rounds.iter().map(|r| r.baseline_reward).sum()
    }
}

/// `κ`-scaled regret `T·F̂(S*) − (1/κ)·Σ_t F̂(S_t)`, with the realized
/// per-round rewards standing in for the expectations.
pub fn scaled_regret(trace: &RegretTrace, kappa: f64) -> Result<f64, HarnessError> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(HarnessError::Config(format!("kappa = {kappa} not in (0, 1]")));
    }
    Ok(trace.total_baseline_reward() - trace.total_reward() / kappa)
}

/// Decimal places used for every real-valued CSV cell.
pub const CSV_DECIMALS: usize = 6;

pub const TRACE_HEADER: [&str; 6] = [
    "t",
    "seeds",
    "reward",
    "baseline_reward",
    "cum_regret",
    "per_step_reward",
];

pub(crate) fn fixed(x: f64) -> String {
    format!("{x:.CSV_DECIMALS$}")
}

/// Seeds are written space-separated in one cell.
fn seeds_cell(seeds: &[usize]) -> String {
    seeds.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

pub fn write_trace_csv<W: Write>(trace: &RegretTrace, out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for (i, r) in trace.rounds().iter().enumerate() {
        let t = i + 1;
        w.write_record([
            t.to_string(),
            seeds_cell(&r.seeds),
            fixed(r.reward),
            fixed(r.baseline_reward),
            fixed(trace.cumulative_regret_at(t)),
            fixed(trace.per_step_reward_at(t)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a file written by [`write_trace_csv`]; derived columns are
/// recomputed and checked against the file to printed precision.
pub fn read_trace_csv<R: Read>(input: R) -> Result<RegretTrace, HarnessError> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_owned).collect();
    if header != TRACE_HEADER {
        return Err(HarnessError::Format(format!("unexpected trace header {header:?}")));
    }
    let mut trace = RegretTrace::new();
    for (i, row) in rd.records().enumerate() {
        let row = row?;
        let bad = |what: &str| HarnessError::Format(format!("row {}: bad {what}", i + 1));
        let num = |k: usize, what: &str| -> Result<f64, HarnessError> {
            row[k].parse::<f64>().map_err(|_| bad(what))
        };
        if row[0].parse::<usize>().ok() != Some(i + 1) {
            return Err(bad("round index"));
        }
        let seeds = row[1]
            .split_whitespace()
            .map(|s| s.parse::<usize>().map_err(|_| bad("seeds")))
            .collect::<Result<Vec<_>, _>>()?;
        trace.push(RoundRecord {
            seeds,
            reward: num(2, "reward")?,
            baseline_reward: num(3, "baseline_reward")?,
        });
        let tol = 10f64.powi(-(CSV_DECIMALS as i32));
        if (trace.final_regret() - num(4, "cum_regret")?).abs() > tol
            || (trace.per_step_reward_at(i + 1) - num(5, "per_step_reward")?).abs() > tol
        {
            return Err(bad("derived column"));
        }
    }
    Ok(trace)
}

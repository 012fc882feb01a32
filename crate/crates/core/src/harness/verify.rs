//! How well the surrogate `f(S, p̂*)` tracks the expected spread `F(S)`.

use std::io::Write;

use rand::seq::index;
use rand::Rng;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::experiment::{build_instance, stream_rng, Instance, Stream};
use super::trace::fixed;
use super::HarnessError;
use crate::diffusion::{estimate_reachability, estimate_spread_stats, greedy_spread_seeds, ReachabilityTable};
use crate::parallel;
use crate::surrogate::{greedy_oracle, surrogate_value, SeedConstraint, GREEDY_APPROXIMATION};

/// Surrogate-versus-spread statistics for one cardinality, averaged over
/// instances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurrogateRow {
    pub k: usize,
    /// Mean `F̂(S)` over random sets of size `k`.
    pub mean_spread: f64,
    /// Mean `f(S, p̂*)` over the same sets.
    pub mean_surrogate: f64,
    /// Standard error of the mean paired difference `F̂(S) − f(S, p̂*)`.
    pub gap_std_error: f64,
    /// `F(S*_g)`: spread of the spread-greedy seeds, re-estimated.
    pub greedy_spread: f64,
    /// `f(S̃_g, p̂*)`: surrogate value of the surrogate-greedy seeds.
    pub greedy_surrogate: f64,
    /// `F(S*_g) / α`.
    pub upper_bound: f64,
    /// `F(S*_g) / k`.
    pub lower_bound: f64,
    /// `α · f(S̃_g, p̂*) / F(S*_g)`.
    pub rho_lower: f64,
}

impl SurrogateRow {
    pub fn gap(&self) -> f64 {
        self.mean_spread - self.mean_surrogate
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurrogateReport {
    pub instances: usize,
    pub rows: Vec<SurrogateRow>,
}

/// Uniform random `k`-subset of `0..n`, sorted.
fn random_set<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    let mut s = index::sample(rng, n, k).into_vec();
    s.sort_unstable();
    s
}

/// Per-cardinality statistics on one instance against a given table.
pub fn surrogate_rows(
    config: &ExperimentConfig,
    instance: &Instance,
    p: &ReachabilityTable,
    rng: &mut dyn rand::RngCore,
) -> Result<Vec<SurrogateRow>, HarnessError> {
    let s = &config.surrogate;
    let g = &instance.graph;
    let params = &instance.params;
    let n = g.node_count();
    let mut rows = Vec::new();
    for &k in &s.k_values {
        let k = k.min(n);
        let sets: Vec<Vec<usize>> = (0..s.random_sets).map(|_| random_set(rng, n, k)).collect();
        let mut diffs = Vec::with_capacity(sets.len());
        let (mut sum_f, mut sum_spread) = (0.0, 0.0);
        for set in &sets {
            let spread = estimate_spread_stats(g, params, set, s.spread_sims, rng)?.mean;
            let f = surrogate_value(p, set);
            sum_spread += spread;
            sum_f += f;
            diffs.push(spread - f);
        }
        let m = sets.len() as f64;
        let mean_diff = diffs.iter().sum::<f64>() / m;
        let var = if sets.len() > 1 {
            diffs.iter().map(|d| (d - mean_diff).powi(2)).sum::<f64>() / (m - 1.0)
        } else {
            0.0
        };
        let constraint = SeedConstraint::new(k, n).map_err(|e| HarnessError::Config(e.to_string()))?;
        let tilde = greedy_oracle(p, constraint);
        let star = greedy_spread_seeds(g, params, k, s.greedy_sims, rng);
        let greedy_spread = estimate_spread_stats(g, params, &star.seeds, s.spread_sims, rng)?.mean;
        rows.push(SurrogateRow {
            k,
            mean_spread: sum_spread / m,
            mean_surrogate: sum_f / m,
            gap_std_error: (var / m).sqrt(),
            greedy_spread,
            greedy_surrogate: tilde.value,
            upper_bound: greedy_spread / GREEDY_APPROXIMATION,
            lower_bound: greedy_spread / k as f64,
            rho_lower: GREEDY_APPROXIMATION * tilde.value / greedy_spread,
        });
    }
    Ok(rows)
}

/// Reachability estimate used by [`verify_surrogate`] and the CLI.
pub fn estimate_instance_reachability(
    config: &ExperimentConfig,
    instance: &Instance,
    index: usize,
) -> Result<ReachabilityTable, HarnessError> {
    let s = &config.surrogate;
    let mut rng = stream_rng(config.seed, Stream::Reachability, index);
    Ok(estimate_reachability(
        &instance.graph,
        &instance.params,
        s.reach_sims,
        s.reach_min_size..=s.reach_max_size,
        &mut rng,
    )?)
}

/// Estimates `p̂*` per instance, compares `f` with `F̂` on random sets of
/// each configured size, and averages over instances. Standard errors are
/// combined as the standard error of the instance average.
pub fn verify_surrogate(config: &ExperimentConfig) -> Result<SurrogateReport, HarnessError> {
    config.validate()?;
    let indices: Vec<usize> = (0..config.bandit.num_instances).collect();
    let per_instance = parallel::map_ordered(indices, |i| {
        let inst = build_instance(config, i)?;
        let p = estimate_instance_reachability(config, &inst, i)?;
        let mut rng = stream_rng(config.seed, Stream::SurrogateCheck, i);
        surrogate_rows(config, &inst, &p, &mut rng)
    })
    .into_iter()
    .collect::<Result<Vec<_>, HarnessError>>()?;
    let m = per_instance.len() as f64;
    let rows = (0..config.surrogate.k_values.len())
        .map(|j| {
            let col = || per_instance.iter().map(|rows| &rows[j]);
            let avg = |f: fn(&SurrogateRow) -> f64| col().map(f).sum::<f64>() / m;
            SurrogateRow {
                k: per_instance[0][j].k,
                mean_spread: avg(|r| r.mean_spread),
                mean_surrogate: avg(|r| r.mean_surrogate),
                gap_std_error: col().map(|r| r.gap_std_error.powi(2)).sum::<f64>().sqrt() / m,
                greedy_spread: avg(|r| r.greedy_spread),
                greedy_surrogate: avg(|r| r.greedy_surrogate),
                upper_bound: avg(|r| r.upper_bound),
                lower_bound: avg(|r| r.lower_bound),
                rho_lower: avg(|r| r.rho_lower),
            }
        })
        .collect();
    Ok(SurrogateReport {
        instances: per_instance.len(),
        rows,
    })
}

pub const REPORT_HEADER: [&str; 10] = [
    "k",
    "mean_spread",
    "mean_surrogate",
    "gap_std_error",
    "greedy_spread",
    "greedy_surrogate",
    "upper_bound",
    "lower_bound",
    "rho_lower",
    "gap",
];

pub fn write_report_csv<W: Write>(report: &SurrogateReport, out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for r in &report.rows {
        w.write_record([
            r.k.to_string(),
            fixed(r.mean_spread),
            fixed(r.mean_surrogate),
            fixed(r.gap_std_error),
            fixed(r.greedy_spread),
            fixed(r.greedy_surrogate),
            fixed(r.upper_bound),
            fixed(r.lower_bound),
            fixed(r.rho_lower),
            fixed(r.gap()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::{exact_reachability_ic, DiffusionModel, InfluenceParams};
    use crate::graph::Graph;
    use crate::harness::config::GraphSource;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(k_values: Vec<usize>) -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.surrogate.k_values = k_values;
        c.surrogate.random_sets = 20;
        c.surrogate.spread_sims = 4000;
        c.surrogate.greedy_sims = 200;
        c
    }

    #[test]
    fn chain_k1_matches_enumeration() {
        // 3-node chain, p = 0.5: f({0}) = F({0}) = 1 + 0.5 + 0.25.
        let g = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        let params = InfluenceParams::constant(&g, DiffusionModel::Ic, 0.5).unwrap();
        let p = exact_reachability_ic(&g, &params).unwrap();
        assert_eq!(surrogate_value(&p, &[0]), 1.75);
        let inst = Instance { graph: g, params };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows = surrogate_rows(&cfg(vec![1]), &inst, &p, &mut rng).unwrap();
        let r = &rows[0];
        assert!(r.gap().abs() < 4.0 * r.gap_std_error + 0.02, "{r:?}");
        assert_eq!(r.greedy_surrogate, 1.75);
    }

    #[test]
    fn zero_probability_gives_exact_cardinality() {
        let g = Graph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let params = InfluenceParams::constant(&g, DiffusionModel::Ic, 0.0).unwrap();
        let p = exact_reachability_ic(&g, &params).unwrap();
        let inst = Instance { graph: g, params };
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for r in surrogate_rows(&cfg(vec![1, 2, 3]), &inst, &p, &mut rng).unwrap() {
            assert_eq!(r.mean_spread, r.k as f64);
            assert_eq!(r.mean_surrogate, r.k as f64);
            assert_eq!(r.gap_std_error, 0.0);
        }
    }

    #[test]
    fn report_on_small_kronecker() {
        let mut c = cfg(vec![1, 3]);
        c.graph = GraphSource::Kronecker {
            iterations: 4,
            initiator: None,
            density: None,
        };
        c.surrogate.reach_sims = 2000;
        c.surrogate.spread_sims = 200;
        c.bandit.num_instances = 2;
        let rep = verify_surrogate(&c).unwrap();
        assert_eq!(rep.instances, 2);
        assert_eq!(rep.rows.len(), 2);
        let mut buf = Vec::new();
        write_report_csv(&rep, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
        assert_eq!(rep, verify_surrogate(&c).unwrap());
    }
}

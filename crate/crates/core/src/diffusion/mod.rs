//! Independent-cascade and linear-threshold diffusion.
//!
//! A diffusion is split into a random part ([`DiffusionSample`], drawn once
//! per round) and a deterministic propagation given that sample. Pairwise
//! influence feedback reuses one sample for every singleton seed.

mod estimate;
mod table;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, GraphError};

pub use estimate::{
    estimate_reachability, estimate_spread, estimate_spread_stats, exact_reachability_ic,
    exact_spread_ic, greedy_spread_seeds, spread_on_samples, SpreadEstimate, SpreadGreedy,
    MAX_ENUMERATED_EDGES,
};
pub use table::ReachabilityTable;

#[derive(Debug, Error, PartialEq)]
pub enum DiffusionError {
    #[error("seed {seed} is outside 0..{n}")]
    SeedOutOfRange { seed: usize, n: usize },
    #[error("expected {expected} edge weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("edge weight {0} is outside [0, 1]")]
    WeightRange(f64),
    #[error("incoming LT weights of node {node} sum to {sum} > 1")]
    LtInfeasible { node: usize, sum: f64 },
    #[error("sample does not match the model or graph size")]
    SampleMismatch,
    #[error("exact enumeration needs m <= {max}, graph has {m} edges")]
    TooManyEdges { m: usize, max: usize },
    #[error("invalid weight bounds [{lo}, {hi}]")]
    WeightBounds { lo: f64, hi: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("reachability table: {0}")]
    Table(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffusionModel {
    #[serde(alias = "IC")]
    Ic,
    #[serde(alias = "LT")]
    Lt,
}

impl std::str::FromStr for DiffusionModel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "ic" => Ok(Self::Ic),
            "lt" => Ok(Self::Lt),
            other => Err(format!("unknown diffusion model {other:?}")),
        }
    }
}

/// One weight per arc of the graph, in edge order.
///
/// For IC a weight is the activation probability of the arc; for LT it is the
/// arc's influence weight and every node's incoming weights sum to at most 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceParams {
    model: DiffusionModel,
    weights: Vec<f64>,
}

const LT_SUM_SLACK: f64 = 1e-9;

impl InfluenceParams {
    pub fn new(g: &Graph, model: DiffusionModel, weights: Vec<f64>) -> Result<Self, DiffusionError> {
        if weights.len() != g.edge_count() {
            return Err(DiffusionError::WeightCount {
                expected: g.edge_count(),
                got: weights.len(),
            });
        }
        if let Some(&w) = weights.iter().find(|w| !(0.0..=1.0).contains(*w)) {
            return Err(DiffusionError::WeightRange(w));
        }
        if model == DiffusionModel::Lt {
            for v in 0..g.node_count() {
                let sum: f64 = g.in_edges(v).iter().map(|&(_, e)| weights[e]).sum();
                if sum > 1.0 + LT_SUM_SLACK {
                    return Err(DiffusionError::LtInfeasible { node: v, sum });
                }
            }
        }
        Ok(Self { model, weights })
    }

    pub fn constant(g: &Graph, model: DiffusionModel, w: f64) -> Result<Self, DiffusionError> {
        Self::new(g, model, vec![w; g.edge_count()])
    }

    /// Weights drawn independently from `U(lo, hi)`. For LT, a node whose
    /// incoming weights sum above 1 has them rescaled to sum to exactly 1.
    pub fn uniform<R: Rng + ?Sized>(
        g: &Graph,
        model: DiffusionModel,
        lo: f64,
        hi: f64,
        rng: &mut R,
    ) -> Result<Self, DiffusionError> {
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(DiffusionError::WeightBounds { lo, hi });
        }
        let mut weights: Vec<f64> = (0..g.edge_count())
            .map(|_| lo + (hi - lo) * rng.gen::<f64>())
            .collect();
        if model == DiffusionModel::Lt {
            normalize_lt_weights(g, &mut weights);
        }
        Self::new(g, model, weights)
    }

    pub fn model(&self) -> DiffusionModel {
        self.model
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, edge: usize) -> f64 {
        self.weights[edge]
    }

    /// Same weights reinterpreted under another model (LT weights are
    /// renormalized where needed).
    pub fn with_model(&self, g: &Graph, model: DiffusionModel) -> Result<Self, DiffusionError> {
        let mut weights = self.weights.clone();
        if model == DiffusionModel::Lt {
            normalize_lt_weights(g, &mut weights);
        }
        Self::new(g, model, weights)
    }
}

fn normalize_lt_weights(g: &Graph, weights: &mut [f64]) {
    for v in 0..g.node_count() {
        let sum: f64 = g.in_edges(v).iter().map(|&(_, e)| weights[e]).sum();
        if sum > 1.0 {
            for &(_, e) in g.in_edges(v) {
                weights[e] /= sum;
            }
        }
    }
}

/// Parses `u v weight` lines (optional `n=<count>` header, `#` comments).
/// Arcs keep file order, which fixes the edge indexing of the result.
pub fn parse_weighted_edge_list(
    text: &str,
    model: DiffusionModel,
) -> Result<(Graph, InfluenceParams), DiffusionError> {
    let mut header_n = None;
    let mut edges = Vec::new();
    let mut weights = Vec::new();
    let mut first = true;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        if std::mem::take(&mut first) {
            if let Some(rest) = t.strip_prefix("n=") {
                header_n = Some(rest.trim().parse::<usize>().map_err(|e| {
                    DiffusionError::Parse {
                        line,
                        message: e.to_string(),
                    }
                })?);
                continue;
            }
        }
        let toks: Vec<&str> = t.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(DiffusionError::Parse {
                line,
                message: format!("expected `u v weight`, found {} fields", toks.len()),
            });
        }
        let bad = |what: &str| DiffusionError::Parse {
            line,
            message: format!("invalid {what}"),
        };
        let u: usize = toks[0].parse().map_err(|_| bad("source"))?;
        let v: usize = toks[1].parse().map_err(|_| bad("target"))?;
        let w: f64 = toks[2].parse().map_err(|_| bad("weight"))?;
        if edges.contains(&(u, v)) {
            return Err(DiffusionError::Parse {
                line,
                message: format!("duplicate arc ({u}, {v})"),
            });
        }
        edges.push((u, v));
        weights.push(w);
    }
    let inferred = edges.iter().map(|&(u, v)| u.max(v) + 1).max().unwrap_or(0);
    let n = header_n.unwrap_or(inferred).max(inferred);
    let g = Graph::new(n, edges)?;
    let params = InfluenceParams::new(&g, model, weights)?;
    Ok((g, params))
}

pub fn write_weighted_edge_list(g: &Graph, params: &InfluenceParams) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "n={}", g.node_count());
    for (&(u, v), w) in g.edges().iter().zip(params.weights()) {
        let _ = writeln!(out, "{u} {v} {w}");
    }
    out
}

/// The diffusion random vector `w`.
#[derive(Debug, Clone, PartialEq)]
pub enum DiffusionSample {
    /// Live/blocked flag per arc.
    Ic { live: Vec<bool> },
    /// Activation threshold per node.
    Lt { thresholds: Vec<f64> },
}

pub fn sample_diffusion<R: Rng + ?Sized>(
    g: &Graph,
    params: &InfluenceParams,
    rng: &mut R,
) -> DiffusionSample {
    match params.model {
        DiffusionModel::Ic => DiffusionSample::Ic {
            live: params
                .weights
                .iter()
                .map(|&p| p >= 1.0 || (p > 0.0 && rng.gen::<f64>() < p))
                .collect(),
        },
        DiffusionModel::Lt => DiffusionSample::Lt {
            thresholds: (0..g.node_count()).map(|_| rng.gen::<f64>()).collect(),
        },
    }
}

/// Reusable propagation workspace. Resetting costs O(touched nodes).
#[derive(Debug, Clone)]
pub struct Propagator {
    active: Vec<bool>,
    step: Vec<u32>,
    acc: Vec<f64>,
    order: Vec<usize>,
    touched: Vec<usize>,
}

impl Propagator {
    pub fn new(n: usize) -> Self {
        Self {
            active: vec![false; n],
            step: vec![0; n],
            acc: vec![0.0; n],
            order: Vec::new(),
            touched: Vec::new(),
        }
    }

    fn reset(&mut self) {
        for &v in &self.order {
            self.active[v] = false;
        }
        for &v in &self.touched {
            self.acc[v] = 0.0;
        }
        self.order.clear();
        self.touched.clear();
    }

    fn activate(&mut self, v: usize, step: u32) {
        self.active[v] = true;
        self.step[v] = step;
        self.order.push(v);
    }

    /// Runs the diffusion from `seeds` under sample `w`; returns the number
    /// of activated nodes.
    pub fn run(
        &mut self,
        g: &Graph,
        params: &InfluenceParams,
        w: &DiffusionSample,
        seeds: &[usize],
    ) -> Result<usize, DiffusionError> {
        let n = g.node_count();
        if self.active.len() != n {
            *self = Self::new(n);
        }
        self.reset();
        match (params.model, w) {
            (DiffusionModel::Ic, DiffusionSample::Ic { live }) if live.len() == g.edge_count() => {}
            (DiffusionModel::Lt, DiffusionSample::Lt { thresholds }) if thresholds.len() == n => {}
            _ => return Err(DiffusionError::SampleMismatch),
        }
        for &s in seeds {
            if s >= n {
                self.reset();
                return Err(DiffusionError::SeedOutOfRange { seed: s, n });
            }
            if !self.active[s] {
                self.activate(s, 0);
            }
        }
        let mut head = 0;
        while head < self.order.len() {
            let a = self.order[head];
            head += 1;
            let next = self.step[a] + 1;
            match w {
                DiffusionSample::Ic { live } => {
                    for &(b, e) in g.out_edges(a) {
                        if live[e] && !self.active[b] {
                            self.activate(b, next);
                        }
                    }
                }
                DiffusionSample::Lt { thresholds } => {
                    for &(b, e) in g.out_edges(a) {
                        if self.active[b] {
                            continue;
                        }
                        if self.acc[b] == 0.0 {
                            self.touched.push(b);
                        }
                        self.acc[b] += params.weights[e];
                        if self.acc[b] >= thresholds[b] {
                            self.activate(b, next);
                        }
                    }
                }
            }
        }
        Ok(self.order.len())
    }

    pub fn is_active(&self, v: usize) -> bool {
        self.active[v]
    }

    /// Activated nodes in activation order.
    pub fn activated(&self) -> &[usize] {
        &self.order
    }

    /// Diffusion step at which `v` activated (seeds are step 0). Only
    /// meaningful for active nodes.
    pub fn step(&self, v: usize) -> u32 {
        self.step[v]
    }

    pub fn indicator(&self) -> Vec<bool> {
        self.active.clone()
    }
}

/// The indicator vector `v ↦ 1(S, v, D(w))`.
pub fn propagate(
    g: &Graph,
    params: &InfluenceParams,
    w: &DiffusionSample,
    seeds: &[usize],
) -> Result<Vec<bool>, DiffusionError> {
    let mut p = Propagator::new(g.node_count());
    p.run(g, params, w, seeds)?;
    Ok(p.indicator())
}

/// Pairwise influence feedback: for each seed `u`, the nodes `u` alone
/// would have influenced under the same sample `w`.
pub type PairwiseFeedback = BTreeMap<usize, Vec<bool>>;

pub fn pairwise_feedback(
    g: &Graph,
    params: &InfluenceParams,
    w: &DiffusionSample,
    seeds: &[usize],
) -> Result<PairwiseFeedback, DiffusionError> {
    let mut p = Propagator::new(g.node_count());
    pairwise_feedback_with(&mut p, g, params, w, seeds)
}

pub fn pairwise_feedback_with(
    p: &mut Propagator,
    g: &Graph,
    params: &InfluenceParams,
    w: &DiffusionSample,
    seeds: &[usize],
) -> Result<PairwiseFeedback, DiffusionError> {
    let mut out = BTreeMap::new();
    for &u in seeds {
        p.run(g, params, w, &[u])?;
        out.insert(u, p.indicator());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chain3() -> Graph {
        Graph::new(3, [(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn ic_sampling_extremes() {
        let g = chain3();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let zero = InfluenceParams::constant(&g, DiffusionModel::Ic, 0.0).unwrap();
        assert_eq!(
            sample_diffusion(&g, &zero, &mut rng),
            DiffusionSample::Ic {
                live: vec![false, false]
            }
        );
        let one = InfluenceParams::constant(&g, DiffusionModel::Ic, 1.0).unwrap();
        assert_eq!(
            sample_diffusion(&g, &one, &mut rng),
            DiffusionSample::Ic {
                live: vec![true, true]
            }
        );
    }

    #[test]
    fn ic_live_frequency_is_binomial() {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        let params = InfluenceParams::constant(&g, DiffusionModel::Ic, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let trials = 10_000;
        let live = (0..trials)
            .filter(|_| match sample_diffusion(&g, &params, &mut rng) {
                DiffusionSample::Ic { live } => live[0],
                _ => unreachable!(),
            })
            .count();
        let sd = (trials as f64 * 0.25).sqrt();
        assert!((live as f64 - 0.5 * trials as f64).abs() <= 3.0 * sd);
    }

    #[test]
    fn ic_chain_full_reachability() {
        let g = chain3();
        let params = InfluenceParams::constant(&g, DiffusionModel::Ic, 1.0).unwrap();
        let w = DiffusionSample::Ic {
            live: vec![true, true],
        };
        assert_eq!(propagate(&g, &params, &w, &[0]).unwrap(), vec![true; 3]);
        assert_eq!(propagate(&g, &params, &w, &[]).unwrap(), vec![false; 3]);
        assert_eq!(
            propagate(&g, &params, &w, &[7]),
            Err(DiffusionError::SeedOutOfRange { seed: 7, n: 3 })
        );
    }

    #[test]
    fn lt_activation_rule() {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        let params = InfluenceParams::new(&g, DiffusionModel::Lt, vec![0.3]).unwrap();
        let low = DiffusionSample::Lt {
            thresholds: vec![0.5, 0.2],
        };
        let high = DiffusionSample::Lt {
            thresholds: vec![0.5, 0.4],
        };
        assert_eq!(propagate(&g, &params, &low, &[0]).unwrap(), vec![true, true]);
        assert_eq!(propagate(&g, &params, &high, &[0]).unwrap(), vec![true, false]);
        let empty = propagate(&g, &params, &low, &[]).unwrap();
        assert_eq!(empty, vec![false, false]);
    }

    #[test]
    fn lt_accumulates_over_neighbors() {
        let g = Graph::new(3, [(0, 2), (1, 2)]).unwrap();
        let params = InfluenceParams::new(&g, DiffusionModel::Lt, vec![0.3, 0.3]).unwrap();
        let w = DiffusionSample::Lt {
            thresholds: vec![0.9, 0.9, 0.5],
        };
        assert!(!propagate(&g, &params, &w, &[0]).unwrap()[2]);
        assert!(propagate(&g, &params, &w, &[0, 1]).unwrap()[2]);
    }

    #[test]
    fn lt_rejects_infeasible_and_uniform_normalizes() {
        let g = Graph::new(3, [(0, 2), (1, 2)]).unwrap();
        assert!(matches!(
            InfluenceParams::new(&g, DiffusionModel::Lt, vec![0.7, 0.6]),
            Err(DiffusionError::LtInfeasible { node: 2, .. })
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = InfluenceParams::uniform(&g, DiffusionModel::Lt, 0.9, 1.0, &mut rng).unwrap();
        let s: f64 = p.weights().iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_sample_is_rejected() {
        let g = chain3();
        let params = InfluenceParams::constant(&g, DiffusionModel::Ic, 1.0).unwrap();
        let w = DiffusionSample::Lt {
            thresholds: vec![0.0; 3],
        };
        assert_eq!(
            propagate(&g, &params, &w, &[0]),
            Err(DiffusionError::SampleMismatch)
        );
    }

    #[test]
    fn pairwise_feedback_basics() {
        let g = chain3();
        let params = InfluenceParams::constant(&g, DiffusionModel::Ic, 0.5).unwrap();
        let blocked = DiffusionSample::Ic {
            live: vec![false, false],
        };
        let fb = pairwise_feedback(&g, &params, &blocked, &[0, 2]).unwrap();
        assert_eq!(fb[&0], vec![true, false, false]);
        assert_eq!(fb[&2], vec![false, false, true]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let w = sample_diffusion(&g, &params, &mut rng);
            let fb = pairwise_feedback(&g, &params, &w, &[0, 1]).unwrap();
            for (&u, y) in &fb {
                assert!(y[u]);
                assert_eq!(y, &propagate(&g, &params, &w, &[u]).unwrap());
            }
        }
    }

    #[test]
    fn weighted_edge_list_round_trip() {
        let text = "# weights\nn=4\n0 1 0.25\n2 1 0.5\n";
        let (g, p) = parse_weighted_edge_list(text, DiffusionModel::Ic).unwrap();
        assert_eq!(g.node_count(), 4);
        assert_eq!(p.weights(), &[0.25, 0.5]);
        let again = parse_weighted_edge_list(&write_weighted_edge_list(&g, &p), DiffusionModel::Ic)
            .unwrap();
        assert_eq!(again, (g, p));
        assert!(parse_weighted_edge_list("0 1\n", DiffusionModel::Ic).is_err());
        assert!(parse_weighted_edge_list("0 1 1.5\n", DiffusionModel::Ic).is_err());
    }
}

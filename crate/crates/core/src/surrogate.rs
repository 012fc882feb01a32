//! The maximal-pairwise-reachability surrogate `f(S, p) = Σ_v max_{u∈S} p[u][v]`
//! and its maximizers.
//!
//! `f` is monotone and submodular for every table `p`, so greedy selection is
//! a `(1 − 1/e)`-approximation. All maximizers break ties toward the smallest
//! node id.

use thiserror::Error;

use crate::diffusion::ReachabilityTable;
use crate::greedy::{self, MarginalGain};

/// `1 − 1/e`.
pub const GREEDY_APPROXIMATION: f64 = 1.0 - 1.0 / std::f64::consts::E;

/// Largest number of candidate sets `brute_force_best` will enumerate.
pub const BRUTE_FORCE_BUDGET: u128 = 2_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum SurrogateError {
    #[error("cardinality {k} must be in 1..={n}")]
    InvalidCardinality { k: usize, n: usize },
    #[error("C({n}, {k}) = {count} subsets exceeds the brute-force budget")]
    BudgetExceeded { n: usize, k: usize, count: u128 },
}

/// Cardinality constraint `|S| ≤ k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedConstraint {
    k: usize,
}

impl SeedConstraint {
    pub fn new(k: usize, n: usize) -> Result<Self, SurrogateError> {
        if k == 0 || k > n {
            return Err(SurrogateError::InvalidCardinality { k, n });
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    /// Selection order for the greedy oracles, ascending for brute force.
    pub seeds: Vec<usize>,
    /// `surrogate_value(p, seeds)`.
    pub value: f64,
    pub evaluations: usize,
}

pub fn surrogate_value(p: &ReachabilityTable, seeds: &[usize]) -> f64 {
    if seeds.is_empty() {
        return 0.0;
    }
    (0..p.node_count())
        .map(|v| seeds.iter().map(|&u| p.get(u, v)).fold(f64::MIN, f64::max))
        .sum()
}

/// Incremental surrogate: tracks the current column maxima.
struct ColumnMax<'a> {
    p: &'a ReachabilityTable,
    best: Vec<f64>,
}

impl<'a> ColumnMax<'a> {
    fn new(p: &'a ReachabilityTable) -> Self {
        Self {
            p,
            best: vec![0.0; p.node_count()],
        }
    }
}

impl MarginalGain for ColumnMax<'_> {
    fn node_count(&self) -> usize {
        self.p.node_count()
    }

    fn gain(&mut self, u: usize) -> f64 {
        self.p
            .row(u)
            .iter()
            .zip(&self.best)
            .map(|(x, b)| (x - b).max(0.0))
            .sum()
    }

    fn commit(&mut self, u: usize) {
        for (b, x) in self.best.iter_mut().zip(self.p.row(u)) {
            *b = b.max(*x);
        }
    }
}

fn finish(p: &ReachabilityTable, run: greedy::GreedyRun) -> OracleResult {
    OracleResult {
        value: surrogate_value(p, &run.seeds),
        seeds: run.seeds,
        evaluations: run.evaluations,
    }
}

/// Lazy (CELF) greedy maximizer of the surrogate.
pub fn greedy_oracle(p: &ReachabilityTable, constraint: SeedConstraint) -> OracleResult {
    let run = greedy::lazy_greedy(&mut ColumnMax::new(p), constraint.k);
    finish(p, run)
}

/// Reference greedy: `k` rounds, every node evaluated each round.
pub fn naive_greedy(p: &ReachabilityTable, constraint: SeedConstraint) -> OracleResult {
    let run = greedy::plain_greedy(&mut ColumnMax::new(p), constraint.k);
    finish(p, run)
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Exact maximizer over all size-`k` subsets, in lexicographic order; the
/// first maximum wins. Monotonicity makes size-`k` sets sufficient.
pub fn brute_force_best(
    p: &ReachabilityTable,
    constraint: SeedConstraint,
) -> Result<OracleResult, SurrogateError> {
    let n = p.node_count();
    let k = constraint.k.min(n);
    let count = binomial(n, k);
    if count > BRUTE_FORCE_BUDGET {
        return Err(SurrogateError::BudgetExceeded { n, k, count });
    }
    let mut combo: Vec<usize> = (0..k).collect();
    let mut best_value = f64::NEG_INFINITY;
    let mut best = combo.clone();
    let mut evaluations = 0;
    loop {
        let value = surrogate_value(p, &combo);
        evaluations += 1;
        if value > best_value {
            best_value = value;
            best.clone_from(&combo);
        }
        // next combination in lexicographic order
        let Some(i) = (0..k).rev().find(|&i| combo[i] < n - k + i) else {
            break;
        };
        combo[i] += 1;
        for j in (i + 1)..k {
            combo[j] = combo[j - 1] + 1;
        }
    }
    Ok(OracleResult {
        seeds: best,
        value: best_value,
        evaluations,
    })
}

/// Selectable surrogate maximizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Oracle {
    #[default]
    LazyGreedy,
    NaiveGreedy,
    BruteForce,
}

impl Oracle {
    pub fn select(
        self,
        p: &ReachabilityTable,
        constraint: SeedConstraint,
    ) -> Result<OracleResult, SurrogateError> {
        match self {
            Oracle::LazyGreedy => Ok(greedy_oracle(p, constraint)),
            Oracle::NaiveGreedy => Ok(naive_greedy(p, constraint)),
            Oracle::BruteForce => brute_force_best(p, constraint),
        }
    }
}

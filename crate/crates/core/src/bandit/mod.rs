//! Online influence-maximization learners.
//!
//! [`Dilinucb`] keeps one ridge regression per source node over the target
//! features and acts optimistically on the resulting reachability UCBs.
//! [`LaplacianDilinucb`] ties the source weights together with a graph
//! Laplacian penalty. [`Cucb`] is an edge-level IC baseline.

mod cucb;
mod dilinucb;
mod laplacian;

use rand::RngCore;
use thiserror::Error;

use crate::diffusion::{DiffusionError, PairwiseFeedback};
use crate::graph::GraphError;
use crate::numerics::NumericsError;
use crate::surrogate::{SeedConstraint, SurrogateError};

pub use cucb::{edge_level_feedback, Cucb, CucbConfig, EdgeTrial};
pub use dilinucb::{
    Dilinucb, DilinucbConfig, DilinucbSnapshot, GramSolver, SourceState, UcbTable,
    SNAPSHOT_VERSION,
};
pub use laplacian::{CgReport, LaplacianConfig, LaplacianDilinucb, LaplacianRegState};

#[derive(Debug, Error, PartialEq)]
pub enum BanditError {
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("feedback for source {source_node} has length {got}, expected {expected}")]
    FeedbackLength {
        source_node: usize,
        got: usize,
        expected: usize,
    },
    #[error("source {0} is out of range")]
    SourceOutOfRange(usize),
    #[error("features describe {features} nodes but the graph has {graph}")]
    FeatureMismatch { features: usize, graph: usize },
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
    #[error(transparent)]
    Diffusion(#[from] DiffusionError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<(), BanditError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(BanditError::InvalidParameter { name, value })
    }
}

/// What the environment reveals after one round.
#[derive(Debug, Clone)]
pub struct RoundFeedback<'a> {
    pub seeds: &'a [usize],
    /// Pairwise influence feedback for every chosen seed.
    pub pairwise: &'a PairwiseFeedback,
    /// Edge-level trials from the full diffusion of `seeds`.
    pub edges: &'a [EdgeTrial],
}

/// A learner in the influence-maximization semi-bandit.
pub trait Learner {
    fn name(&self) -> &str;
    fn select(
        &mut self,
        constraint: SeedConstraint,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<usize>, BanditError>;
    fn observe(&mut self, feedback: &RoundFeedback<'_>) -> Result<(), BanditError>;
}

/// Smallest exploration weight `c` covered by the regret analysis:
/// `(1/σ)·sqrt(d·n·ln(1 + nT/(σ²λd)) + 2·ln(n²T)) + sqrt(λ)·max‖θ*‖₂`.
pub fn theoretical_c(
    n: usize,
    d: usize,
    rounds: usize,
    lambda: f64,
    sigma: f64,
    max_theta_norm: f64,
) -> Result<f64, BanditError> {
    for (name, v) in [("n", n), ("d", d), ("rounds", rounds)] {
        if v == 0 {
            return Err(BanditError::InvalidParameter { name, value: 0.0 });
        }
    }
    positive("lambda", lambda)?;
    positive("sigma", sigma)?;
    if !(max_theta_norm >= 0.0 && max_theta_norm.is_finite()) {
        return Err(BanditError::InvalidParameter {
            name: "max_theta_norm",
            value: max_theta_norm,
        });
    }
    let (n, d, t) = (n as f64, d as f64, rounds as f64);
    let inner = d * n * (1.0 + n * t / (sigma * sigma * lambda * d)).ln() + 2.0 * (n * n * t).ln();
    Ok(inner.sqrt() / sigma + lambda.sqrt() * max_theta_norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theoretical_c_closed_form() {
        // n=4, d=2, T=10, λ=σ=1, ‖θ*‖=1 (frozen value from an independent Python evaluation):
        // sqrt(8·ln 21 + 2·ln 160) + 1
        let want = (8.0 * 21f64.ln() + 2.0 * 160f64.ln()).sqrt() + 1.0;
        let got = theoretical_c(4, 2, 10, 1.0, 1.0, 1.0).unwrap();
        assert!((got - want).abs() < 1e-12);
        assert!((got - 6.874_225_662_353_723).abs() < 1e-12);
    }

    #[test]
    fn theoretical_c_monotone_in_rounds() {
        let mut prev = 0.0;
        for t in [1, 2, 5, 10, 100, 1_000, 10_000, 1_000_000] {
            let c = theoretical_c(16, 4, t, 0.5, 1.0, 2.0).unwrap();
            assert!(c > prev);
            prev = c;
        }
    }

    #[test]
    fn theoretical_c_large_sigma_limit() {
        let c = theoretical_c(10, 3, 100, 4.0, 1e12, 1.5).unwrap();
        assert!((c - 2.0 * 1.5).abs() < 1e-9);
    }

    #[test]
    fn theoretical_c_rejects_bad_arguments() {
        assert!(theoretical_c(0, 1, 1, 1.0, 1.0, 1.0).is_err());
        assert!(theoretical_c(1, 1, 1, 0.0, 1.0, 1.0).is_err());
        assert!(theoretical_c(1, 1, 1, 1.0, -1.0, 1.0).is_err());
        assert!(theoretical_c(1, 1, 1, 1.0, 1.0, -1.0).is_err());
    }
}

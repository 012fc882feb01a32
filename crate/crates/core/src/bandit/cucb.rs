//! Combinatorial UCB over IC edge probabilities.
//!
//! The baseline assumes an independent-cascade world: it keeps a success
//! count per arc, plays the spread-greedy seed set under optimistic arc
//! probabilities and learns from edge-level (semi-bandit) feedback.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{positive, BanditError, Learner, RoundFeedback};
use crate::diffusion::{greedy_spread_seeds, DiffusionModel, DiffusionSample, InfluenceParams, Propagator};
use crate::graph::Graph;
use crate::surrogate::SeedConstraint;

/// One observed arc trial: the tail was active, `success` says whether the
/// arc fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeTrial {
    pub edge: usize,
    pub success: bool,
}

/// Edge-level feedback of the diffusion held in `prop` (run under `w`).
///
/// Every arc whose tail activated is observed. Under IC the arc succeeds iff
/// it was live. Under LT there is no per-arc coin, so an arc counts as a
/// success iff its head activated exactly one step after its tail.
pub fn edge_level_feedback(g: &Graph, w: &DiffusionSample, prop: &Propagator) -> Vec<EdgeTrial> {
    let mut out = Vec::new();
    for &a in prop.activated() {
        for &(b, e) in g.out_edges(a) {
            let success = match w {
                DiffusionSample::Ic { live } => live[e],
                DiffusionSample::Lt { .. } => {
                    prop.is_active(b) && prop.step(b) == prop.step(a) + 1
                }
            };
            out.push(EdgeTrial { edge: e, success });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CucbConfig {
    /// Diffusion samples per spread evaluation in the greedy oracle.
    pub sims_per_eval: usize,
    /// Multiplier of the exploration radius `sqrt(3 ln t / (2 N))`.
    pub exploration: f64,
}

impl Default for CucbConfig {
    fn default() -> Self {
        Self {
            sims_per_eval: 20,
            exploration: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Cucb {
    config: CucbConfig,
    graph: Graph,
    trials: Vec<u64>,
    successes: Vec<u64>,
    round: u64,
}

impl Cucb {
    pub fn new(config: CucbConfig, graph: Graph) -> Result<Self, BanditError> {
        if config.sims_per_eval == 0 {
            return Err(BanditError::InvalidParameter {
                name: "sims_per_eval",
                value: 0.0,
            });
        }
        positive("exploration", config.exploration)?;
        let m = graph.edge_count();
        Ok(Self {
            config,
            graph,
            trials: vec![0; m],
            successes: vec![0; m],
            round: 0,
        })
    }

    pub fn trials(&self) -> &[u64] {
        &self.trials
    }

    pub fn successes(&self) -> &[u64] {
        &self.successes
    }

    /// Optimistic probability of arc `e`; 1 until the arc is observed.
    pub fn edge_ucb(&self, e: usize) -> f64 {
        let n = self.trials[e];
        if n == 0 {
            return 1.0;
        }
        let t = (self.round.max(1)) as f64;
        let mean = self.successes[e] as f64 / n as f64;
        let radius = self.config.exploration * (3.0 * t.ln() / (2.0 * n as f64)).sqrt();
        (mean + radius).clamp(0.0, 1.0)
    }

    pub fn optimistic_params(&self) -> InfluenceParams {
        let w = (0..self.graph.edge_count()).map(|e| self.edge_ucb(e)).collect();
        InfluenceParams::new(&self.graph, DiffusionModel::Ic, w).expect("clamped weights")
    }

    pub fn update(&mut self, trials: &[EdgeTrial]) -> Result<(), BanditError> {
        if let Some(t) = trials.iter().find(|t| t.edge >= self.trials.len()) {
            return Err(BanditError::InvalidParameter {
                name: "edge",
                value: t.edge as f64,
            });
        }
        self.round += 1;
        for t in trials {
            self.trials[t.edge] += 1;
            self.successes[t.edge] += u64::from(t.success);
        }
        Ok(())
    }
}

impl Learner for Cucb {
    fn name(&self) -> &str {
        "cucb"
    }

    fn select(
        &mut self,
        constraint: SeedConstraint,
        rng: &mut dyn RngCore,
    ) -> Result<Vec<usize>, BanditError> {
        let params = self.optimistic_params();
        Ok(greedy_spread_seeds(&self.graph, &params, constraint.k(), self.config.sims_per_eval, rng).seeds)
    }

    fn observe(&mut self, feedback: &RoundFeedback<'_>) -> Result<(), BanditError> {
        self.update(feedback.edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::sample_diffusion;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chain() -> Graph {
        Graph::new(3, [(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn unobserved_edges_are_fully_optimistic() {
        let c = Cucb::new(CucbConfig::default(), chain()).unwrap();
        assert_eq!(c.edge_ucb(0), 1.0);
        assert_eq!(c.edge_ucb(1), 1.0);
    }

    #[test]
    fn ucb_by_hand() {
        let mut c = Cucb::new(CucbConfig::default(), chain()).unwrap();
        for s in [true, false, false, false] {
            c.update(&[EdgeTrial { edge: 0, success: s }]).unwrap();
        }
        // t = 4, N = 4, mean = 1/4
        let want = 0.25 + (3.0 * 4f64.ln() / 8.0).sqrt();
        assert!((c.edge_ucb(0) - want).abs() < 1e-12);
        assert_eq!(c.edge_ucb(1), 1.0);
        assert!(c.update(&[EdgeTrial { edge: 9, success: true }]).is_err());
    }

    #[test]
    fn ic_feedback_reports_live_arcs_from_active_tails() {
        let g = chain();
        let p = InfluenceParams::constant(&g, DiffusionModel::Ic, 0.5).unwrap();
        let w = DiffusionSample::Ic { live: vec![true, false] };
        let mut prop = Propagator::new(3);
        prop.run(&g, &p, &w, &[0]).unwrap();
        let fb = edge_level_feedback(&g, &w, &prop);
        assert_eq!(
            fb,
            vec![
                EdgeTrial { edge: 0, success: true },
                EdgeTrial { edge: 1, success: false }
            ]
        );
        prop.run(&g, &p, &w, &[2]).unwrap();
        assert!(edge_level_feedback(&g, &w, &prop).is_empty());
    }

    #[test]
    fn lt_feedback_uses_activation_steps() {
        let g = chain();
        let p = InfluenceParams::constant(&g, DiffusionModel::Lt, 0.6).unwrap();
        let w = DiffusionSample::Lt { thresholds: vec![0.5, 0.5, 0.9] };
        let mut prop = Propagator::new(3);
        prop.run(&g, &p, &w, &[0]).unwrap();
        let fb = edge_level_feedback(&g, &w, &prop);
        assert_eq!(
            fb,
            vec![
                EdgeTrial { edge: 0, success: true },
                EdgeTrial { edge: 1, success: false }
            ]
        );
    }

    #[test]
    fn learns_a_dominant_seed() {
        let g = Graph::new(4, [(0, 1), (0, 2), (0, 3), (1, 2)]).unwrap();
        let p = InfluenceParams::new(&g, DiffusionModel::Ic, vec![0.9, 0.9, 0.9, 0.1]).unwrap();
        let mut c = Cucb::new(CucbConfig::default(), g.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut prop = Propagator::new(4);
        let k = SeedConstraint::new(1, 4).unwrap();
        let mut last = Vec::new();
        for _ in 0..200 {
            let s = c.select(k, &mut rng).unwrap();
            let w = sample_diffusion(&g, &p, &mut rng);
            prop.run(&g, &p, &w, &s).unwrap();
            let e = edge_level_feedback(&g, &w, &prop);
            c.update(&e).unwrap();
            last = s;
        }
        assert_eq!(last, vec![0]);
    }
}

use std::collections::BTreeMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use oim::bandit::{
    BanditError, Cucb, CucbConfig, Dilinucb, DilinucbConfig, Learner, RoundFeedback,
};
use oim::diffusion::{
    exact_reachability_ic, pairwise_feedback, propagate, sample_diffusion, DiffusionModel,
    InfluenceParams, Propagator, ReachabilityTable,
};
use oim::graph::{
    kronecker_edge_probability, kronecker_graph, laplacian_features, Graph, DEFAULT_INITIATOR,
};
use oim::harness::{
    baseline_seeds, build_instance, run_learner, stream_rng, ExperimentConfig, GraphSource,
    Instance, Stream,
};
use oim::surrogate::{greedy_oracle, SeedConstraint};

fn chain3(p: f64) -> (Graph, InfluenceParams) {
    let g = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
    let params = InfluenceParams::constant(&g, DiffusionModel::Ic, p).unwrap();
    (g, params)
}

#[test]
fn kronecker_mean_density_matches_product_formula() {
    let k = 8;
    let n = 1usize << k;
    let pairs = (n * (n - 1)) as f64;
    // Expected arc count and its variance by direct summation over pairs.
    let (mut mean, mut var) = (0.0, 0.0);
    for u in 0..n {
        for v in 0..n {
            if u != v {
                let p = kronecker_edge_probability(&DEFAULT_INITIATOR, k, u, v);
                mean += p;
                var += p * (1.0 - p);
            }
        }
    }
    let seeds = 100;
    let total: usize = (0..seeds)
        .map(|s| {
            kronecker_graph(&DEFAULT_INITIATOR, k, &mut ChaCha8Rng::seed_from_u64(s))
                .unwrap()
                .edge_count()
        })
        .sum();
    let observed = total as f64 / seeds as f64 / pairs;
    let sigma = (var / seeds as f64).sqrt() / pairs;
    assert!(
        (observed - mean / pairs).abs() <= 3.0 * sigma,
        "density {observed} vs {} ± {sigma}",
        mean / pairs
    );
}

#[test]
fn ic_pairwise_feedback_equals_singleton_propagation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = kronecker_graph(&DEFAULT_INITIATOR, 5, &mut rng).unwrap();
    let params = InfluenceParams::uniform(&g, DiffusionModel::Ic, 0.0, 0.3, &mut rng).unwrap();
    for _ in 0..20 {
        let w = sample_diffusion(&g, &params, &mut rng);
        let seeds = [1, 7, 19];
        let fb = pairwise_feedback(&g, &params, &w, &seeds).unwrap();
        for u in seeds {
            assert_eq!(fb[&u], propagate(&g, &params, &w, &[u]).unwrap());
        }
    }
}

#[test]
fn cucb_learns_a_single_edge() {
    let g = Graph::new(2, [(0, 1)]).unwrap();
    let params = InfluenceParams::constant(&g, DiffusionModel::Ic, 0.5).unwrap();
    let mut cucb = Cucb::new(CucbConfig::default(), g.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut prop = Propagator::new(2);
    for _ in 0..2000 {
        let w = sample_diffusion(&g, &params, &mut rng);
        prop.run(&g, &params, &w, &[0]).unwrap();
        cucb.update(&oim::bandit::edge_level_feedback(&g, &w, &prop)).unwrap();
    }
    assert_eq!(cucb.trials()[0], 2000);
    let mean = cucb.successes()[0] as f64 / 2000.0;
    assert!((mean - 0.5).abs() <= 0.05, "{mean}");
}

#[test]
fn cucb_ucb_saturates_after_all_successes() {
    let g = Graph::new(2, [(0, 1)]).unwrap();
    let mut cucb = Cucb::new(CucbConfig::default(), g).unwrap();
    for _ in 0..100 {
        cucb.update(&[oim::bandit::EdgeTrial { edge: 0, success: true }]).unwrap();
    }
    assert_eq!(cucb.edge_ucb(0), 1.0);
}

#[test]
fn tabular_estimates_converge_on_a_chain() {
    let (g, params) = chain3(0.5);
    let p_star = exact_reachability_ic(&g, &params).unwrap();
    let cfg = DilinucbConfig {
        c: 1.0,
        lambda: 1.0,
        sigma: 1.0,
    };
    let mut l = Dilinucb::tabular(cfg, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..2000 {
        let w = sample_diffusion(&g, &params, &mut rng);
        l.update(&pairwise_feedback(&g, &params, &w, &[0]).unwrap()).unwrap();
    }
    let s = &l.states()[0];
    let t_u = s.selections as f64;
    for v in 0..3 {
        let shrunk = p_star.get(0, v) * t_u / (1.0 + t_u);
        assert!((s.weight[v] - shrunk).abs() <= 0.05, "v={v}: {} vs {shrunk}", s.weight[v]);
    }
}

#[test]
fn confidence_bonus_shrinks_with_selections() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let g = kronecker_graph(&DEFAULT_INITIATOR, 4, &mut rng).unwrap();
    let params = InfluenceParams::uniform(&g, DiffusionModel::Ic, 0.0, 0.3, &mut rng).unwrap();
    let sf = laplacian_features(&g, 5).unwrap();
    let mut l = Dilinucb::new(
        DilinucbConfig {
            c: 0.7,
            lambda: 0.5,
            sigma: 1.0,
        },
        sf.features,
    )
    .unwrap();
    let mut prev: Vec<f64> = (0..16).map(|v| l.confidence_width(3, v).unwrap()).collect();
    for _ in 0..30 {
        let w = sample_diffusion(&g, &params, &mut rng);
        l.update(&pairwise_feedback(&g, &params, &w, &[3]).unwrap()).unwrap();
        assert!(l.weight_residual(3) <= 1e-8);
        for (v, p) in prev.iter_mut().enumerate() {
            let now = l.confidence_width(3, v).unwrap();
            assert!(now <= *p + 1e-12);
            *p = now;
        }
    }
}

#[test]
fn first_selection_under_all_ones_is_lowest_ids() {
    let l = Dilinucb::tabular(
        DilinucbConfig {
            c: 1.0,
            lambda: 1.0,
            sigma: 1.0,
        },
        6,
    )
    .unwrap();
    let seeds = l.select_seeds(SeedConstraint::new(3, 6).unwrap()).unwrap();
    assert_eq!(seeds, vec![0, 1, 2]);
}

/// Plays the surrogate-greedy set of a known reachability table.
struct TruthOracle(ReachabilityTable);

impl Learner for TruthOracle {
    fn name(&self) -> &str {
        "truth"
    }
    fn select(&mut self, c: SeedConstraint, _: &mut dyn RngCore) -> Result<Vec<usize>, BanditError> {
        Ok(greedy_oracle(&self.0, c).seeds)
    }
    fn observe(&mut self, _: &RoundFeedback<'_>) -> Result<(), BanditError> {
        Ok(())
    }
}

#[test]
fn exploiting_the_true_table_has_near_zero_regret() {
    let g = Graph::new(5, [(0, 1), (0, 2), (1, 3), (2, 3), (3, 4)]).unwrap();
    let params = InfluenceParams::constant(&g, DiffusionModel::Ic, 0.6).unwrap();
    let p_star = exact_reachability_ic(&g, &params).unwrap();
    let inst = Instance {
        graph: g,
        params,
    };
    let mut learner = TruthOracle(p_star);
    let mut env = ChaCha8Rng::seed_from_u64(1);
    let mut lr = ChaCha8Rng::seed_from_u64(2);
    let trace = run_learner(&inst, &mut learner, 1, 4000, &[0], &mut env, &mut lr).unwrap();
    let rounds = trace.len() as f64;
    let diffs: Vec<f64> = trace
        .rounds()
        .iter()
        .map(|r| r.baseline_reward - r.reward)
        .collect();
    let mean = trace.final_regret() / rounds;
    let sd = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (rounds - 1.0)).sqrt();
    assert!(mean.abs() <= 3.0 * sd / rounds.sqrt() + 1e-12, "mean regret {mean}");
}

#[test]
fn per_step_reward_is_within_bounds() {
    let mut cfg = ExperimentConfig::default();
    cfg.graph = GraphSource::Kronecker {
        iterations: 4,
        initiator: None,
        density: None,
    };
    cfg.diffusion.weight_high = 0.4;
    cfg.bandit.k = 3;
    let inst = build_instance(&cfg, 0).unwrap();
    let (baseline, _) = baseline_seeds(&cfg, &inst, 0);
    let mut l = Dilinucb::tabular(
        DilinucbConfig {
            c: 0.3,
            lambda: 1.0,
            sigma: 1.0,
        },
        16,
    )
    .unwrap();
    let mut env = stream_rng(0, Stream::Environment, 0);
    let mut lr = stream_rng(0, Stream::Learner, 0);
    let trace = run_learner(&inst, &mut l, 3, 200, &baseline, &mut env, &mut lr).unwrap();
    for t in 1..=trace.len() {
        let r = trace.per_step_reward_at(t);
        assert!((0.0..=16.0).contains(&r));
    }
}

#[test]
fn snapshot_restores_a_trained_learner() {
    let (g, params) = chain3(0.5);
    let mut l = Dilinucb::tabular(
        DilinucbConfig {
            c: 0.5,
            lambda: 1.0,
            sigma: 1.0,
        },
        3,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..50 {
        let w = sample_diffusion(&g, &params, &mut rng);
        l.update(&pairwise_feedback(&g, &params, &w, &[0, 2]).unwrap()).unwrap();
    }
    let text = serde_json::to_string(&l.snapshot()).unwrap();
    let back = Dilinucb::restore(
        &serde_json::from_str(&text).unwrap(),
        oim::graph::FeatureMatrix::identity(3),
    )
    .unwrap();
    assert_eq!(back.states(), l.states());
    assert_eq!(back.ucb(), l.ucb());
    let fb = BTreeMap::from([(1, vec![false, true, true])]);
    let (mut a, mut b) = (l, back);
    a.update(&fb).unwrap();
    b.update(&fb).unwrap();
    assert_eq!(a.ucb(), b.ucb());
}

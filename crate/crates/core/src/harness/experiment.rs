//! Problem instances, seeded streams and the bandit interaction loop.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{AlgorithmKind, ExperimentConfig, GraphSource};
use super::trace::{RegretTrace, RoundRecord};
use super::HarnessError;
use crate::bandit::{
    edge_level_feedback, theoretical_c, Cucb, CucbConfig, Dilinucb, DilinucbConfig,
    LaplacianConfig, LaplacianDilinucb, Learner, RoundFeedback,
};
use crate::diffusion::{
    greedy_spread_seeds, pairwise_feedback_with, sample_diffusion, InfluenceParams, Propagator,
};
use crate::graph::{
    initiator_for_density, kronecker_graph, laplacian_features, parse_edge_list, Graph,
    DEFAULT_INITIATOR,
};
use crate::parallel;
use crate::surrogate::SeedConstraint;

/// Independent random streams derived from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Graph = 1,
    Weights = 2,
    Baseline = 3,
    Environment = 4,
    Learner = 5,
    Validation = 6,
    Reachability = 7,
    SurrogateCheck = 8,
}

/// Stream `purpose` of instance `instance`: the same master seed always
/// yields the same generator, independently of the algorithm being run, so
/// algorithms compared on one instance face the same diffusion samples.
pub fn stream_rng(seed: u64, purpose: Stream, instance: usize) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(((purpose as u64) << 32) | instance as u64);
    r
}

/// A graph with fixed influence weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub graph: Graph,
    pub params: InfluenceParams,
}

pub fn build_graph(config: &ExperimentConfig, instance: usize) -> Result<Graph, HarnessError> {
    match &config.graph {
        GraphSource::Kronecker {
            iterations,
            initiator,
            density,
        } => {
            let base = initiator.unwrap_or(DEFAULT_INITIATOR);
            let init = match density {
                Some(d) => initiator_for_density(&base, *iterations, *d)
                    .map_err(|e| HarnessError::Config(e.to_string()))?,
                None => base,
            };
            let mut rng = stream_rng(config.seed, Stream::Graph, instance);
            Ok(kronecker_graph(&init, *iterations, &mut rng)?)
        }
        GraphSource::File { path, bidirect } => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
            let g = parse_edge_list(&text)?;
            Ok(if *bidirect { g.bidirected() } else { g })
        }
    }
}

pub fn build_instance(config: &ExperimentConfig, instance: usize) -> Result<Instance, HarnessError> {
    let graph = build_graph(config, instance)?;
    let d = config.diffusion;
    let mut rng = stream_rng(config.seed, Stream::Weights, instance);
    let params = InfluenceParams::uniform(&graph, d.model, d.weight_low, d.weight_high, &mut rng)?;
    Ok(Instance { graph, params })
}

/// Exploration weight for a run: the configured `c`, or the regret-analysis
/// value with `max‖θ*‖ = sqrt(n)` (every reachability is at most 1).
pub fn exploration_weight(
    config: &ExperimentConfig,
    kind: AlgorithmKind,
    n: usize,
) -> Result<f64, HarnessError> {
    let a = &config.algorithm;
    if !a.theoretical_c {
        return Ok(a.c);
    }
    let d = match kind {
        AlgorithmKind::DilinucbTabular => n,
        _ => a.d.min(n),
    };
    Ok(theoretical_c(
        n,
        d,
        config.bandit.rounds,
        a.lambda,
        a.sigma,
        (n as f64).sqrt(),
    )?)
}

pub type BoxedLearner = Box<dyn Learner + Send>;

pub fn build_learner(
    config: &ExperimentConfig,
    kind: AlgorithmKind,
    instance: &Instance,
    c: f64,
) -> Result<BoxedLearner, HarnessError> {
    let a = &config.algorithm;
    let n = instance.graph.node_count();
    let base = DilinucbConfig {
        c,
        lambda: a.lambda,
        sigma: a.sigma,
    };
    let d = a.d.min(n).max(1);
    Ok(match kind {
        AlgorithmKind::DilinucbTabular => Box::new(Dilinucb::tabular(base, n)?),
        AlgorithmKind::DilinucbFeat => {
            let sf = laplacian_features(&instance.graph, d)?;
            Box::new(Dilinucb::new(base, sf.features)?)
        }
        AlgorithmKind::DilinucbLaplacian => {
            let sf = laplacian_features(&instance.graph, d)?;
            let lc = LaplacianConfig {
                base,
                lambda2: a.lambda2,
                cg_tol: a.cg_tol,
                cg_iters: a.cg_iters,
            };
            Box::new(LaplacianDilinucb::new(lc, &instance.graph, sf.features)?)
        }
        AlgorithmKind::Cucb => Box::new(Cucb::new(
            CucbConfig {
                sims_per_eval: a.cucb_sims,
                ..CucbConfig::default()
            },
            instance.graph.clone(),
        )?),
    })
}

/// Runs `rounds` rounds of the semi-bandit loop. Each round draws one
/// diffusion sample from `env_rng` and scores both the chosen seeds and
/// `baseline` on it.
pub fn run_learner(
    instance: &Instance,
    learner: &mut dyn Learner,
    k: usize,
    rounds: usize,
    baseline: &[usize],
    env_rng: &mut dyn RngCore,
    learner_rng: &mut dyn RngCore,
) -> Result<RegretTrace, HarnessError> {
    let g = &instance.graph;
    let params = &instance.params;
    let constraint =
        SeedConstraint::new(k, g.node_count()).map_err(|e| HarnessError::Config(e.to_string()))?;
    let mut prop = Propagator::new(g.node_count());
    let mut trace = RegretTrace::new();
    for _ in 0..rounds {
        let seeds = learner.select(constraint, learner_rng)?;
        let w = sample_diffusion(g, params, env_rng);
        let reward = prop.run(g, params, &w, &seeds)?;
        let edges = edge_level_feedback(g, &w, &prop);
        let baseline_reward = prop.run(g, params, &w, baseline)?;
        let pairwise = pairwise_feedback_with(&mut prop, g, params, &w, &seeds)?;
        learner.observe(&RoundFeedback {
            seeds: &seeds,
            pairwise: &pairwise,
            edges: &edges,
        })?;
        trace.push(RoundRecord {
            seeds,
            reward: reward as f64,
            baseline_reward: baseline_reward as f64,
        });
    }
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceRun {
    pub instance: usize,
    pub nodes: usize,
    pub edges: usize,
    pub baseline_seeds: Vec<usize>,
    /// Spread of the baseline seeds over the samples used to select them.
    pub baseline_spread: f64,
    /// Exploration weight used (after validation, if any).
    pub c: Option<f64>,
    pub final_regret: f64,
    #[serde(skip)]
    pub trace: RegretTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub algorithm: AlgorithmKind,
    pub k: usize,
    pub rounds: usize,
    pub runs: Vec<InstanceRun>,
}

impl ExperimentResult {
    pub fn mean_final_regret(&self) -> f64 {
        self.runs.iter().map(|r| r.final_regret).sum::<f64>() / self.runs.len() as f64
    }

    /// Cumulative regret averaged over instances, for `t = 1..=T`.
    pub fn mean_cumulative_regret(&self) -> Vec<f64> {
        let m = self.runs.len() as f64;
        (0..self.rounds)
            .map(|i| self.runs.iter().map(|r| r.trace.cumulative_regret()[i]).sum::<f64>() / m)
            .collect()
    }

    /// Per-step reward averaged over instances, for `t = 1..=T`.
    pub fn mean_per_step_reward(&self) -> Vec<f64> {
        let m = self.runs.len() as f64;
        (1..=self.rounds)
            .map(|t| self.runs.iter().map(|r| r.trace.per_step_reward_at(t)).sum::<f64>() / m)
            .collect()
    }
}

/// Baseline seed set: spread-greedy over `baseline_sims` shared samples.
pub fn baseline_seeds(
    config: &ExperimentConfig,
    instance: &Instance,
    index: usize,
) -> (Vec<usize>, f64) {
    let mut rng = stream_rng(config.seed, Stream::Baseline, index);
    let g = greedy_spread_seeds(
        &instance.graph,
        &instance.params,
        config.bandit.k,
        config.bandit.baseline_sims,
        &mut rng,
    );
    (g.seeds, g.spread)
}

/// Picks the exploration weight from `bandit.c_grid` with the lowest regret
/// over `validation_rounds` rounds on a dedicated stream (first wins ties).
pub fn validate_exploration(
    config: &ExperimentConfig,
    kind: AlgorithmKind,
    instance: &Instance,
    index: usize,
    baseline: &[usize],
) -> Result<f64, HarnessError> {
    let mut best: Option<(f64, f64)> = None;
    for &c in &config.bandit.c_grid {
        let mut learner = build_learner(config, kind, instance, c)?;
        let mut env = stream_rng(config.seed, Stream::Validation, index);
        let mut lr = stream_rng(config.seed ^ 0x5eed, Stream::Validation, index);
        let trace = run_learner(
            instance,
            learner.as_mut(),
            config.bandit.k,
            config.bandit.validation_rounds,
            baseline,
            &mut env,
            &mut lr,
        )?;
        let r = trace.final_regret();
        if best.is_none_or(|(_, b)| r < b) {
            best = Some((c, r));
        }
    }
    Ok(best.expect("non-empty grid").0)
}

fn run_instance(
    config: &ExperimentConfig,
    kind: AlgorithmKind,
    index: usize,
) -> Result<InstanceRun, HarnessError> {
    let instance = build_instance(config, index)?;
    let n = instance.graph.node_count();
    if config.bandit.k > n {
        return Err(HarnessError::Config(format!(
            "bandit.k = {} exceeds the {n}-node graph",
            config.bandit.k
        )));
    }
    let (baseline, baseline_spread) = baseline_seeds(config, &instance, index);
    let c = if !kind.is_dilinucb() {
        None
    } else if config.bandit.validation_rounds > 0 {
        Some(validate_exploration(config, kind, &instance, index, &baseline)?)
    } else {
        Some(exploration_weight(config, kind, n)?)
    };
    let mut learner = build_learner(config, kind, &instance, c.unwrap_or(config.algorithm.c))?;
    let mut env = stream_rng(config.seed, Stream::Environment, index);
    let mut lr = stream_rng(config.seed, Stream::Learner, index);
    let trace = run_learner(
        &instance,
        learner.as_mut(),
        config.bandit.k,
        config.bandit.rounds,
        &baseline,
        &mut env,
        &mut lr,
    )?;
    Ok(InstanceRun {
        instance: index,
        nodes: n,
        edges: instance.graph.edge_count(),
        baseline_seeds: baseline,
        baseline_spread,
        c,
        final_regret: trace.final_regret(),
        trace,
    })
}

/// Runs `kind` on `bandit.num_instances` instances in parallel.
pub fn run_algorithm(
    config: &ExperimentConfig,
    kind: AlgorithmKind,
) -> Result<ExperimentResult, HarnessError> {
    config.validate()?;
    let indices: Vec<usize> = (0..config.bandit.num_instances).collect();
    let runs = parallel::map_ordered(indices, |i| run_instance(config, kind, i))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ExperimentResult {
        algorithm: kind,
        k: config.bandit.k,
        rounds: config.bandit.rounds,
        runs,
    })
}

/// Runs the configured `bandit.algorithm`.
pub fn run_bandit_experiment(config: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
    run_algorithm(config, config.bandit.algorithm)
}

/// Runs every algorithm of `bandit.compare` on the same instances and
/// environment streams.
pub fn run_comparison(config: &ExperimentConfig) -> Result<Vec<ExperimentResult>, HarnessError> {
    config
        .bandit
        .compare
        .iter()
        .map(|&kind| run_algorithm(config, kind))
        .collect()
}

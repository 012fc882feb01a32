//! Browser demo for `oim-core`.
//!
//! Each operation is a plain function returning a JSON string so it can be
//! tested natively; the `#[wasm_bindgen]` wrappers at the bottom only map
//! errors to `JsValue`.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use oim::graph::{laplacian_features, Graph};
use oim::harness::{
    build_instance, run_comparison, verify_surrogate, AlgorithmKind, ExperimentConfig,
    GraphSource, HarnessError,
};

/// Largest Kronecker exponent the page allows (256 nodes).
pub const MAX_ITERATIONS: u32 = 8;

fn small_config(iterations: u32, seed: u64, weight_high: f64) -> Result<ExperimentConfig, HarnessError> {
    if !(1..=MAX_ITERATIONS).contains(&iterations) {
        return Err(HarnessError::Config(format!(
            "iterations must be in 1..={MAX_ITERATIONS}, got {iterations}"
        )));
    }
    let mut config = ExperimentConfig::default();
    config.seed = seed;
    config.graph = GraphSource::Kronecker {
        iterations,
        initiator: None,
        density: None,
    };
    config.diffusion.weight_high = weight_high;
    config.bandit.num_instances = 1;
    Ok(config)
}

#[derive(Debug, Serialize)]
pub struct Spectrum {
    pub nodes: usize,
    pub edges: usize,
    pub density: f64,
    pub out_degrees: Vec<usize>,
    pub eigenvalues: Vec<f64>,
    /// Feature rows, one per node.
    pub features: Vec<Vec<f64>>,
}

/// Samples a Kronecker graph and returns its degree sequence and the
/// bottom-`d` Laplacian spectrum with the matching node features.
pub fn spectrum_json(iterations: u32, seed: u64, d: usize) -> Result<String, HarnessError> {
    let config = small_config(iterations, seed, 0.1)?;
    let inst = build_instance(&config, 0)?;
    let g: &Graph = &inst.graph;
    let sf = laplacian_features(g, d)?;
    let n = g.node_count();
    let out = Spectrum {
        nodes: n,
        edges: g.edge_count(),
        density: g.density(),
        out_degrees: (0..n).map(|u| g.out_edges(u).len()).collect(),
        eigenvalues: sf.eigenvalues,
        features: (0..n).map(|v| sf.features.column(v).to_vec()).collect(),
    };
    Ok(serde_json::to_string(&out)?)
}

/// Mean Monte-Carlo spread against the surrogate on random seed sets of
/// sizes `1..=k_max`, with the greedy bounds for each size.
pub fn surrogate_curve_json(
    iterations: u32,
    seed: u64,
    weight_high: f64,
    k_max: usize,
) -> Result<String, HarnessError> {
    let mut config = small_config(iterations, seed, weight_high)?;
    let s = &mut config.surrogate;
    s.k_values = (1..=k_max).collect();
    s.reach_sims = 3000;
    s.reach_max_size = k_max.max(1);
    s.random_sets = 30;
    s.spread_sims = 200;
    s.greedy_sims = 100;
    let report = verify_surrogate(&config)?;
    Ok(serde_json::to_string(&report.rows)?)
}

#[derive(Debug, Serialize)]
pub struct Curve {
    pub algorithm: AlgorithmKind,
    pub cumulative_regret: Vec<f64>,
    pub per_step_reward: Vec<f64>,
}

/// Runs the listed algorithms (comma-separated) on one shared instance and
/// returns their regret curves.
pub fn regret_curves_json(
    iterations: u32,
    seed: u64,
    k: usize,
    rounds: usize,
    algorithms: &str,
) -> Result<String, HarnessError> {
    let mut config = small_config(iterations, seed, 0.1)?;
    config.bandit.k = k;
    config.bandit.rounds = rounds;
    config.bandit.baseline_sims = 100;
    config.algorithm.d = config.algorithm.d.min(1 << iterations);
    config.bandit.compare = algorithms
        .split(',')
        .map(|a| a.trim().parse().map_err(HarnessError::Config))
        .collect::<Result<_, _>>()?;
    let curves: Vec<Curve> = run_comparison(&config)?
        .into_iter()
        .map(|r| Curve {
            algorithm: r.algorithm,
            cumulative_regret: r.mean_cumulative_regret(),
            per_step_reward: r.mean_per_step_reward(),
        })
        .collect();
    Ok(serde_json::to_string(&curves)?)
}

fn js_err(e: HarnessError) -> JsValue {
    JsValue::from_str(&e.to_string())
}

#[wasm_bindgen]
pub fn spectrum(iterations: u32, seed: u32, d: usize) -> Result<String, JsValue> {
    spectrum_json(iterations, seed.into(), d).map_err(js_err)
}

#[wasm_bindgen]
pub fn surrogate_curve(iterations: u32, seed: u32, weight_high: f64, k_max: usize) -> Result<String, JsValue> {
    surrogate_curve_json(iterations, seed.into(), weight_high, k_max).map_err(js_err)
}

#[wasm_bindgen]
pub fn regret_curves(
    iterations: u32,
    seed: u32,
    k: usize,
    rounds: usize,
    algorithms: &str,
) -> Result<String, JsValue> {
    regret_curves_json(iterations, seed.into(), k, rounds, algorithms).map_err(js_err)
}

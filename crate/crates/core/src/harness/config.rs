//! Versioned TOML experiment configuration.
//!
//! Every section has defaults, so an empty file (plus `version = 1`) is a
//! valid 64-node Kronecker IC experiment. CLI flags override file values
//! through [`ExperimentConfig::apply_overrides`].

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::diffusion::DiffusionModel;
use crate::graph::{Initiator, DEFAULT_INITIATOR};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    /// Master seed; every random stream of the run is derived from it.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub graph: GraphSource,
    #[serde(default)]
    pub diffusion: DiffusionConfig,
    #[serde(default)]
    pub bandit: BanditSection,
    #[serde(default)]
    pub algorithm: AlgorithmParams,
    #[serde(default)]
    pub surrogate: SurrogateSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            seed: 0,
            graph: GraphSource::default(),
            diffusion: DiffusionConfig::default(),
            bandit: BanditSection::default(),
            algorithm: AlgorithmParams::default(),
            surrogate: SurrogateSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GraphSource {
    /// Stochastic Kronecker graph on `2^iterations` nodes. With `density`
    /// set, the initiator is scaled so the expected arc density matches it.
    Kronecker {
        iterations: u32,
        #[serde(default)]
        initiator: Option<Initiator>,
        #[serde(default)]
        density: Option<f64>,
    },
    /// Edge-list file; `bidirect` expands every arc into both directions.
    File {
        path: PathBuf,
        #[serde(default)]
        bidirect: bool,
    },
}

impl Default for GraphSource {
    fn default() -> Self {
        GraphSource::Kronecker {
            iterations: 6,
            initiator: Some(DEFAULT_INITIATOR),
            density: Some(0.03),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionConfig {
    pub model: DiffusionModel,
    /// Arc weights are drawn from `U(weight_low, weight_high)` once per instance.
    pub weight_low: f64,
    pub weight_high: f64,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        Self {
            model: DiffusionModel::Ic,
            weight_low: 0.0,
            weight_high: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmKind {
    DilinucbTabular,
    DilinucbFeat,
    DilinucbLaplacian,
    Cucb,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 4] = [
        AlgorithmKind::DilinucbTabular,
        AlgorithmKind::DilinucbFeat,
        AlgorithmKind::DilinucbLaplacian,
        AlgorithmKind::Cucb,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AlgorithmKind::DilinucbTabular => "dilinucb-tabular",
            AlgorithmKind::DilinucbFeat => "dilinucb-feat",
            AlgorithmKind::DilinucbLaplacian => "dilinucb-laplacian",
            AlgorithmKind::Cucb => "cucb",
        }
    }

    pub fn is_dilinucb(self) -> bool {
        self != AlgorithmKind::Cucb
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgorithmKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        AlgorithmKind::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = AlgorithmKind::ALL.iter().map(|a| a.as_str()).collect();
                format!("unknown algorithm {s:?} (expected one of {})", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BanditSection {
    pub k: usize,
    pub rounds: usize,
    pub algorithm: AlgorithmKind,
    /// Algorithms run by `compare`.
    pub compare: Vec<AlgorithmKind>,
    /// Independent graph/weight instances per run.
    pub num_instances: usize,
    /// Diffusion samples for the greedy baseline seed set.
    pub baseline_sims: usize,
    /// Length of the optional exploration-weight validation phase (0 = off).
    pub validation_rounds: usize,
    /// Candidate exploration weights tried during validation.
    pub c_grid: Vec<f64>,
}

impl Default for BanditSection {
    fn default() -> Self {
        Self {
            k: 5,
            rounds: 1000,
            algorithm: AlgorithmKind::DilinucbTabular,
            compare: AlgorithmKind::ALL.to_vec(),
            num_instances: 1,
            baseline_sims: 200,
            validation_rounds: 0,
            c_grid: vec![0.1, 0.5, 1.0, 2.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgorithmParams {
    /// Exploration weight; replaced by the regret-analysis value when
    /// `theoretical_c` is set.
    pub c: f64,
    pub theoretical_c: bool,
    pub lambda: f64,
    pub sigma: f64,
    /// Feature dimension for the feature-based variants.
    pub d: usize,
    pub lambda2: f64,
    pub cg_tol: f64,
    pub cg_iters: usize,
    /// Samples per spread evaluation in the CUCB oracle.
    pub cucb_sims: usize,
}

impl Default for AlgorithmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            theoretical_c: false,
            lambda: 1e-4,
            sigma: 1.0,
            d: 10,
            lambda2: 0.1,
            cg_tol: 1e-8,
            cg_iters: 100,
            cucb_sims: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurrogateSection {
    pub k_values: Vec<usize>,
    /// Simulations used to estimate the reachability table.
    pub reach_sims: usize,
    /// Cardinality range of the random seed sets used for estimation.
    pub reach_min_size: usize,
    pub reach_max_size: usize,
    /// Random seed sets evaluated per cardinality.
    pub random_sets: usize,
    /// Simulations per spread estimate.
    pub spread_sims: usize,
    /// Shared samples for the spread-greedy seed set.
    pub greedy_sims: usize,
}

impl Default for SurrogateSection {
    fn default() -> Self {
        Self {
            k_values: vec![2, 5, 10, 15],
            reach_sims: 20_000,
            reach_min_size: 1,
            reach_max_size: 35,
            random_sets: 100,
            spread_sims: 500,
            greedy_sims: 200,
        }
    }
}

/// Values given on the command line; `None` keeps the file value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub k: Option<usize>,
    pub rounds: Option<usize>,
    pub algorithm: Option<AlgorithmKind>,
}

fn invalid(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn apply_overrides(&mut self, o: &Overrides) -> Result<(), HarnessError> {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(k) = o.k {
            self.bandit.k = k;
        }
        if let Some(t) = o.rounds {
            self.bandit.rounds = t;
        }
        if let Some(a) = o.algorithm {
            self.bandit.algorithm = a;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.version != CONFIG_VERSION {
            return Err(invalid(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        match &self.graph {
            GraphSource::Kronecker {
                iterations,
                initiator,
                density,
            } => {
                if !(1..=16).contains(iterations) {
                    return Err(invalid(format!("graph.iterations = {iterations} not in 1..=16")));
                }
                if let Some(init) = initiator {
                    if init.iter().flatten().any(|p| !(0.0..=1.0).contains(p)) {
                        return Err(invalid("graph.initiator entries must lie in [0, 1]"));
                    }
                }
                if let Some(d) = density {
                    if !(*d > 0.0 && *d <= 1.0) {
                        return Err(invalid(format!("graph.density = {d} not in (0, 1]")));
                    }
                }
            }
            GraphSource::File { path, .. } => {
                if path.as_os_str().is_empty() {
                    return Err(invalid("graph.path is empty"));
                }
            }
        }
        let DiffusionConfig {
            weight_low: lo,
            weight_high: hi,
            ..
        } = self.diffusion;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(invalid(format!(
                "weight bounds must satisfy 0 <= low <= high <= 1, got [{lo}, {hi}]"
            )));
        }
        let b = &self.bandit;
        for (name, v) in [
            ("bandit.k", b.k),
            ("bandit.rounds", b.rounds),
            ("bandit.num_instances", b.num_instances),
            ("bandit.baseline_sims", b.baseline_sims),
        ] {
            if v == 0 {
                return Err(invalid(format!("{name} must be at least 1")));
            }
        }
        if b.compare.is_empty() {
            return Err(invalid("bandit.compare is empty"));
        }
        if b.validation_rounds > 0 && b.c_grid.is_empty() {
            return Err(invalid("bandit.c_grid is empty but validation is enabled"));
        }
        if let Some(c) = b.c_grid.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
            return Err(invalid(format!("bandit.c_grid entry {c} is not positive")));
        }
        let a = &self.algorithm;
        for (name, v) in [
            ("algorithm.c", a.c),
            ("algorithm.lambda", a.lambda),
            ("algorithm.sigma", a.sigma),
            ("algorithm.cg_tol", a.cg_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} = {v} must be positive")));
            }
        }
        if !(a.lambda2 >= 0.0 && a.lambda2.is_finite()) {
            return Err(invalid(format!("algorithm.lambda2 = {} must be >= 0", a.lambda2)));
        }
        for (name, v) in [
            ("algorithm.d", a.d),
            ("algorithm.cg_iters", a.cg_iters),
            ("algorithm.cucb_sims", a.cucb_sims),
        ] {
            if v == 0 {
                return Err(invalid(format!("{name} must be at least 1")));
            }
        }
        let s = &self.surrogate;
        if s.k_values.is_empty() || s.k_values.contains(&0) {
            return Err(invalid("surrogate.k_values must be non-empty and positive"));
        }
        if s.reach_min_size == 0 || s.reach_min_size > s.reach_max_size {
            return Err(invalid("surrogate.reach_min_size must be in 1..=reach_max_size"));
        }
        for (name, v) in [
            ("surrogate.reach_sims", s.reach_sims),
            ("surrogate.random_sets", s.random_sets),
            ("surrogate.spread_sims", s.spread_sims),
            ("surrogate.greedy_sims", s.greedy_sims),
        ] {
            if v == 0 {
                return Err(invalid(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }
}

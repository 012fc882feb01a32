use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{positive, BanditError, Learner, RoundFeedback};
use crate::diffusion::{PairwiseFeedback, ReachabilityTable};
use crate::graph::FeatureMatrix;
use crate::numerics::{self, Cholesky, SymMatrix};
use crate::surrogate::{Oracle, SeedConstraint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DilinucbConfig {
    /// Exploration weight.
    pub c: f64,
    /// Ridge regularizer; every Gram matrix starts at `lambda·I`.
    pub lambda: f64,
    /// Observation noise scale.
    pub sigma: f64,
}

impl DilinucbConfig {
    pub fn validate(&self) -> Result<(), BanditError> {
        positive("c", self.c)?;
        positive("lambda", self.lambda)?;
        positive("sigma", self.sigma)
    }
}

/// How `Σ θ = σ⁻² b` and the confidence widths are solved.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum GramSolver {
    #[default]
    Cholesky,
    ConjugateGradient { tol: f64, max_iters: usize },
}

/// Sufficient statistics of one source node.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceState {
    pub gram: SymMatrix,
    pub response: Vec<f64>,
    pub weight: Vec<f64>,
    pub selections: u64,
}

impl SourceState {
    fn new(d: usize, lambda: f64) -> Self {
        Self {
            gram: SymMatrix::scaled_identity(d, lambda),
            response: vec![0.0; d],
            weight: vec![0.0; d],
            selections: 0,
        }
    }
}

/// Upper confidence bounds `p̄[u][v]`, always within `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UcbTable(ReachabilityTable);

impl UcbTable {
    pub fn optimistic(n: usize) -> Self {
        Self(ReachabilityTable::filled(n, 1.0).expect("1.0 is a valid probability"))
    }

    pub(super) fn table_mut(&mut self) -> &mut ReachabilityTable {
        &mut self.0
    }

    pub fn table(&self) -> &ReachabilityTable {
        &self.0
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.0.get(u, v)
    }
}

/// DILinUCB with independent per-source estimation.
#[derive(Debug, Clone)]
pub struct Dilinucb {
    config: DilinucbConfig,
    features: FeatureMatrix,
    /// `X Xᵀ`, added (scaled by σ⁻²) to a Gram matrix on every selection.
    feature_gram: SymMatrix,
    diagonal: bool,
    states: Vec<SourceState>,
    ucb: UcbTable,
    oracle: Oracle,
    solver: GramSolver,
    round: u64,
    name: String,
}

impl Dilinucb {
    pub fn new(config: DilinucbConfig, features: FeatureMatrix) -> Result<Self, BanditError> {
        config.validate()?;
        let n = features.node_count();
        let d = features.dim();
        let feature_gram = features.gram();
        Ok(Self {
            diagonal: feature_gram.is_diagonal(),
            feature_gram,
            states: (0..n).map(|_| SourceState::new(d, config.lambda)).collect(),
            ucb: UcbTable::optimistic(n),
            oracle: Oracle::LazyGreedy,
            solver: GramSolver::Cholesky,
            round: 0,
            name: if d == n && features == FeatureMatrix::identity(n) {
                "dilinucb-tabular".into()
            } else {
                format!("dilinucb-feat(d={d})")
            },
            config,
            features,
        })
    }

    /// Tabular variant, `X = I_n`.
    pub fn tabular(config: DilinucbConfig, n: usize) -> Result<Self, BanditError> {
        Self::new(config, FeatureMatrix::identity(n))
    }

    pub fn with_oracle(mut self, oracle: Oracle) -> Self {
        self.oracle = oracle;
        self
    }

    pub fn with_solver(mut self, solver: GramSolver) -> Self {
        self.solver = solver;
        self
    }

    pub fn config(&self) -> &DilinucbConfig {
        &self.config
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn states(&self) -> &[SourceState] {
        &self.states
    }

    pub fn ucb(&self) -> &UcbTable {
        &self.ucb
    }

    pub fn rounds_observed(&self) -> u64 {
        self.round
    }

    pub fn node_count(&self) -> usize {
        self.states.len()
    }

    /// Seeds chosen by the oracle on the current UCB table.
    pub fn select_seeds(&self, constraint: SeedConstraint) -> Result<Vec<usize>, BanditError> {
        Ok(self.oracle.select(self.ucb.table(), constraint)?.seeds)
    }

    /// Folds one round of pairwise feedback into the selected sources and
    /// refreshes their UCB rows; other sources are untouched.
    pub fn update(&mut self, feedback: &PairwiseFeedback) -> Result<(), BanditError> {
        let n = self.node_count();
        for (&u, y) in feedback {
            if u >= n {
                return Err(BanditError::SourceOutOfRange(u));
            }
            if y.len() != n {
                return Err(BanditError::FeedbackLength {
                    source_node: u,
                    got: y.len(),
                    expected: n,
                });
            }
        }
        let inv_var = self.config.sigma.powi(-2);
        for (&u, y) in feedback {
            let xy = self.features.apply_indicator(y);
            let state = &mut self.states[u];
            for (b, v) in state.response.iter_mut().zip(xy) {
                *b += v;
            }
            state.gram.add_scaled(&self.feature_gram, inv_var)?;
            state.selections += 1;
            self.refresh_source(u)?;
        }
        self.round += 1;
        Ok(())
    }

    /// Recomputes `θ̂_u` and row `u` of the UCB table from the current
    /// statistics.
    pub fn refresh_source(&mut self, u: usize) -> Result<(), BanditError> {
        let inv_var = self.config.sigma.powi(-2);
        let c = self.config.c;
        let state = &mut self.states[u];
        let rhs: Vec<f64> = state.response.iter().map(|b| inv_var * b).collect();
        let features = &self.features;
        let n = features.node_count();
        let widths: Vec<f64> = if self.diagonal {
            let diag: Vec<f64> = (0..features.dim()).map(|k| state.gram.get(k, k)).collect();
            state.weight = rhs.iter().zip(&diag).map(|(r, g)| r / g).collect();
            (0..n)
                .map(|v| {
                    features
                        .column(v)
                        .iter()
                        .zip(&diag)
                        .map(|(x, g)| x * x / g)
                        .sum::<f64>()
                })
                .collect()
        } else {
            match self.solver {
                GramSolver::Cholesky => {
                    let chol = Cholesky::factor(&state.gram)?;
                    state.weight = chol.solve(&rhs)?;
                    let mut scratch = Vec::new();
                    (0..n)
                        .map(|v| chol.inverse_quadratic_form(features.column(v), &mut scratch))
                        .collect()
                }
                GramSolver::ConjugateGradient { tol, max_iters } => {
                    let gram = &state.gram;
                    let apply = |x: &[f64], y: &mut [f64]| y.copy_from_slice(&gram.mul_vec(x));
                    let out = numerics::conjugate_gradient(apply, &rhs, &state.weight, tol, max_iters)?;
                    state.weight = out.x;
                    let zero = vec![0.0; features.dim()];
                    (0..n)
                        .map(|v| {
                            let x = features.column(v);
                            numerics::conjugate_gradient(apply, x, &zero, tol, max_iters)
                                .map(|s| numerics::dot(x, &s.x))
                        })
                        .collect::<Result<_, _>>()?
                }
            }
        };
        let weight = &state.weight;
        let row = (0..n).map(|v| {
            let mean = numerics::dot(weight, features.column(v));
            mean + c * widths[v].max(0.0).sqrt()
        });
        self.ucb.0.set_row_clamped(u, row);
        Ok(())
    }

    /// `‖Σ_u θ̂_u − σ⁻² b_u‖ / ‖σ⁻² b_u‖` (0 when `b_u = 0`).
    pub fn weight_residual(&self, u: usize) -> f64 {
        let s = &self.states[u];
        let inv_var = self.config.sigma.powi(-2);
        let rhs: Vec<f64> = s.response.iter().map(|b| inv_var * b).collect();
        let lhs = s.gram.mul_vec(&s.weight);
        let diff: Vec<f64> = lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect();
        let scale = numerics::norm2(&rhs);
        if scale == 0.0 {
            numerics::norm2(&diff)
        } else {
            numerics::norm2(&diff) / scale
        }
    }

    /// Confidence width `c·‖x_v‖_{Σ_u⁻¹}`.
    pub fn confidence_width(&self, u: usize, v: usize) -> Result<f64, BanditError> {
        let chol = Cholesky::factor(&self.states[u].gram)?;
        let mut scratch = Vec::new();
        let q = chol.inverse_quadratic_form(self.features.column(v), &mut scratch);
        Ok(self.config.c * q.sqrt())
    }

    pub fn snapshot(&self) -> DilinucbSnapshot {
        DilinucbSnapshot {
            format: SNAPSHOT_FORMAT.into(),
            version: SNAPSHOT_VERSION,
            round: self.round,
            dim: self.features.dim(),
            config: self.config,
            sources: self
                .states
                .iter()
                .map(|s| SourceSnapshot {
                    gram_lower: s.gram.packed().to_vec(),
                    response: s.response.clone(),
                    weight: s.weight.clone(),
                    selections: s.selections,
                })
                .collect(),
            ucb: self.ucb.table().as_slice().to_vec(),
        }
    }

    /// Rebuilds a learner from a snapshot and the feature matrix it was
    /// trained with.
    pub fn restore(snapshot: &DilinucbSnapshot, features: FeatureMatrix) -> Result<Self, BanditError> {
        if snapshot.format != SNAPSHOT_FORMAT || snapshot.version != SNAPSHOT_VERSION {
            return Err(BanditError::Snapshot(format!(
                "unsupported snapshot {} v{}",
                snapshot.format, snapshot.version
            )));
        }
        let n = features.node_count();
        let d = features.dim();
        if snapshot.dim != d || snapshot.sources.len() != n || snapshot.ucb.len() != n * n {
            return Err(BanditError::Snapshot("dimensions do not match the features".into()));
        }
        let mut me = Self::new(snapshot.config, features)?;
        for (state, s) in me.states.iter_mut().zip(&snapshot.sources) {
            if s.response.len() != d || s.weight.len() != d {
                return Err(BanditError::Snapshot("source vector length".into()));
            }
            state.gram = SymMatrix::from_packed(d, s.gram_lower.clone())?;
            state.response.clone_from(&s.response);
            state.weight.clone_from(&s.weight);
            state.selections = s.selections;
        }
        me.ucb = UcbTable(
            ReachabilityTable::from_flat(n, snapshot.ucb.clone())
                .map_err(|e| BanditError::Snapshot(e.to_string()))?,
        );
        me.round = snapshot.round;
        Ok(me)
    }
}

impl Learner for Dilinucb {
    fn name(&self) -> &str {
        &self.name
    }

    fn select(
        &mut self,
        constraint: SeedConstraint,
        _rng: &mut dyn RngCore,
    ) -> Result<Vec<usize>, BanditError> {
        self.select_seeds(constraint)
    }

    fn observe(&mut self, feedback: &RoundFeedback<'_>) -> Result<(), BanditError> {
        self.update(feedback.pairwise)
    }
}

const SNAPSHOT_FORMAT: &str = "dilinucb-snapshot";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSnapshot {
    pub gram_lower: Vec<f64>,
    pub response: Vec<f64>,
    pub weight: Vec<f64>,
    pub selections: u64,
}

/// Resumable learner state, serialized as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilinucbSnapshot {
    pub format: String,
    pub version: u32,
    pub round: u64,
    pub dim: usize,
    pub config: DilinucbConfig,
    pub sources: Vec<SourceSnapshot>,
    /// Row-major UCB table.
    pub ucb: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{laplacian_features, Graph};
    use std::collections::BTreeMap;

    fn cfg(c: f64) -> DilinucbConfig {
        DilinucbConfig {
            c,
            lambda: 1.0,
            sigma: 1.0,
        }
    }

    fn fb(entries: &[(usize, Vec<bool>)]) -> PairwiseFeedback {
        entries.iter().cloned().collect::<BTreeMap<_, _>>()
    }

    #[test]
    fn init_is_optimistic_with_lambda_gram() {
        let l = Dilinucb::tabular(
            DilinucbConfig {
                c: 1.0,
                lambda: 2.0,
                sigma: 1.0,
            },
            4,
        )
        .unwrap();
        for u in 0..4 {
            for v in 0..4 {
                assert_eq!(l.ucb().get(u, v), 1.0);
            }
            let s = &l.states()[u];
            assert_eq!(s.gram, SymMatrix::scaled_identity(4, 2.0));
            assert!(s.response.iter().chain(&s.weight).all(|&x| x == 0.0));
        }
        let one_d = FeatureMatrix::from_columns(1, &[vec![1.0], vec![0.5]]).unwrap();
        let l = Dilinucb::new(
            DilinucbConfig {
                c: 1.0,
                lambda: 2.0,
                sigma: 1.0,
            },
            one_d,
        )
        .unwrap();
        assert_eq!(l.states()[0].gram.to_dense(), vec![2.0]);
    }

    #[test]
    fn zero_weight_recompute_is_pure_bonus() {
        let sf = laplacian_features(&Graph::new(3, [(0, 1), (1, 2)]).unwrap(), 2).unwrap();
        let c = 0.3;
        let lambda = 4.0;
        let mut l = Dilinucb::new(
            DilinucbConfig {
                c,
                lambda,
                sigma: 1.0,
            },
            sf.features.clone(),
        )
        .unwrap();
        l.refresh_source(1).unwrap();
        for v in 0..3 {
            let want = (c * sf.features.column_norm(v) / lambda.sqrt()).min(1.0);
            assert!((l.ucb().get(1, v) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn tabular_single_update_by_hand() {
        let c = 0.2;
        let mut l = Dilinucb::tabular(cfg(c), 3).unwrap();
        l.update(&fb(&[(1, vec![true, true, false])])).unwrap();
        let s = &l.states()[1];
        assert_eq!(s.gram.get(0, 0), 2.0);
        assert_eq!(s.response, vec![1.0, 1.0, 0.0]);
        assert_eq!(s.weight, vec![0.5, 0.5, 0.0]);
        let bonus = c / 2f64.sqrt();
        assert!((l.ucb().get(1, 0) - (0.5 + bonus)).abs() < 1e-15);
        assert!((l.ucb().get(1, 2) - bonus).abs() < 1e-15);
        // untouched rows
        for u in [0, 2] {
            for v in 0..3 {
                assert_eq!(l.ucb().get(u, v), 1.0);
            }
            assert_eq!(l.states()[u].selections, 0);
        }
    }

    #[test]
    fn projection_clamps_to_one() {
        let mut l = Dilinucb::tabular(cfg(1.2), 2).unwrap();
        l.update(&fb(&[(0, vec![true, false])])).unwrap();
        // 0.5 + 1.2/√2 ≈ 1.35
        assert_eq!(l.ucb().get(0, 0), 1.0);
    }

    #[test]
    fn feedback_validation() {
        let mut l = Dilinucb::tabular(cfg(1.0), 2).unwrap();
        assert_eq!(
            l.update(&fb(&[(0, vec![true])])),
            Err(BanditError::FeedbackLength {
                source_node: 0,
                got: 1,
                expected: 2
            })
        );
        assert_eq!(
            l.update(&fb(&[(5, vec![true, true])])),
            Err(BanditError::SourceOutOfRange(5))
        );
        assert!(Dilinucb::tabular(cfg(0.0), 2).is_err());
    }

    #[test]
    fn cholesky_and_cg_backends_agree() {
        let g = Graph::new(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (0, 3)]).unwrap();
        let sf = laplacian_features(&g, 3).unwrap();
        let mut a = Dilinucb::new(cfg(0.5), sf.features.clone()).unwrap();
        let mut b = Dilinucb::new(cfg(0.5), sf.features.clone())
            .unwrap()
            .with_solver(GramSolver::ConjugateGradient {
                tol: 1e-12,
                max_iters: 100,
            });
        let y = vec![true, true, false, true, false, false];
        for _ in 0..3 {
            a.update(&fb(&[(2, y.clone())])).unwrap();
            b.update(&fb(&[(2, y.clone())])).unwrap();
        }
        for v in 0..6 {
            assert!((a.ucb().get(2, v) - b.ucb().get(2, v)).abs() < 1e-8);
        }
        assert!(a.weight_residual(2) <= 1e-8);
        assert!(b.weight_residual(2) <= 1e-8);
    }

    #[test]
    fn snapshot_round_trip() {
        let mut l = Dilinucb::tabular(cfg(0.7), 3).unwrap();
        l.update(&fb(&[(0, vec![true, false, true]), (2, vec![false, true, true])]))
            .unwrap();
        let snap = l.snapshot();
        let text = serde_json::to_string(&snap).unwrap();
        let back: DilinucbSnapshot = serde_json::from_str(&text).unwrap();
        let r = Dilinucb::restore(&back, FeatureMatrix::identity(3)).unwrap();
        assert_eq!(r.states(), l.states());
        assert_eq!(r.ucb(), l.ucb());
        assert_eq!(r.rounds_observed(), 1);
        let mut bad = back.clone();
        bad.version = 99;
        assert!(Dilinucb::restore(&bad, FeatureMatrix::identity(3)).is_err());
    }
}

//! Laplacian-regularized DILinUCB.
//!
//! All source weights are solved jointly from
//! `[(g·β + λI + λ₂L) ⊗ I_d] θ = σ⁻² b`, where `β` counts selections per
//! source and `g = σ⁻²·tr(XXᵀ)/d` is the per-selection data weight (1 for
//! orthonormal features with σ = 1). The system is solved by warm-started
//! conjugate gradient (Jacobi-preconditioned) using the O(d(n+m))
//! structured matvec.
//!
//! Confidence widths use the per-source scalar `D_u`, updated on selection by
//! `D_u ← D_u / (1 + g·D_u)` from `D_u = 1/λ`. With `λ₂ = 0` this is exactly
//! the diagonal of the system inverse. With `λ₂ > 0` the true inverse
//! diagonal also depends on neighbors; the recursion ignores that coupling.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{positive, BanditError, DilinucbConfig, Learner, RoundFeedback, UcbTable};
use crate::diffusion::{PairwiseFeedback, ReachabilityTable};
use crate::graph::{laplacian_operator, FeatureMatrix, Graph};
use crate::numerics::{self, LaplacianOperator};
use crate::surrogate::{Oracle, SeedConstraint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplacianConfig {
    pub base: DilinucbConfig,
    /// Laplacian penalty weight `λ₂ ≥ 0`.
    pub lambda2: f64,
    pub cg_tol: f64,
    pub cg_iters: usize,
}

impl LaplacianConfig {
    pub fn validate(&self) -> Result<(), BanditError> {
        self.base.validate()?;
        if !(self.lambda2 >= 0.0 && self.lambda2.is_finite()) {
            return Err(BanditError::InvalidParameter {
                name: "lambda2",
                value: self.lambda2,
            });
        }
        positive("cg_tol", self.cg_tol)
    }
}

/// Stacked state of the regularized estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianRegState {
    /// `n·d` stacked source weights, block `u` is `θ_u`.
    pub theta: Vec<f64>,
    /// Selection count per source.
    pub beta_diag: Vec<u64>,
    pub d_diag: Vec<f64>,
    pub lambda2: f64,
    /// `n·d` stacked responses `b_u = Σ X y_u`.
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgReport {
    pub iterations: usize,
    pub converged: bool,
    pub relative_residual: f64,
}

#[derive(Debug, Clone)]
pub struct LaplacianDilinucb {
    config: LaplacianConfig,
    features: FeatureMatrix,
    feature_norms: Vec<f64>,
    laplacian: LaplacianOperator,
    data_weight: f64,
    state: LaplacianRegState,
    ucb: UcbTable,
    oracle: Oracle,
    last_cg: Option<CgReport>,
    cg_history: Vec<CgReport>,
    name: String,
}

impl LaplacianDilinucb {
    pub fn new(
        config: LaplacianConfig,
        graph: &Graph,
        features: FeatureMatrix,
    ) -> Result<Self, BanditError> {
        config.validate()?;
        let n = graph.node_count();
        if features.node_count() != n {
            return Err(BanditError::FeatureMismatch {
                features: features.node_count(),
                graph: n,
            });
        }
        let d = features.dim();
        let inv_var = config.base.sigma.powi(-2);
        let data_weight = inv_var * features.gram().trace() / d as f64;
        let feature_norms = (0..n).map(|v| features.column_norm(v)).collect();
        Ok(Self {
            laplacian: laplacian_operator(graph),
            state: LaplacianRegState {
                theta: vec![0.0; n * d],
                beta_diag: vec![0; n],
                d_diag: vec![1.0 / config.base.lambda; n],
                lambda2: config.lambda2,
                b: vec![0.0; n * d],
            },
            ucb: UcbTable::optimistic(n),
            oracle: Oracle::LazyGreedy,
            last_cg: None,
            cg_history: Vec::new(),
            name: format!("dilinucb-laplacian(d={d})"),
            feature_norms,
            data_weight,
            features,
            config,
        })
    }

    pub fn with_oracle(mut self, oracle: Oracle) -> Self {
        self.oracle = oracle;
        self
    }

    pub fn state(&self) -> &LaplacianRegState {
        &self.state
    }

    pub fn ucb(&self) -> &UcbTable {
        &self.ucb
    }

    pub fn last_cg(&self) -> Option<CgReport> {
        self.last_cg
    }

    /// CG report of every update so far.
    pub fn cg_history(&self) -> &[CgReport] {
        &self.cg_history
    }

    /// Per-node diagonal of the system matrix before the Laplacian term:
    /// `g·β_u + λ`.
    pub fn system_diagonal(&self) -> Vec<f64> {
        self.state
            .beta_diag
            .iter()
            .map(|&k| self.data_weight * k as f64 + self.config.base.lambda)
            .collect()
    }

    pub fn laplacian(&self) -> &LaplacianOperator {
        &self.laplacian
    }

    pub fn select_seeds(&self, constraint: SeedConstraint) -> Result<Vec<usize>, BanditError> {
        Ok(self.oracle.select(self.ucb.table(), constraint)?.seeds)
    }

    pub fn update(&mut self, feedback: &PairwiseFeedback) -> Result<CgReport, BanditError> {
        let n = self.state.beta_diag.len();
        let d = self.features.dim();
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
        for (&u, y) in feedback {
            let xy = self.features.apply_indicator(y);
            for (b, v) in self.state.b[u * d..(u + 1) * d].iter_mut().zip(xy) {
                *b += v;
            }
            self.state.beta_diag[u] += 1;
            let dd = self.state.d_diag[u];
            self.state.d_diag[u] = dd / (1.0 + self.data_weight * dd);
        }
        let report = self.solve()?;
        self.recompute_all_rows();
        self.last_cg = Some(report);
        self.cg_history.push(report);
        Ok(report)
    }

    fn solve(&mut self) -> Result<CgReport, BanditError> {
        let inv_var = self.config.base.sigma.powi(-2);
        let rhs: Vec<f64> = self.state.b.iter().map(|x| inv_var * x).collect();
        let diag = self.system_diagonal();
        let lap = &self.laplacian;
        let lambda2 = self.config.lambda2;
        let d = self.features.dim();
        let inv_diag: Vec<f64> = diag
            .iter()
            .enumerate()
            .flat_map(|(u, a)| {
                std::iter::repeat_n(1.0 / (a + lambda2 * lap.degree(u) as f64), d)
            })
            .collect();
        let out = numerics::preconditioned_conjugate_gradient(
            |v, y| {
                numerics::kron_block_apply_into(&diag, lap, lambda2, v, y)
                    .expect("dimensions fixed at construction")
            },
            Some(&inv_diag),
            &rhs,
            &self.state.theta,
            self.config.cg_tol,
            self.config.cg_iters,
        )?;
        self.state.theta = out.x;
        Ok(CgReport {
            iterations: out.iterations,
            converged: out.converged,
            relative_residual: out.relative_residual,
        })
    }

    fn recompute_all_rows(&mut self) {
        let n = self.state.beta_diag.len();
        let d = self.features.dim();
        let c = self.config.base.c;
        for u in 0..n {
            let theta = &self.state.theta[u * d..(u + 1) * d];
            let width = c * self.state.d_diag[u].sqrt();
            let features = &self.features;
            let norms = &self.feature_norms;
            let row: Vec<f64> = (0..n)
                .map(|v| numerics::dot(theta, features.column(v)) + width * norms[v])
                .collect();
            self.ucb.table_mut().set_row_clamped(u, row);
        }
    }

    /// Mean reachability estimates `⟨θ_u, x_v⟩` without the bonus, clamped.
    pub fn mean_table(&self) -> ReachabilityTable {
        let n = self.state.beta_diag.len();
        let d = self.features.dim();
        let mut t = ReachabilityTable::filled(n, 0.0).expect("zero table");
        for u in 0..n {
            let theta = &self.state.theta[u * d..(u + 1) * d];
            t.set_row_clamped(
                u,
                (0..n).map(|v| numerics::dot(theta, self.features.column(v))),
            );
        }
        t
    }
}

impl Learner for LaplacianDilinucb {
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
        self.update(feedback.pairwise).map(|_| ())
    }
}

//! Model-independent online influence maximization.
//!
//! The crate learns pairwise reachability probabilities `p[u][v]` directly
//! from diffusion feedback instead of fitting edge-level parameters of a
//! specific diffusion model. Seeds are chosen by maximizing the surrogate
//! `f(S, p) = Σ_v max_{u∈S} p[u][v]` under optimistic estimates.
//!
//! - [`graph`]: directed graphs, Kronecker generation, Laplacian features.
//! - [`diffusion`]: IC/LT simulation, pairwise feedback, spread estimation.
//! - [`surrogate`]: the surrogate objective and its seed-selection oracles.
//! - [`bandit`]: DILinUCB, its Laplacian-regularized variant and a CUCB baseline.
//! - [`harness`]: configured experiments, regret traces and reports.
//! - [`numerics`]: small dense/sparse linear algebra used by the above.

pub mod bandit;
pub mod diffusion;
pub mod graph;
pub mod greedy;
pub mod harness;
pub mod numerics;
pub mod parallel;
pub mod surrogate;

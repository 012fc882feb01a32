//! Directed social-network graphs, edge-list I/O, stochastic Kronecker
//! generation and spectral target features.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{self, LaplacianOperator, NumericsError, SymMatrix};

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("self-loop at line {line} (node {node})")]
    SelfLoop { line: usize, node: usize },
    #[error("edge ({0}, {1}) is a self-loop")]
    SelfLoopEdge(usize, usize),
    #[error("edge ({u}, {v}) references a node outside 0..{n}")]
    NodeOutOfRange { u: usize, v: usize, n: usize },
    #[error("initiator entry {0} is outside [0, 1]")]
    InvalidInitiator(f64),
    #[error("kronecker iterations must be in 1..=30, got {0}")]
    InvalidIterations(u32),
    #[error("feature dimension {d} must be in 1..={n}")]
    InvalidDimension { d: usize, n: usize },
    #[error("target density {0} is unreachable with this initiator")]
    UnreachableDensity(f64),
    #[error("feature column {column} has norm {norm} > 1")]
    FeatureNorm { column: usize, norm: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Directed graph on nodes `0..n` without self-loops or parallel arcs.
///
/// Adjacency lists carry the index of the arc in `edges`, which is the index
/// used by per-edge parameters and diffusion samples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphRepr", into = "GraphRepr")]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    out_adj: Vec<Vec<(usize, usize)>>,
    in_adj: Vec<Vec<(usize, usize)>>,
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<GraphRepr> for Graph {
    type Error = GraphError;
    fn try_from(r: GraphRepr) -> Result<Self, GraphError> {
        Graph::new(r.n, r.edges)
    }
}

impl From<Graph> for GraphRepr {
    fn from(g: Graph) -> Self {
        GraphRepr {
            n: g.n,
            edges: g.edges,
        }
    }
}

impl Graph {
    /// Builds a graph, dropping repeated arcs (first occurrence kept).
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, GraphError> {
        let mut seen = HashSet::new();
        let mut kept = Vec::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(GraphError::NodeOutOfRange { u, v, n });
            }
            if u == v {
                return Err(GraphError::SelfLoopEdge(u, v));
            }
            if seen.insert((u, v)) {
                kept.push((u, v));
            }
        }
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        for (i, &(u, v)) in kept.iter().enumerate() {
            out_adj[u].push((v, i));
            in_adj[v].push((u, i));
        }
        Ok(Self {
            n,
            edges: kept,
            out_adj,
            in_adj,
        })
    }

    pub fn empty(n: usize) -> Self {
        Self::new(n, []).expect("empty graph is valid")
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// `(target, edge index)` pairs.
    pub fn out_edges(&self, u: usize) -> &[(usize, usize)] {
        &self.out_adj[u]
    }

    /// `(source, edge index)` pairs.
    pub fn in_edges(&self, v: usize) -> &[(usize, usize)] {
        &self.in_adj[v]
    }

    /// Expands every arc into both directions.
    pub fn bidirected(&self) -> Self {
        let edges = self
            .edges
            .iter()
            .flat_map(|&(u, v)| [(u, v), (v, u)])
            .collect::<Vec<_>>();
        Self::new(self.n, edges).expect("reversal of a valid graph is valid")
    }

    /// Neighbor sets of the symmetrized graph, sorted ascending.
    pub fn undirected_neighbors(&self) -> Vec<Vec<usize>> {
        let mut nb: Vec<Vec<usize>> = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            nb[u].push(v);
            nb[v].push(u);
        }
        for list in &mut nb {
            list.sort_unstable();
            list.dedup();
        }
        nb
    }

    pub fn density(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.edges.len() as f64 / (self.n * (self.n - 1)) as f64
        }
    }
}

/// Parses the edge-list format: one `u v` pair per line, `#` comment lines,
/// and an optional first content line `n=<count>` fixing the node count.
pub fn parse_edge_list(text: &str) -> Result<Graph, GraphError> {
    let mut header_n = None;
    let mut edges = Vec::new();
    let mut max_id: Option<usize> = None;
    let mut first_content = true;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if first_content {
            first_content = false;
            if let Some(rest) = line.strip_prefix("n=") {
                let n = rest.trim().parse::<usize>().map_err(|e| GraphError::Parse {
                    line: line_no,
                    message: format!("bad node count header: {e}"),
                })?;
                header_n = Some(n);
                continue;
            }
        }
        let mut parts = line.split_whitespace();
        let mut next_id = |what: &str| -> Result<usize, GraphError> {
            let tok = parts.next().ok_or_else(|| GraphError::Parse {
                line: line_no,
                message: format!("missing {what} node"),
            })?;
            tok.parse::<usize>().map_err(|_| GraphError::Parse {
                line: line_no,
                message: format!("invalid {what} node id {tok:?}"),
            })
        };
        let u = next_id("source")?;
        let v = next_id("target")?;
        if let Some(extra) = parts.next() {
            return Err(GraphError::Parse {
                line: line_no,
                message: format!("unexpected trailing token {extra:?}"),
            });
        }
        if u == v {
            return Err(GraphError::SelfLoop {
                line: line_no,
                node: u,
            });
        }
        max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
        edges.push((u, v));
    }
    let inferred = max_id.map_or(0, |m| m + 1);
    let n = match header_n {
        Some(h) if h < inferred => {
            return Err(GraphError::NodeOutOfRange {
                u: inferred - 1,
                v: inferred - 1,
                n: h,
            })
        }
        Some(h) => h,
        None => inferred,
    };
    Graph::new(n, edges)
}

pub fn write_edge_list(g: &Graph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "n={}", g.node_count());
    for &(u, v) in g.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}

/// 2×2 initiator of a stochastic Kronecker graph.
pub type Initiator = [[f64; 2]; 2];

pub const DEFAULT_INITIATOR: Initiator = [[0.9, 0.5], [0.5, 0.3]];

fn check_initiator(init: &Initiator) -> Result<(), GraphError> {
    for &p in init.iter().flatten() {
        if !(0.0..=1.0).contains(&p) || p.is_nan() {
            return Err(GraphError::InvalidInitiator(p));
        }
    }
    Ok(())
}

/// Probability of arc `(u, v)` in the Kronecker power of `init`.
pub fn kronecker_edge_probability(init: &Initiator, iterations: u32, u: usize, v: usize) -> f64 {
    (0..iterations)
        .map(|k| init[(u >> k) & 1][(v >> k) & 1])
        .product()
}

/// Stochastic Kronecker graph on `2^iterations` nodes; every ordered pair of
/// distinct nodes is an arc independently with its Kronecker probability.
pub fn kronecker_graph<R: Rng + ?Sized>(
    initiator: &Initiator,
    iterations: u32,
    rng: &mut R,
) -> Result<Graph, GraphError> {
    check_initiator(initiator)?;
    if !(1..=30).contains(&iterations) {
        return Err(GraphError::InvalidIterations(iterations));
    }
    let n = 1usize << iterations;
    let mut edges = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u == v {
                continue;
            }
            let p = kronecker_edge_probability(initiator, iterations, u, v);
            if p >= 1.0 || (p > 0.0 && rng.gen::<f64>() < p) {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, edges)
}

/// Expected arc density of the Kronecker model, using
/// `Σ_{u,v} ∏ P = (ΣP)^k` minus the diagonal term `(P00 + P11)^k`.
pub fn kronecker_expected_density(initiator: &Initiator, iterations: u32) -> f64 {
    let n = (1u64 << iterations) as f64;
    let total: f64 = initiator.iter().flatten().sum();
    let diag = initiator[0][0] + initiator[1][1];
    (total.powi(iterations as i32) - diag.powi(iterations as i32)) / (n * (n - 1.0))
}

/// Scales `base` by the scalar that makes the expected arc density equal
/// `target`, found by bisection.
pub fn initiator_for_density(
    base: &Initiator,
    iterations: u32,
    target: f64,
) -> Result<Initiator, GraphError> {
    check_initiator(base)?;
    let max_entry = base.iter().flatten().cloned().fold(0.0, f64::max);
    if max_entry == 0.0 || !(0.0..=1.0).contains(&target) {
        return Err(GraphError::UnreachableDensity(target));
    }
    let scaled = |s: f64| -> Initiator {
        let mut m = *base;
        for p in m.iter_mut().flatten() {
            *p *= s;
        }
        m
    };
    let (mut lo, mut hi) = (0.0, 1.0 / max_entry);
    if kronecker_expected_density(&scaled(hi), iterations) < target {
        return Err(GraphError::UnreachableDensity(target));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kronecker_expected_density(&scaled(mid), iterations) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(scaled(0.5 * (lo + hi)))
}

/// Unweighted Laplacian `D − A` of the symmetrized graph.
pub fn unweighted_laplacian(g: &Graph) -> SymMatrix {
    laplacian_operator(g).to_sym()
}

pub fn laplacian_operator(g: &Graph) -> LaplacianOperator {
    LaplacianOperator::from_neighbors(g.undirected_neighbors())
}

/// Target features: `d` rows, column `v` is `x_v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    d: usize,
    n: usize,
    /// Column-major: `data[v*d .. (v+1)*d]` is `x_v`.
    data: Vec<f64>,
}

impl FeatureMatrix {
    /// The tabular case `X = I_n`.
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for v in 0..n {
            data[v * n + v] = 1.0;
        }
        Self { d: n, n, data }
    }

    /// Builds from columns; fails if any column has norm above 1 (beyond
    /// rounding) or the dimension exceeds the node count.
    pub fn from_columns(d: usize, columns: &[Vec<f64>]) -> Result<Self, GraphError> {
        let n = columns.len();
        if d == 0 || d > n {
            return Err(GraphError::InvalidDimension { d, n });
        }
        let mut data = Vec::with_capacity(n * d);
        for (v, col) in columns.iter().enumerate() {
            if col.len() != d {
                return Err(GraphError::InvalidDimension { d: col.len(), n });
            }
            let norm = numerics::norm2(col);
            if norm > 1.0 + 1e-12 {
                return Err(GraphError::FeatureNorm { column: v, norm });
            }
            data.extend_from_slice(col);
        }
        Ok(Self { d, n, data })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn column(&self, v: usize) -> &[f64] {
        &self.data[v * self.d..(v + 1) * self.d]
    }

    pub fn column_norm(&self, v: usize) -> f64 {
        numerics::norm2(self.column(v))
    }

    pub fn row(&self, k: usize) -> Vec<f64> {
        (0..self.n).map(|v| self.data[v * self.d + k]).collect()
    }

    /// `X y` for a 0/1 indicator `y` over nodes.
    pub fn apply_indicator(&self, y: &[bool]) -> Vec<f64> {
        let mut out = vec![0.0; self.d];
        for (v, _) in y.iter().enumerate().filter(|(_, &on)| on) {
            for (o, x) in out.iter_mut().zip(self.column(v)) {
                *o += x;
            }
        }
        out
    }

    /// `X Xᵀ`.
    pub fn gram(&self) -> SymMatrix {
        let mut g = SymMatrix::zeros(self.d);
        for v in 0..self.n {
            let x = self.column(v);
            for i in 0..self.d {
                if x[i] == 0.0 {
                    continue;
                }
                for j in 0..=i {
                    g.add_to(i, j, x[i] * x[j]);
                }
            }
        }
        g
    }
}

/// Laplacian eigenfeatures together with the spectrum they came from.
#[derive(Debug, Clone)]
pub struct SpectralFeatures {
    pub features: FeatureMatrix,
    /// The `d` smallest Laplacian eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Factor every orthonormal eigenvector entry was divided by
    /// (the largest column norm before rescaling).
    pub column_scale: f64,
}

/// Bottom-`d` eigenvectors of the unweighted Laplacian as feature rows,
/// columns rescaled so the largest has unit norm.
pub fn laplacian_features(g: &Graph, d: usize) -> Result<SpectralFeatures, GraphError> {
    let n = g.node_count();
    if d == 0 || d > n {
        return Err(GraphError::InvalidDimension { d, n });
    }
    let eig = numerics::sym_eigen(&unweighted_laplacian(g))?;
    let mut data = vec![0.0; n * d];
    for v in 0..n {
        for k in 0..d {
            data[v * d + k] = eig.vectors[v * n + k];
        }
    }
    let max_norm = (0..n)
        .map(|v| numerics::norm2(&data[v * d..(v + 1) * d]))
        .fold(0.0, f64::max);
    let scale = if max_norm > 0.0 { max_norm } else { 1.0 };
    for x in &mut data {
        *x /= scale;
    }
    Ok(SpectralFeatures {
        features: FeatureMatrix { d, n, data },
        eigenvalues: eig.values[..d].to_vec(),
        column_scale: scale,
    })
}

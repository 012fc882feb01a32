use std::fmt::Write as _;

use super::DiffusionError;

/// Dense n×n table of pairwise probabilities in `[0, 1]`; row `u` holds the
/// values from source `u`.
///
/// Tables estimated from simulation carry a per-source observation count;
/// rows of unobserved sources are zero except for the unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachabilityTable {
    n: usize,
    data: Vec<f64>,
    observations: Option<Vec<u64>>,
}

fn table_err(msg: impl Into<String>) -> DiffusionError {
    DiffusionError::Table(msg.into())
}

impl ReachabilityTable {
    pub fn from_flat(n: usize, data: Vec<f64>) -> Result<Self, DiffusionError> {
        if data.len() != n * n {
            return Err(table_err(format!("expected {} entries, got {}", n * n, data.len())));
        }
        if let Some(x) = data.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(table_err(format!("entry {x} outside [0, 1]")));
        }
        Ok(Self {
            n,
            data,
            observations: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, DiffusionError> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(table_err("table must be square"));
        }
        Self::from_flat(n, rows.concat())
    }

    pub fn filled(n: usize, value: f64) -> Result<Self, DiffusionError> {
        Self::from_flat(n, vec![value; n * n])
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for u in 0..n {
            data[u * n + u] = 1.0;
        }
        Self {
            n,
            data,
            observations: None,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.data[u * self.n + v]
    }

    pub fn row(&self, u: usize) -> &[f64] {
        &self.data[u * self.n..(u + 1) * self.n]
    }

    /// Overwrites row `u`, projecting every value onto `[0, 1]`.
    pub fn set_row_clamped(&mut self, u: usize, values: impl IntoIterator<Item = f64>) {
        let n = self.n;
        for (dst, x) in self.data[u * n..(u + 1) * n].iter_mut().zip(values) {
            *dst = x.clamp(0.0, 1.0);
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn set_observations(&mut self, counts: Vec<u64>) {
        self.observations = Some(counts);
    }

    /// Per-source observation counts, present on estimated tables.
    pub fn observations(&self) -> Option<&[u64]> {
        self.observations.as_deref()
    }

    /// False only for estimated tables whose source `u` was never drawn.
    pub fn is_observed(&self, u: usize) -> bool {
        self.observations.as_ref().is_none_or(|c| c[u] > 0)
    }

    pub fn has_unit_diagonal(&self) -> bool {
        (0..self.n).all(|u| self.get(u, u) == 1.0)
    }

    /// Dense CSV, one row per source, no header. Values use the shortest
    /// representation that parses back to the same float.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for u in 0..self.n {
            for (i, x) in self.row(u).iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{x}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, DiffusionError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| DiffusionError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            let row = rec
                .iter()
                .map(|f| f.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| DiffusionError::Parse {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            rows.push(row);
        }
        Self::from_rows(&rows)
    }
}

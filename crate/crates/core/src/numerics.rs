//! Small dense linear-algebra kernels.
//!
//! Everything here is sized for desk-scale problems (n up to a few thousand,
//! feature dimension up to a few hundred). The only sparse path is the
//! Laplacian-structured operator used by the regularized bandit.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NumericsError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("Jacobi eigensolver did not converge after {0} sweeps")]
    NoConvergence(usize),
    #[error("non-finite entry in input")]
    NonFinite,
}

/// Symmetric matrix stored as its packed lower triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    lower: Vec<f64>,
}

#[inline]
fn packed_index(i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    r * (r + 1) / 2 + c
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            lower: vec![0.0; n * (n + 1) / 2],
        }
    }

    pub fn scaled_identity(n: usize, value: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, value);
        }
        m
    }

    /// Builds from a dense row-major square matrix, reading only the lower triangle.
    pub fn from_dense_lower(n: usize, dense: &[f64]) -> Result<Self, NumericsError> {
        if dense.len() != n * n {
            return Err(NumericsError::DimensionMismatch {
                expected: n * n,
                got: dense.len(),
            });
        }
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                m.set(i, j, dense[i * n + j]);
            }
        }
        Ok(m)
    }

    /// Rebuilds from the packed lower triangle (row-major, `n(n+1)/2` values).
    pub fn from_packed(n: usize, lower: Vec<f64>) -> Result<Self, NumericsError> {
        if lower.len() != n * (n + 1) / 2 {
            return Err(NumericsError::DimensionMismatch {
                expected: n * (n + 1) / 2,
                got: lower.len(),
            });
        }
        Ok(Self { n, lower })
    }

    pub fn packed(&self) -> &[f64] {
        &self.lower
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == 0.0))
    }

    pub fn order(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.lower[packed_index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.lower[packed_index(i, j)] = value;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, value: f64) {
        self.lower[packed_index(i, j)] += value;
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &SymMatrix, scale: f64) -> Result<(), NumericsError> {
        if other.n != self.n {
            return Err(NumericsError::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        for (a, b) in self.lower.iter_mut().zip(&other.lower) {
            *a += scale * b;
        }
        Ok(())
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = self.get(i, j);
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                let v = self.get(i, j);
                s += v * v;
            }
        }
        s.sqrt()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = 0.0;
            for (j, xj) in x.iter().enumerate().take(n) {
                acc += self.get(i, j) * xj;
            }
            y[i] = acc;
        }
        y
    }
}

/// Eigendecomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Row-major n×n; column k is the unit eigenvector for `values[k]`.
    pub vectors: Vec<f64>,
    pub sweeps: usize,
}

impl SymEigen {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        let n = self.values.len();
        (0..n).map(|i| self.vectors[i * n + k]).collect()
    }
}

pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigendecomposition.
///
/// Eigenpairs are stably sorted by eigenvalue; each eigenvector is signed so
/// that its first entry with magnitude above 1e-12 is positive.
pub fn sym_eigen(a: &SymMatrix) -> Result<SymEigen, NumericsError> {
    let n = a.order();
    if a.lower.iter().any(|v| !v.is_finite()) {
        return Err(NumericsError::NonFinite);
    }
    let mut m = a.to_dense();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut sweeps = 0;
    loop {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i * n + j] * m[i * n + j];
            }
        }
        if off.sqrt() <= 1e-12 * scale || n < 2 {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(NumericsError::NoConvergence(JACOBI_MAX_SWEEPS));
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[x * n + x].total_cmp(&m[y * n + y]));
    let values: Vec<f64> = order.iter().map(|&k| m[k * n + k]).collect();
    let mut vectors = vec![0.0; n * n];
    for (dst, &src) in order.iter().enumerate() {
        let sign = (0..n)
            .map(|i| v[i * n + src])
            .find(|x| x.abs() > 1e-12)
            .map_or(1.0, f64::signum);
        for i in 0..n {
            vectors[i * n + dst] = sign * v[i * n + src];
        }
    }
    Ok(SymEigen {
        values,
        vectors,
        sweeps,
    })
}

/// Lower Cholesky factor of an SPD matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn factor(a: &SymMatrix) -> Result<Self, NumericsError> {
        let n = a.order();
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut diag = a.get(j, j);
            for k in 0..j {
                diag -= l[j * n + k] * l[j * n + k];
            }
            if diag <= 0.0 || !diag.is_finite() {
                return Err(NumericsError::NotPositiveDefinite {
                    pivot: j,
                    value: diag,
                });
            }
            let ljj = diag.sqrt();
            l[j * n + j] = ljj;
            for i in (j + 1)..n {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / ljj;
            }
        }
        Ok(Self { n, l })
    }

    /// Solves `L z = b` in place.
    pub fn forward(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[i * n + k] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }

    /// Solves `Lᵀ x = z` in place.
    pub fn backward(&self, b: &mut [f64]) {
        let n = self.n;
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n {
                s -= self.l[k * n + i] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, NumericsError> {
        if b.len() != self.n {
            return Err(NumericsError::DimensionMismatch {
                expected: self.n,
                got: b.len(),
            });
        }
        let mut x = b.to_vec();
        self.forward(&mut x);
        self.backward(&mut x);
        Ok(x)
    }

    /// `xᵀ A⁻¹ x`, computed as `‖L⁻¹x‖²`.
    pub fn inverse_quadratic_form(&self, x: &[f64], scratch: &mut Vec<f64>) -> f64 {
        scratch.clear();
        scratch.extend_from_slice(x);
        self.forward(scratch);
        scratch.iter().map(|z| z * z).sum()
    }
}

pub fn spd_solve(a: &SymMatrix, b: &[f64]) -> Result<Vec<f64>, NumericsError> {
    Cholesky::factor(a)?.solve(b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub relative_residual: f64,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Conjugate gradient for `A x = b` with `A` given as a matvec closure
/// `apply(input, output)`.
///
/// Stops once `‖A x − b‖ ≤ tol·‖b‖`; non-convergence is reported in the
/// outcome rather than as an error.
pub fn conjugate_gradient<F>(
    apply: F,
    b: &[f64],
    x0: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<CgOutcome, NumericsError>
where
    F: FnMut(&[f64], &mut [f64]),
{
    preconditioned_conjugate_gradient(apply, None, b, x0, tol, max_iters)
}

/// Conjugate gradient with an optional Jacobi preconditioner given as the
/// reciprocal of `A`'s diagonal. The stopping rule is the same as for
/// [`conjugate_gradient`] (unpreconditioned residual).
pub fn preconditioned_conjugate_gradient<F>(
    mut apply: F,
    inv_diag: Option<&[f64]>,
    b: &[f64],
    x0: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<CgOutcome, NumericsError>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n = b.len();
    for len in [x0.len(), inv_diag.map_or(n, <[f64]>::len)] {
        if len != n {
            return Err(NumericsError::DimensionMismatch {
                expected: n,
                got: len,
            });
        }
    }
    let precondition = |r: &[f64], z: &mut Vec<f64>| {
        z.clear();
        match inv_diag {
            Some(m) => z.extend(r.iter().zip(m).map(|(ri, mi)| ri * mi)),
            None => z.extend_from_slice(r),
        }
    };
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            x: vec![0.0; n],
            iterations: 0,
            converged: true,
            relative_residual: 0.0,
        });
    }
    let mut x = x0.to_vec();
    let mut ap = vec![0.0; n];
    apply(&x, &mut ap);
    let mut r: Vec<f64> = b.iter().zip(&ap).map(|(bi, ai)| bi - ai).collect();
    let threshold = tol * b_norm;
    if norm2(&r) <= threshold {
        return Ok(CgOutcome {
            relative_residual: norm2(&r) / b_norm,
            x,
            iterations: 0,
            converged: true,
        });
    }
    let mut z = Vec::with_capacity(n);
    precondition(&r, &mut z);
    let mut rz = dot(&r, &z);
    let mut p = z.clone();
    let mut iterations = 0;
    while iterations < max_iters {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        iterations += 1;
        if norm2(&r) <= threshold {
            break;
        }
        precondition(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    // Recompute the true residual; the recursive one drifts.
    apply(&x, &mut ap);
    let res = b
        .iter()
        .zip(&ap)
        .map(|(bi, ai)| (bi - ai) * (bi - ai))
        .sum::<f64>()
        .sqrt();
    Ok(CgOutcome {
        x,
        iterations,
        converged: res <= threshold * (1.0 + 1e-6),
        relative_residual: res / b_norm,
    })
}

/// Sparse unweighted Laplacian `D − A` of an undirected graph, as neighbor lists.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplacianOperator {
    neighbors: Vec<Vec<usize>>,
}

impl LaplacianOperator {
    /// `neighbors[u]` must be symmetric (v ∈ N(u) ⇔ u ∈ N(v)) and free of duplicates.
    pub fn from_neighbors(neighbors: Vec<Vec<usize>>) -> Self {
        Self { neighbors }
    }

    pub fn order(&self) -> usize {
        self.neighbors.len()
    }

    pub fn degree(&self, u: usize) -> usize {
        self.neighbors[u].len()
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.neighbors[u]
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn to_sym(&self) -> SymMatrix {
        let n = self.order();
        let mut l = SymMatrix::zeros(n);
        for u in 0..n {
            l.set(u, u, self.degree(u) as f64);
            for &v in &self.neighbors[u] {
                if v < u {
                    l.set(u, v, -1.0);
                }
            }
        }
        l
    }
}

/// `[(diag(beta) + λ₂ L) ⊗ I_d] v` for `v` stacked as n blocks of length d.
///
/// Evaluated as `V (diag(beta) + λ₂ Lᵀ)` on the d×n unstacking, which costs
/// O(d(n + m)).
pub fn kron_block_apply(
    beta_diag: &[f64],
    laplacian: &LaplacianOperator,
    lambda2: f64,
    v: &[f64],
) -> Result<Vec<f64>, NumericsError> {
    let mut out = vec![0.0; v.len()];
    kron_block_apply_into(beta_diag, laplacian, lambda2, v, &mut out)?;
    Ok(out)
}

pub fn kron_block_apply_into(
    beta_diag: &[f64],
    laplacian: &LaplacianOperator,
    lambda2: f64,
    v: &[f64],
    out: &mut [f64],
) -> Result<(), NumericsError> {
    let n = beta_diag.len();
    if laplacian.order() != n {
        return Err(NumericsError::DimensionMismatch {
            expected: n,
            got: laplacian.order(),
        });
    }
    if n == 0 {
        return Ok(());
    }
    if v.len() % n != 0 || out.len() != v.len() {
        return Err(NumericsError::DimensionMismatch {
            expected: n,
            got: v.len(),
        });
    }
    let d = v.len() / n;
    for u in 0..n {
        let diag = beta_diag[u] + lambda2 * laplacian.degree(u) as f64;
        let col = &v[u * d..(u + 1) * d];
        let dst = &mut out[u * d..(u + 1) * d];
        for k in 0..d {
            dst[k] = diag * col[k];
        }
        if lambda2 != 0.0 {
            for &w in laplacian.neighbors(u) {
                let other = &v[w * d..(w + 1) * d];
                for k in 0..d {
                    dst[k] -= lambda2 * other[k];
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> SymMatrix {
        SymMatrix::from_dense_lower(3, &[1., -1., 0., -1., 2., -1., 0., -1., 1.]).unwrap()
    }

    #[test]
    fn identity_eigenvalues() {
        let e = sym_eigen(&SymMatrix::scaled_identity(3, 1.0)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn two_by_two_eigenvalues() {
        let a = SymMatrix::from_dense_lower(2, &[2., 1., 1., 2.]).unwrap();
        let e = sym_eigen(&a).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-12);
        assert!((e.values[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn path3_spectrum_and_residual() {
        let a = path3();
        let e = sym_eigen(&a).unwrap();
        for (got, want) in e.values.iter().zip([0.0, 1.0, 3.0]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        let n = 3;
        let dense = a.to_dense();
        let mut res = 0.0;
        for k in 0..n {
            let vk = e.vector(k);
            for i in 0..n {
                let av: f64 = (0..n).map(|j| dense[i * n + j] * vk[j]).sum();
                res += (av - e.values[k] * vk[i]).powi(2);
            }
        }
        assert!(res.sqrt() <= 1e-8 * a.frobenius_norm());
        // first nonzero entry positive
        for k in 0..n {
            let first = e.vector(k).into_iter().find(|x| x.abs() > 1e-12).unwrap();
            assert!(first > 0.0);
        }
    }

    #[test]
    fn spd_solve_examples() {
        let x = spd_solve(&SymMatrix::scaled_identity(2, 2.0), &[2.0, 4.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
        let a = SymMatrix::from_dense_lower(2, &[4., 1., 1., 3.]).unwrap();
        let x = spd_solve(&a, &[1.0, 2.0]).unwrap();
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-15);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-15);
        let x = spd_solve(&a, &[0.0, 0.0]).unwrap();
        assert_eq!(x, vec![0.0, 0.0]);
    }

    #[test]
    fn spd_solve_rejects_indefinite() {
        let a = SymMatrix::from_dense_lower(2, &[1., 2., 2., 1.]).unwrap();
        assert!(matches!(
            spd_solve(&a, &[1.0, 1.0]),
            Err(NumericsError::NotPositiveDefinite { pivot: 1, .. })
        ));
    }

    #[test]
    fn cg_scaled_identity_one_iteration() {
        let out = conjugate_gradient(
            |x, y| {
                for i in 0..x.len() {
                    y[i] = 2.0 * x[i];
                }
            },
            &[2.0, 4.0],
            &[0.0, 0.0],
            1e-12,
            10,
        )
        .unwrap();
        assert_eq!(out.iterations, 1);
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-15 && (out.x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn cg_warm_start_at_solution_takes_zero_iterations() {
        let a = SymMatrix::from_dense_lower(2, &[4., 1., 1., 3.]).unwrap();
        let x = spd_solve(&a, &[1.0, 2.0]).unwrap();
        let out = conjugate_gradient(
            |v, y| y.copy_from_slice(&a.mul_vec(v)),
            &[1.0, 2.0],
            &x,
            1e-10,
            10,
        )
        .unwrap();
        assert_eq!(out.iterations, 0);
        assert!(out.converged);
    }

    #[test]
    fn jacobi_preconditioning_matches_plain_cg() {
        let a = SymMatrix::from_dense_lower(3, &[10., 0., 0., 1., 2., 0., 0., 0.5, 0.3]).unwrap();
        let b = [1.0, -2.0, 0.5];
        let apply = |x: &[f64], y: &mut [f64]| y.copy_from_slice(&a.mul_vec(x));
        let plain = conjugate_gradient(apply, &b, &[0.0; 3], 1e-12, 50).unwrap();
        let inv: Vec<f64> = (0..3).map(|i| 1.0 / a.get(i, i)).collect();
        let pre = preconditioned_conjugate_gradient(apply, Some(&inv), &b, &[0.0; 3], 1e-12, 50).unwrap();
        assert!(plain.converged && pre.converged);
        for (x, y) in plain.x.iter().zip(&pre.x) {
            assert!((x - y).abs() < 1e-10);
        }
        assert!(preconditioned_conjugate_gradient(apply, Some(&inv[..2]), &b, &[0.0; 3], 1e-12, 5).is_err());
    }

    #[test]
    fn kron_apply_edge_cases() {
        let lap = LaplacianOperator::from_neighbors(vec![vec![1], vec![0, 2], vec![1]]);
        let v = vec![1.0, -2.0, 3.0, 0.5, -1.0, 4.0];
        let out = kron_block_apply(&[2.0, 3.0, 4.0], &lap, 0.0, &v).unwrap();
        assert_eq!(out, vec![2.0, -4.0, 9.0, 1.5, -4.0, 16.0]);
        let constant = vec![1.5, -0.5, 1.5, -0.5, 1.5, -0.5];
        let out = kron_block_apply(&[0.0; 3], &lap, 1.0, &constant).unwrap();
        assert!(out.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn kron_apply_dimension_mismatch() {
        let lap = LaplacianOperator::from_neighbors(vec![vec![], vec![]]);
        assert!(kron_block_apply(&[1.0, 1.0], &lap, 1.0, &[1.0, 2.0, 3.0]).is_err());
        assert!(kron_block_apply(&[1.0], &lap, 1.0, &[1.0]).is_err());
    }
}

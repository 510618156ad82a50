//! Sparse symmetric positive definite linear algebra.
//!
//! Matrices are assembled from triplets into compressed sparse row form.
//! Systems are solved by a sparse LDL^T factorization (Cholesky without
//! square roots) with reverse Cuthill-McKee ordering, or by Jacobi
//! preconditioned conjugate gradients behind a flag. Every solve is checked
//! against the residual contract `||Ax - b|| <= tol ||b||`.

use sprs::{CsMatI, FillInReduction, SymmetryCheck};
use sprs_ldl::{Ldl, LdlNumeric};
use thiserror::Error;

/// Backward-error bound every solve must satisfy:
/// `||Ax - b|| <= SOLVE_TOL (||b|| + ||A|| ||x||)`. The second term makes the
/// contract attainable in f64 when the solution norm dwarfs the data norm
/// (adjoint solves with nearly tracked data), where no representable vector
/// can push the plain relative residual below `eps ||A|| ||x|| / ||b||`.
pub const SOLVE_TOL: f64 = 1e-12;

const CG_MAX_ITER_FACTOR: usize = 40;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("triplet index ({row}, {col}) out of range for dimension {n}")]
    IndexOutOfRange { row: usize, col: usize, n: usize },
    #[error("matrix is not symmetric (defect {defect:.3e})")]
    NotSymmetric { defect: f64 },
    #[error("matrix is not positive definite")]
    NotSpd,
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("solver did not reach relative residual {tol:.1e} (got {achieved:.3e})")]
    ResidualContract { tol: f64, achieved: f64 },
    #[error("conjugate gradients did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("dimension mismatch: matrix is {n}, vector is {len}")]
    DimensionMismatch { n: usize, len: usize },
}

/// Symmetric sparse matrix in compressed sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds an `n x n` matrix from `(row, col, value)` triplets.
    ///
    /// Duplicate entries are summed; entries that cancel exactly to zero are
    /// dropped. Column indices end up sorted within each row.
    pub fn from_triplets(n: usize, entries: &[(usize, usize, f64)]) -> Result<Self, LinalgError> {
        for &(row, col, _) in entries {
            if row >= n || col >= n {
                return Err(LinalgError::IndexOutOfRange { row, col, n });
            }
        }
        let mut sorted: Vec<&(usize, usize, f64)> = entries.iter().collect();
        sorted.sort_by_key(|&&(r, c, _)| (r, c));

        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut iter = sorted.into_iter().peekable();
        while let Some(&(r, c, v)) = iter.next() {
            let mut sum = v;
            while let Some(&&(r2, c2, v2)) = iter.peek() {
                if r2 == r && c2 == c {
                    sum += v2;
                    iter.next();
                } else {
                    break;
                }
            }
            if sum != 0.0 {
                col_idx.push(c);
                values.push(sum);
                row_ptr[r + 1] += 1;
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            n,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let lo = self.row_ptr[row];
        let hi = self.row_ptr[row + 1];
        match self.col_idx[lo..hi].binary_search(&col) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for row in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[row]..self.row_ptr[row + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[row] = acc;
        }
        y
    }

    /// `b - A x` with compensated products and Neumaier summation, accurate
    /// to well below the cancellation floor of the naive evaluation. Needed
    /// so iterative refinement can certify the solve contract near the
    /// attainable precision.
    pub fn residual_compensated(&self, x: &[f64], b: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        assert_eq!(b.len(), self.n);
        let mut r = vec![0.0; self.n];
        for row in 0..self.n {
            let mut sum = b[row];
            let mut comp = 0.0;
            for k in self.row_ptr[row]..self.row_ptr[row + 1] {
                let p = -self.values[k] * x[self.col_idx[k]];
                let p_err = (-self.values[k]).mul_add(x[self.col_idx[k]], -p);
                let t = sum + p;
                comp += if sum.abs() >= p.abs() {
                    (sum - t) + p
                } else {
                    (p - t) + sum
                };
                comp += p_err;
                sum = t;
            }
            r[row] = sum + comp;
        }
        r
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Largest asymmetry `|a_ij - a_ji|` relative to the largest entry.
    pub fn symmetry_defect(&self) -> f64 {
        let scale = self
            .values
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let mut defect = 0.0f64;
        for row in 0..self.n {
            for k in self.row_ptr[row]..self.row_ptr[row + 1] {
                let col = self.col_idx[k];
                defect = defect.max((self.values[k] - self.get(col, row)).abs());
            }
        }
        defect / scale
    }

    /// Infinity norm (maximum absolute row sum).
    pub fn norm_inf_operator(&self) -> f64 {
        (0..self.n)
            .map(|row| {
                self.values[self.row_ptr[row]..self.row_ptr[row + 1]]
                    .iter()
                    .map(|v| v.abs())
                    .sum::<f64>()
            })
            .fold(0.0f64, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n]; self.n];
        for row in 0..self.n {
            for k in self.row_ptr[row]..self.row_ptr[row + 1] {
                dense[row][self.col_idx[k]] = self.values[k];
            }
        }
        dense
    }

    fn to_sprs_csc(&self) -> CsMatI<f64, usize> {
        // the matrix is symmetric, so its CSR arrays are a valid CSC layout
        CsMatI::new_csc(
            (self.n, self.n),
            self.row_ptr.clone(),
            self.col_idx.clone(),
            self.values.clone(),
        )
    }
}

/// Which SPD solve backend to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverKind {
    /// Sparse LDL^T with reverse Cuthill-McKee ordering (default).
    #[default]
    Cholesky,
    /// Jacobi preconditioned conjugate gradients.
    ConjugateGradient,
}

enum Backend {
    /// Direct division; the LDL backend cannot hold systems of size <= 1.
    Tiny {
        inv: Vec<f64>,
    },
    Factored(LdlNumeric<f64, usize>),
    Iterative {
        inv_diag: Vec<f64>,
    },
}

/// An SPD system solver with a cached factorization, reusable across
/// right-hand sides.
pub struct SpdSolver {
    matrix: SparseMatrix,
    matrix_norm: f64,
    backend: Backend,
}

impl SpdSolver {
    pub fn new(matrix: &SparseMatrix, kind: SolverKind) -> Result<Self, LinalgError> {
        let defect = matrix.symmetry_defect();
        if defect > 1e-12 {
            return Err(LinalgError::NotSymmetric { defect });
        }
        let backend = match kind {
            _ if matrix.n() <= 1 => {
                let diag = matrix.diag();
                if diag.iter().any(|&d| d <= 0.0) {
                    return Err(LinalgError::NotSpd);
                }
                Backend::Tiny {
                    inv: diag.iter().map(|d| 1.0 / d).collect(),
                }
            }
            SolverKind::Cholesky => {
                let csc = matrix.to_sprs_csc();
                let factor = Ldl::new()
                    .check_symmetry(SymmetryCheck::DontCheckSymmetry)
                    .fill_in_reduction(FillInReduction::ReverseCuthillMcKee)
                    .numeric(csc.view())
                    .map_err(|e| LinalgError::Factorization(e.to_string()))?;
                if factor.d().iter().any(|&d| d <= 0.0) {
                    return Err(LinalgError::NotSpd);
                }
                Backend::Factored(factor)
            }
            SolverKind::ConjugateGradient => {
                let diag = matrix.diag();
                if diag.iter().any(|&d| d <= 0.0) {
                    return Err(LinalgError::NotSpd);
                }
                Backend::Iterative {
                    inv_diag: diag.iter().map(|d| 1.0 / d).collect(),
                }
            }
        };
        Ok(Self {
            matrix: matrix.clone(),
            matrix_norm: matrix.norm_inf_operator(),
            backend,
        })
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    /// Solves `A x = b` to the [`SOLVE_TOL`] relative residual contract.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if b.len() != self.matrix.n() {
            return Err(LinalgError::DimensionMismatch {
                n: self.matrix.n(),
                len: b.len(),
            });
        }
        let b_norm = norm(b);
        if b_norm == 0.0 {
            return Ok(vec![0.0; b.len()]);
        }
        let x = match &self.backend {
            Backend::Tiny { inv } => b.iter().zip(inv).map(|(bi, vi)| bi * vi).collect(),
            Backend::Factored(factor) => {
                let mut x = factor.solve(b);
                // iterative refinement tightens the residual to the contract
                for _ in 0..4 {
                    let r = self.matrix.residual_compensated(&x, b);
                    let scale = b_norm + self.matrix_norm * norm(&x);
                    if norm(&r) <= 0.25 * SOLVE_TOL * scale {
                        break;
                    }
                    let dx = factor.solve(&r);
                    for (xi, di) in x.iter_mut().zip(&dx) {
                        *xi += di;
                    }
                }
                x
            }
            Backend::Iterative { inv_diag } => self.pcg(b, inv_diag)?,
        };
        let scale = b_norm + self.matrix_norm * norm(&x);
        let achieved = norm(&self.matrix.residual_compensated(&x, b)) / scale;
        if achieved > SOLVE_TOL {
            return Err(LinalgError::ResidualContract {
                tol: SOLVE_TOL,
                achieved,
            });
        }
        Ok(x)
    }

    fn pcg(&self, b: &[f64], inv_diag: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let n = b.len();
        let max_iter = CG_MAX_ITER_FACTOR * n.max(50);
        let b_norm = norm(b);
        let mut x = vec![0.0; n];
        let mut r = b.to_vec();
        let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(ri, di)| ri * di).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        for _ in 0..max_iter {
            let ap = self.matrix.matvec(&p);
            let pap = dot(&p, &ap);
            if pap <= 0.0 {
                return Err(LinalgError::NotSpd);
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            if norm(&r) <= 0.1 * SOLVE_TOL * (b_norm + self.matrix_norm * norm(&x)) {
                return Ok(x);
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(LinalgError::NoConvergence(max_iter))
    }
}

/// One-shot SPD solve with the default (Cholesky) backend.
pub fn solve_spd(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    SpdSolver::new(a, SolverKind::Cholesky)?.solve(b)
}

/// Solves a small dense SPD system in place via Cholesky.
pub fn dense_solve_spd(a: &mut Vec<Vec<f64>>, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let n = b.len();
    assert_eq!(a.len(), n);
    // lower Cholesky factor overwrites the lower triangle
    for j in 0..n {
        for k in 0..j {
            let ljk = a[j][k];
            for i in j..n {
                a[i][j] -= a[i][k] * ljk;
            }
        }
        let d = a[j][j];
        if d <= 0.0 || !d.is_finite() {
            return Err(LinalgError::NotSpd);
        }
        let inv = 1.0 / d.sqrt();
        for i in j..n {
            a[i][j] *= inv;
        }
    }
    let mut x = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            x[i] -= a[i][k] * x[k];
        }
        x[i] /= a[i][i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            x[i] -= a[k][i] * x[k];
        }
        x[i] /= a[i][i];
    }
    Ok(x)
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Dense Gaussian elimination with partial pivoting; the independent
    /// oracle for the sparse solve path.
    fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
                .unwrap();
            a.swap(col, pivot);
            b.swap(col, pivot);
            for row in col + 1..n {
                let f = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for row in (0..n).rev() {
            let mut acc = b[row];
            for k in row + 1..n {
                acc -= a[row][k] * x[k];
            }
            x[row] = acc / a[row][row];
        }
        x
    }

    /// Deterministic pseudo-random stream for test matrices.
    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (*seed >> 11) as f64 / (1u64 << 53) as f64
    }

    fn random_spd(n: usize, seed: u64) -> (SparseMatrix, Vec<Vec<f64>>) {
        let mut s = seed;
        let mut g = vec![vec![0.0; n]; n];
        for row in g.iter_mut() {
            for v in row.iter_mut() {
                *v = 2.0 * lcg(&mut s) - 1.0;
            }
        }
        // A = G^T G + I is SPD
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = if i == j { 1.0 } else { 0.0 };
                for k in 0..n {
                    acc += g[k][i] * g[k][j];
                }
                dense[i][j] = acc;
            }
        }
        let mut trips = Vec::new();
        for i in 0..n {
            for j in 0..n {
                trips.push((i, j, dense[i][j]));
            }
        }
        (SparseMatrix::from_triplets(n, &trips).unwrap(), dense)
    }

    #[test]
    fn duplicate_triplets_are_summed() {
        let a = SparseMatrix::from_triplets(1, &[(0, 0, 1.0), (0, 0, 1.0)]).unwrap();
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.get(0, 0), 2.0);
    }

    #[test]
    fn empty_triplets_give_zero_matrix() {
        let a = SparseMatrix::from_triplets(3, &[]).unwrap();
        assert_eq!(a.nnz(), 0);
        assert_eq!(a.matvec(&[1.0, 2.0, 3.0]), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn out_of_range_triplet_is_rejected() {
        assert!(matches!(
            SparseMatrix::from_triplets(2, &[(0, 2, 1.0)]),
            Err(LinalgError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn random_triplets_match_dense_accumulation() {
        let n = 7;
        let mut s = 42u64;
        let mut trips = Vec::new();
        let mut dense = vec![vec![0.0; n]; n];
        for _ in 0..60 {
            let i = (lcg(&mut s) * n as f64) as usize % n;
            let j = (lcg(&mut s) * n as f64) as usize % n;
            let v = lcg(&mut s) - 0.5;
            trips.push((i, j, v));
            dense[i][j] += v;
        }
        let a = SparseMatrix::from_triplets(n, &trips).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert_relative_eq!(a.get(i, j), dense[i][j], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let a = SparseMatrix::from_triplets(3, &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)]).unwrap();
        let b = vec![3.0, -1.0, 0.5];
        assert_eq!(solve_spd(&a, &b).unwrap(), b);
    }

    #[test]
    fn diagonal_solve() {
        let a = SparseMatrix::from_triplets(3, &[(0, 0, 1.0), (1, 1, 2.0), (2, 2, 4.0)]).unwrap();
        let x = solve_spd(&a, &[1.0, 2.0, 4.0]).unwrap();
        for xi in x {
            assert_relative_eq!(xi, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn sparse_solve_matches_dense_oracle() {
        let (a, dense) = random_spd(50, 7);
        let b: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin()).collect();
        let expected = gauss_solve(dense, b.clone());
        for kind in [SolverKind::Cholesky, SolverKind::ConjugateGradient] {
            let solver = SpdSolver::new(&a, kind).unwrap();
            let x = solver.solve(&b).unwrap();
            for (xi, ei) in x.iter().zip(&expected) {
                assert_relative_eq!(xi, ei, epsilon = 1e-9, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn residual_contract_holds() {
        let (a, _) = random_spd(40, 3);
        let b = vec![1.0; 40];
        let x = solve_spd(&a, &b).unwrap();
        let ax = a.matvec(&x);
        let r: f64 = norm(
            &b.iter()
                .zip(&ax)
                .map(|(bi, ai)| bi - ai)
                .collect::<Vec<_>>(),
        );
        assert!(r <= SOLVE_TOL * norm(&b));
    }

    #[test]
    fn indefinite_matrix_is_detected() {
        let a = SparseMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 1, -1.0)]).unwrap();
        assert!(matches!(
            SpdSolver::new(&a, SolverKind::Cholesky),
            Err(LinalgError::NotSpd)
        ));
        assert!(matches!(
            SpdSolver::new(&a, SolverKind::ConjugateGradient),
            Err(LinalgError::NotSpd)
        ));
    }

    #[test]
    fn asymmetric_matrix_is_rejected() {
        let a = SparseMatrix::from_triplets(2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 1, 2.0)]).unwrap();
        assert!(matches!(
            SpdSolver::new(&a, SolverKind::Cholesky),
            Err(LinalgError::NotSymmetric { .. })
        ));
    }

    #[test]
    fn solves_are_deterministic() {
        let (a, _) = random_spd(30, 11);
        let b: Vec<f64> = (0..30).map(|i| (i as f64).cos()).collect();
        let x1 = solve_spd(&a, &b).unwrap();
        let x2 = solve_spd(&a, &b).unwrap();
        assert_eq!(x1, x2);
    }

    #[test]
    fn dense_spd_solver_matches_oracle() {
        let (_, dense) = random_spd(12, 5);
        let b: Vec<f64> = (0..12).map(|i| 0.1 * i as f64 - 0.4).collect();
        let expected = gauss_solve(dense.clone(), b.clone());
        let x = dense_solve_spd(&mut dense.clone(), &b).unwrap();
        for (xi, ei) in x.iter().zip(&expected) {
            assert_relative_eq!(xi, ei, epsilon = 1e-10, max_relative = 1e-10);
        }
    }
}

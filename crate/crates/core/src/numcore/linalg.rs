//! Dense linear algebra for small problems: symmetric matrices, Cholesky
//! factorization, and least squares via Householder QR with column pivoting.

use crate::error::{CoreError, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Gram matrix AᵀA.
    pub fn gram(&self) -> SymmetricMatrix {
        let mut g = SymmetricMatrix::zeros(self.cols);
        for j in 0..self.cols {
            for k in j..self.cols {
                let mut s = 0.0;
                for i in 0..self.rows {
                    s += self.get(i, j) * self.get(i, k);
                }
                g.set(j, k, s);
            }
        }
        g
    }

    /// Aᵀ v for a length-`rows` vector.
    pub fn t_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let row = self.row(i);
            let vi = v[i];
            for (o, &x) in out.iter_mut().zip(row) {
                *o += x * vi;
            }
        }
        out
    }

    /// A v for a length-`cols` vector.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Symmetric matrix with full storage; writes keep both triangles equal.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymmetricMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn scaled_identity(dim: usize, s: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, s);
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Sets entries (i, j) and (j, i).
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn scale_in_place(&mut self, factor: f64) {
        for v in &mut self.data {
            *v *= factor;
        }
    }

    pub fn add_diagonal(&mut self, v: f64) {
        for i in 0..self.dim {
            self.data[i * self.dim + i] += v;
        }
    }

    /// Extracts the principal submatrix on `indices`.
    pub fn principal_submatrix(&self, indices: &[usize]) -> SymmetricMatrix {
        let k = indices.len();
        let mut out = SymmetricMatrix::zeros(k);
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate().skip(a) {
                out.set(a, b, self.get(i, j));
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| dot(&self.data[i * self.dim..(i + 1) * self.dim], v))
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Lower-triangular Cholesky factor L with L Lᵀ equal to the input.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    dim: usize,
    lower: Vec<f64>,
}

impl CholeskyFactor {
    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j <= i {
            self.lower[i * self.dim + j]
        } else {
            0.0
        }
    }

    /// ln det(L Lᵀ) = 2 Σ ln L_ii.
    pub fn log_det(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.lower[i * self.dim + i].ln())
            .sum::<f64>()
            * 2.0
    }

    /// Solves L z = b by forward substitution.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.dim);
        let mut z = b.to_vec();
        for i in 0..self.dim {
            let row = &self.lower[i * self.dim..i * self.dim + i];
            let mut s = z[i];
            for (j, &l) in row.iter().enumerate() {
                s -= l * z[j];
            }
            z[i] = s / self.lower[i * self.dim + i];
        }
        z
    }

    /// Solves Lᵀ x = b by back substitution.
    pub fn solve_lower_transpose(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.dim);
        let mut x = b.to_vec();
        for i in (0..self.dim).rev() {
            let mut s = x[i];
            for j in i + 1..self.dim {
                s -= self.lower[j * self.dim + i] * x[j];
            }
            x[i] = s / self.lower[i * self.dim + i];
        }
        x
    }

    /// Solves (L Lᵀ) x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_lower_transpose(&self.solve_lower(b))
    }

    /// L v (used when sampling with a covariance factor).
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| dot(&self.lower[i * self.dim..i * self.dim + i + 1], &v[..i + 1]))
            .collect()
    }

    /// Reconstructs L Lᵀ, mainly for tests.
    pub fn reconstruct(&self) -> SymmetricMatrix {
        let mut m = SymmetricMatrix::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..=i {
                let mut s = 0.0;
                for k in 0..=j.min(i) {
                    s += self.get(i, k) * self.get(j, k);
                }
                m.set(i, j, s);
            }
        }
        m
    }
}

/// Cholesky factorization of a symmetric positive-definite matrix.
///
/// Fails with the index of the first non-positive pivot when the input is
/// not positive definite.
pub fn cholesky(m: &SymmetricMatrix) -> Result<CholeskyFactor> {
    let n = m.dim();
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return Err(CoreError::NotPositiveDefinite { pivot: i });
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(CholeskyFactor { dim: n, lower: l })
}

/// Solves the SPD system `m x = b` through Cholesky.
pub fn solve_spd(m: &SymmetricMatrix, b: &[f64]) -> Result<Vec<f64>> {
    Ok(cholesky(m)?.solve(b))
}

/// Result of a least-squares fit.
#[derive(Debug, Clone)]
pub struct LeastSquaresFit {
    /// Minimizer of ‖y − Xβ‖² (minimum-norm when X is rank deficient).
    pub coefficients: Vec<f64>,
    /// Residual sum of squares at the minimizer.
    pub rss: f64,
    /// Numerical rank detected by the pivoted factorization.
    pub rank: usize,
    /// True when rank < number of columns.
    pub rank_deficient: bool,
}

/// Least squares via Householder QR with column pivoting.
///
/// `k = 0` returns the null fit with rss = yᵀy; intercept conventions are
/// the caller's business. Rank-deficient designs are solved in the detected
/// rank subspace and completed to the minimum-norm solution, with the
/// deficiency reported through `rank_deficient`.
pub fn least_squares(x: &Matrix, y: &[f64]) -> Result<LeastSquaresFit> {
    let n = x.rows();
    let k = x.cols();
    if y.len() != n {
        return Err(CoreError::Dimension {
            op: "least_squares",
            expected: n,
            got: y.len(),
        });
    }
    if n < k {
        return Err(CoreError::Dimension {
            op: "least_squares",
            expected: k,
            got: n,
        });
    }
    if k == 0 {
        return Ok(LeastSquaresFit {
            coefficients: vec![],
            rss: dot(y, y),
            rank: 0,
            rank_deficient: false,
        });
    }

    // Working copies: `a` is reduced in place, `b` accumulates Qᵀ y.
    let mut a = x.clone();
    let mut b = y.to_vec();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut col_norms: Vec<f64> = (0..k)
        .map(|j| (0..n).map(|i| a.get(i, j).powi(2)).sum())
        .collect();

    let mut rank = k;
    let mut r00 = 0.0_f64;
    for j in 0..k {
        // Pivot on the column with the largest remaining norm.
        let (pivot, &norm) = col_norms[j..]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, v)| (i + j, v))
            .unwrap();
        if pivot != j {
            for i in 0..n {
                let t = a.get(i, j);
                a.set(i, j, a.get(i, pivot));
                a.set(i, pivot, t);
            }
            col_norms.swap(j, pivot);
            perm.swap(j, pivot);
        }
        let _ = norm;

        // Householder vector for column j, rows j..n.
        let mut alpha = 0.0;
        for i in j..n {
            alpha += a.get(i, j) * a.get(i, j);
        }
        let alpha = alpha.sqrt();
        if j == 0 {
            r00 = alpha;
        }
        let tol = f64::EPSILON * (n.max(k) as f64) * r00;
        if alpha <= tol {
            rank = j;
            break;
        }
        let ajj = a.get(j, j);
        let beta = if ajj >= 0.0 { -alpha } else { alpha };
        // v = x − beta e1, normalized so v[j] carries the full pivot.
        let mut v = vec![0.0; n - j];
        v[0] = ajj - beta;
        for i in j + 1..n {
            v[i - j] = a.get(i, j);
        }
        let vtv = dot(&v, &v);
        if vtv > 0.0 {
            // Apply H = I − 2 v vᵀ / vᵀv to remaining columns and to b.
            for c in j..k {
                let mut s = 0.0;
                for i in j..n {
                    s += v[i - j] * a.get(i, c);
                }
                let f = 2.0 * s / vtv;
                for i in j..n {
                    let val = a.get(i, c) - f * v[i - j];
                    a.set(i, c, val);
                }
            }
            let mut s = 0.0;
            for i in j..n {
                s += v[i - j] * b[i];
            }
            let f = 2.0 * s / vtv;
            for i in j..n {
                b[i] -= f * v[i - j];
            }
        }
        a.set(j, j, beta);
        for i in j + 1..n {
            a.set(i, j, 0.0);
        }
        // Downdate remaining column norms.
        for (c, cn) in col_norms.iter_mut().enumerate().skip(j + 1) {
            *cn -= a.get(j, c) * a.get(j, c);
            if *cn < 0.0 {
                *cn = (0..n).skip(j + 1).map(|i| a.get(i, c).powi(2)).sum();
            }
        }
    }

    // Basic solution through back substitution on the r×r leading block.
    let mut z = vec![0.0; k];
    for i in (0..rank).rev() {
        let mut s = b[i];
        for j in i + 1..rank {
            s -= a.get(i, j) * z[j];
        }
        z[i] = s / a.get(i, i);
    }

    let rank_deficient = rank < k;
    if rank_deficient {
        // Minimum-norm completion: solutions are z + N t with the nullspace
        // basis N built from the free columns of R; pick t minimizing ‖z + N t‖.
        let free = k - rank;
        let mut null_basis = vec![vec![0.0; k]; free];
        for (f, basis) in null_basis.iter_mut().enumerate() {
            let col = rank + f;
            // Solve R11 w = R[., col]
            let mut w = vec![0.0; rank];
            for i in (0..rank).rev() {
                let mut s = a.get(i, col);
                for j in i + 1..rank {
                    s -= a.get(i, j) * w[j];
                }
                w[i] = s / a.get(i, i);
            }
            for (i, &wi) in w.iter().enumerate() {
                basis[i] = -wi;
            }
            basis[col] = 1.0;
        }
        let mut ntn = SymmetricMatrix::zeros(free);
        for i in 0..free {
            for j in i..free {
                ntn.set(i, j, dot(&null_basis[i], &null_basis[j]));
            }
        }
        let ntz: Vec<f64> = null_basis.iter().map(|nb| dot(nb, &z)).collect();
        let t = solve_spd(&ntn, &ntz)?;
        for (nb, &ti) in null_basis.iter().zip(&t) {
            for (zi, &nbi) in z.iter_mut().zip(nb) {
                *zi -= ti * nbi;
            }
        }
    }

    let rss: f64 = b[rank..n.min(b.len())].iter().map(|v| v * v).sum();

    // Undo the column permutation.
    let mut coefficients = vec![0.0; k];
    for (j, &p) in perm.iter().enumerate() {
        coefficients[p] = z[j];
    }

    Ok(LeastSquaresFit {
        coefficients,
        rss,
        rank,
        rank_deficient,
    })
}

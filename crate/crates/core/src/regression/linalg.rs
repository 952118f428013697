//! Small dense matrices and a Householder QR least-squares solver.

use std::ops::{Index, IndexMut};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `XᵀX`.
    pub fn gram(&self) -> Matrix {
        self.transpose().matmul(self)
    }

    /// Numerical rank: singular values below `rel_tol · σ_max` count as zero.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let sv = singular_values(self);
        let max = sv.iter().cloned().fold(0.0, f64::max);
        sv.iter().filter(|&&s| s > rel_tol * max).count()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Householder factorization `X = QR` applied to a right-hand side.
#[derive(Debug, Clone)]
pub(crate) struct QrSolve {
    /// Upper-triangular `p × p` factor.
    pub r: Matrix,
    /// First `p` entries of `Qᵀy`.
    pub qty: Vec<f64>,
}

/// Householder QR of an `n × p` matrix (`n ≥ p`) without pivoting, so a
/// tiny `R[j][j]` identifies column `j` as dependent on columns `0..j`.
pub(crate) fn householder(x: &Matrix, y: &[f64]) -> QrSolve {
    let (n, p) = (x.rows(), x.cols());
    assert!(n >= p && y.len() == n);
    let mut a = x.clone();
    let mut b = y.to_vec();
    let mut v = vec![0.0; n];
    for j in 0..p {
        let norm = (j..n).map(|i| a[(i, j)] * a[(i, j)]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[(j, j)] > 0.0 { -norm } else { norm };
        for i in j..n {
            v[i] = a[(i, j)];
        }
        v[j] -= alpha;
        let vtv: f64 = (j..n).map(|i| v[i] * v[i]).sum();
        if vtv == 0.0 {
            continue;
        }
        for c in j..p {
            let dot: f64 = (j..n).map(|i| v[i] * a[(i, c)]).sum();
            let f = 2.0 * dot / vtv;
            for i in j..n {
                a[(i, c)] -= f * v[i];
            }
        }
        let dot: f64 = (j..n).map(|i| v[i] * b[i]).sum();
        let f = 2.0 * dot / vtv;
        for i in j..n {
            b[i] -= f * v[i];
        }
        for i in (j + 1)..n {
            a[(i, j)] = 0.0;
        }
    }
    let r = Matrix::from_fn(p, p, |i, j| if j >= i { a[(i, j)] } else { 0.0 });
    b.truncate(p);
    QrSolve { r, qty: b }
}

/// Solves `R x = b` for upper-triangular `R`.
pub(crate) fn back_substitute(r: &Matrix, b: &[f64]) -> Vec<f64> {
    let p = r.rows();
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = ((i + 1)..p).map(|j| r[(i, j)] * x[j]).sum();
        x[i] = (b[i] - s) / r[(i, i)];
    }
    x
}

/// Inverse of an upper-triangular matrix.
pub(crate) fn upper_inverse(r: &Matrix) -> Matrix {
    let p = r.rows();
    let mut inv = Matrix::zeros(p, p);
    for c in 0..p {
        let mut e = vec![0.0; p];
        e[c] = 1.0;
        let col = back_substitute(r, &e);
        for i in 0..p {
            inv[(i, c)] = col[i];
        }
    }
    inv
}

/// Singular values by one-sided Jacobi rotations, in no particular order.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    // work on the orientation with fewer columns
    let mut a = if m.cols() > m.rows() { m.transpose() } else { m.clone() };
    let (n, p) = (a.rows(), a.cols());
    for _sweep in 0..60 {
        let mut rotated = false;
        for j in 0..p {
            for k in (j + 1)..p {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..n {
                    alpha += a[(i, j)] * a[(i, j)];
                    beta += a[(i, k)] * a[(i, k)];
                    gamma += a[(i, j)] * a[(i, k)];
                }
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let (x, y) = (a[(i, j)], a[(i, k)]);
                    a[(i, j)] = c * x - s * y;
                    a[(i, k)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (0..p)
        .map(|j| (0..n).map(|i| a[(i, j)] * a[(i, j)]).sum::<f64>().sqrt())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qr_solves_square_system() {
        let x = Matrix::from_fn(3, 3, |i, j| [[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]][i][j]);
        let truth = [1.0, -2.0, 0.5];
        let y = x.mul_vec(&truth);
        let qr = householder(&x, &y);
        let sol = back_substitute(&qr.r, &qr.qty);
        for (a, b) in sol.iter().zip(truth) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn upper_inverse_is_inverse() {
        let r = Matrix::from_fn(3, 3, |i, j| if j >= i { (i + 2 * j + 1) as f64 } else { 0.0 });
        let prod = r.matmul(&upper_inverse(&r));
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn singular_values_of_diagonal_and_rank() {
        let d = Matrix::from_fn(3, 3, |i, j| if i == j { [3.0, -2.0, 0.5][i] } else { 0.0 });
        let mut sv = singular_values(&d);
        sv.sort_by(f64::total_cmp);
        assert_eq!(sv, vec![0.5, 2.0, 3.0]);

        let dep = Matrix::from_fn(4, 3, |i, j| match j {
            0 => 1.0,
            1 => i as f64,
            _ => 2.0 + 3.0 * i as f64,
        });
        assert_eq!(dep.rank(1e-10), 2);
        assert_eq!(Matrix::identity(5).rank(1e-10), 5);
    }

    #[test]
    fn singular_values_match_gram_eigenvalues_2x2() {
        let m = Matrix::from_fn(2, 2, |i, j| [[4.0, 0.0], [3.0, -5.0]][i][j]);
        // σ² are the eigenvalues of MᵀM = [[25, -15], [-15, 25]] -> 40, 10
        let mut sv: Vec<f64> = singular_values(&m).iter().map(|s| s * s).collect();
        sv.sort_by(f64::total_cmp);
        assert!((sv[0] - 10.0).abs() < 1e-10 && (sv[1] - 40.0).abs() < 1e-10);
    }
}

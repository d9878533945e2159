//! Small dense helpers: a Cholesky factorization for SPD solves and an
//! eigen-based Moore–Penrose pseudo-inverse for symmetric matrices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Condition numbers above this trigger a warning.
pub const CONDITION_WARN: f64 = 1e12;

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    lower: DMatrix<f64>,
}

impl Cholesky {
    /// `None` when a non-positive pivot shows the matrix is not (numerically) SPD.
    pub fn factor(a: &DMatrix<f64>) -> Option<Self> {
        let n = a.nrows();
        debug_assert_eq!(n, a.ncols());
        let mut l = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Some(Self { lower: l })
    }

    /// Solves `L y = b`.
    fn forward(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.lower.nrows();
        let mut y = b.clone();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.lower[(i, k)] * y[k];
            }
            y[i] = s / self.lower[(i, i)];
        }
        y
    }

    /// Solves `Lᵀ x = y`.
    fn backward(&self, y: &DVector<f64>) -> DVector<f64> {
        let n = self.lower.nrows();
        let mut x = y.clone();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.lower[(k, i)] * x[k];
            }
            x[i] = s / self.lower[(i, i)];
        }
        x
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.backward(&self.forward(b))
    }

    /// `bᵀ A⁻¹ b` as the squared norm of `L⁻¹ b`, which is never negative.
    pub fn quadratic_form(&self, b: &DVector<f64>) -> f64 {
        self.forward(b).norm_squared()
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        let n = self.lower.nrows();
        let mut inv = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut e = DVector::<f64>::zeros(n);
            e[j] = 1.0;
            inv.set_column(j, &self.solve(&e));
        }
        // symmetrize away rounding asymmetry
        (&inv + inv.transpose()) * 0.5
    }

    /// Cheap lower bound on the 2-norm condition number from the factor diagonal.
    pub fn condition_estimate(&self) -> f64 {
        let diag = self.lower.diagonal();
        let max = diag.iter().cloned().fold(0.0, f64::max);
        let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        (max / min).powi(2)
    }
}

/// Moore–Penrose pseudo-inverse of a symmetric matrix. Eigenvalues with
/// magnitude at most `rel_tol · max|λ|` are treated as zero.
pub fn symmetric_pinv(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = a.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let max = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cutoff = rel_tol * max;
    let mut out = DMatrix::<f64>::zeros(n, n);
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() > cutoff {
            let v = eig.eigenvectors.column(k);
            out += (v * v.transpose()) / lambda;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_spd_system() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0]);
        let chol = Cholesky::factor(&a).unwrap();
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let x = chol.solve(&b);
        assert!((&a * &x - &b).norm() < 1e-12);
        let q = chol.quadratic_form(&b);
        assert!((q - b.dot(&x)).abs() < 1e-12);
        assert!((&a * chol.inverse() - DMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn cholesky_rejects_singular() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(Cholesky::factor(&a).is_none());
    }

    #[test]
    fn pinv_of_rank_one_laplacian() {
        let l = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let p = symmetric_pinv(&l, 1e-12);
        let expected = DMatrix::from_row_slice(2, 2, &[0.25, -0.25, -0.25, 0.25]);
        assert!((p - expected).norm() < 1e-14);
    }
}

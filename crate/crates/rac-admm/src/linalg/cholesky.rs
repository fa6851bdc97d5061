//! Dense Cholesky with an explicit pivot floor.
//!
//! A pivot at or below `PIVOT_RTOL` times the largest diagonal entry of the
//! input declares the matrix not positive definite — for solver blocks that is
//! exactly the per-block positive-definiteness assumption failing.

use crate::{Error, Result};
use nalgebra::DMatrix;

/// Relative pivot tolerance shared by the dense and sparse factorizations.
pub const PIVOT_RTOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct DenseCholesky {
    /// Lower-triangular factor, L L' = M.
    l: DMatrix<f64>,
}

/// Factor a symmetric positive definite matrix. Only the lower triangle of
/// `m` is read.
pub fn cholesky_dense(m: &DMatrix<f64>) -> Result<DenseCholesky> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Dimension(format!("cholesky of {}x{} matrix", n, m.ncols())));
    }
    let max_diag = (0..n).map(|i| m[(i, i)]).fold(0.0f64, f64::max);
    let floor = PIVOT_RTOL * max_diag;
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= floor || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { block: None });
        }
        let dj = d.sqrt();
        l[(j, j)] = dj;
        for i in (j + 1)..n {
            let mut v = m[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / dj;
        }
    }
    Ok(DenseCholesky { l })
}

impl DenseCholesky {
    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// Solve M x = rhs by forward/backward substitution.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if rhs.len() != n {
            return Err(Error::Dimension(format!(
                "rhs of length {} for {}x{} factor",
                rhs.len(),
                n,
                n
            )));
        }
        let mut x = rhs.to_vec();
        for i in 0..n {
            for k in 0..i {
                x[i] -= self.l[(i, k)] * x[k];
            }
            x[i] /= self.l[(i, i)];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                x[i] -= self.l[(k, i)] * x[k];
            }
            x[i] /= self.l[(i, i)];
        }
        Ok(x)
    }

    /// The lower-triangular factor.
    pub fn factor(&self) -> &DMatrix<f64> {
        &self.l
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_factors_to_identity() {
        let f = cholesky_dense(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(f.factor(), &DMatrix::identity(3, 3));
        assert_eq!(f.solve(&[3.0, -1.0, 0.5]).unwrap(), vec![3.0, -1.0, 0.5]);
    }

    #[test]
    fn diagonal_matrix_factors_to_roots() {
        let m = DMatrix::from_diagonal(&nalgebra::dvector![4.0, 9.0]);
        let f = cholesky_dense(&m).unwrap();
        assert_eq!(f.factor()[(0, 0)], 2.0);
        assert_eq!(f.factor()[(1, 1)], 3.0);
        assert_eq!(f.solve(&[8.0, 18.0]).unwrap(), vec![2.0, 2.0]);
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        // Eigenvalues 3 and -1.
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            cholesky_dense(&m),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn reconstruction_and_solve_accuracy() {
        // Random-ish SPD: B'B + I.
        let b = DMatrix::from_fn(5, 5, |i, j| ((i * 7 + j * 3) % 11) as f64 / 11.0 - 0.4);
        let m = b.transpose() * &b + DMatrix::identity(5, 5);
        let f = cholesky_dense(&m).unwrap();
        let rebuilt = f.factor() * f.factor().transpose();
        assert_abs_diff_eq!(rebuilt, m, epsilon = 1e-10 * m.norm());
        let x_true = [1.0, -2.0, 0.0, 0.5, 3.0];
        let rhs = m.clone() * nalgebra::DVector::from_row_slice(&x_true);
        let x = f.solve(rhs.as_slice()).unwrap();
        for (xi, ti) in x.iter().zip(&x_true) {
            assert_abs_diff_eq!(xi, ti, epsilon = 1e-9);
        }
    }
}

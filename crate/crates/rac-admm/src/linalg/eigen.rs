//! Eigenvalue routines for the desk-scale matrices used in convergence
//! analysis: a symmetric fast path (tridiagonalization + implicit QL) and a
//! general dense path (Hessenberg + shifted QR), both through nalgebra.

use nalgebra::{Complex, DMatrix};

use crate::error::Error;
use crate::Result;

const EIGEN_EPS: f64 = 1e-13;
const EIGEN_MAX_ITER: usize = 2000;

/// Full spectrum of a square matrix plus its spectral radius.
pub struct EigenResult {
    pub values: Vec<Complex<f64>>,
    pub spectral_radius: f64,
}

fn is_symmetric(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    let scale = m.amax().max(1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                return false;
            }
        }
    }
    true
}

/// All eigenvalues of a square matrix, complex allowed.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<EigenResult> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Dimension(format!(
            "eigenvalues of {}x{} matrix",
            n,
            m.ncols()
        )));
    }
    if n == 0 {
        return Ok(EigenResult {
            values: Vec::new(),
            spectral_radius: 0.0,
        });
    }
    let values: Vec<Complex<f64>> = if is_symmetric(m) {
        symmetric_eigenvalues(m)?
            .into_iter()
            .map(|v| Complex::new(v, 0.0))
            .collect()
    } else {
        let schur = nalgebra::Schur::try_new(m.clone(), EIGEN_EPS, EIGEN_MAX_ITER)
            .ok_or_else(|| {
                Error::NoConvergence(format!(
                    "QR iteration did not converge for {}x{} matrix",
                    n, n
                ))
            })?;
        schur.complex_eigenvalues().iter().copied().collect()
    };
    let spectral_radius = values.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    Ok(EigenResult {
        values,
        spectral_radius,
    })
}

/// Symmetric square root of a symmetric positive definite matrix, via its
/// eigendecomposition. Errors when any eigenvalue is non-positive.
pub fn symmetric_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Dimension(format!(
            "square root of {}x{} matrix",
            n,
            m.ncols()
        )));
    }
    let se = nalgebra::SymmetricEigen::try_new(m.clone(), EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or_else(|| {
            Error::NoConvergence(format!(
                "QL iteration did not converge for {}x{} symmetric matrix",
                n, n
            ))
        })?;
    if se.eigenvalues.iter().any(|&v| v <= 0.0) {
        return Err(Error::NotPositiveDefinite { block: None });
    }
    let sqrt_vals = se.eigenvalues.map(f64::sqrt);
    Ok(&se.eigenvectors * DMatrix::from_diagonal(&sqrt_vals) * se.eigenvectors.transpose())
}

/// Eigenvalues of a symmetric matrix, sorted ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Dimension(format!(
            "eigenvalues of {}x{} matrix",
            n,
            m.ncols()
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let se = nalgebra::SymmetricEigen::try_new(m.clone(), EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or_else(|| {
            Error::NoConvergence(format!(
                "QL iteration did not converge for {}x{} symmetric matrix",
                n, n
            ))
        })?;
    let mut vals: Vec<f64> = se.eigenvalues.iter().copied().collect();
    vals.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(vals)
}

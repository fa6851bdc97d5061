//! Factorization kernels: dense and sparse Cholesky, LDL-based KKT solves,
//! and eigenvalue routines for analysis-scale matrices.

pub mod cholesky;
pub mod csc;
pub mod eigen;
pub mod kkt;
pub mod sparse_ldl;

pub use cholesky::{cholesky_dense, DenseCholesky, PIVOT_RTOL};
pub use csc::Csc;
pub use eigen::{eigenvalues, symmetric_eigenvalues, symmetric_sqrt, EigenResult};
pub use kkt::{
    kkt_factor_general, kkt_matrix_dense, kkt_solve_diagonal, ldl_dense, DenseLdl, DiagonalKkt,
    KktFactor,
};
pub use sparse_ldl::{fill_reducing_order, sparse_ldl, SparseLdl, MIN_DEGREE_LIMIT};

use crate::problem::SparseMatrix;
use crate::Result;

/// Blocks at or below this many columns are densified before factorization;
/// dense Cholesky wins at block scale, sparse LDL' with a fill-reducing
/// ordering takes over above it.
pub const DENSE_BLOCK_LIMIT: usize = 400;

/// Cholesky-grade factor of a symmetric positive definite matrix, routed by
/// size: dense at or below [`DENSE_BLOCK_LIMIT`], sparse LDL' above.
pub enum CholeskyFactor {
    Dense(DenseCholesky),
    Sparse(SparseLdl),
}

/// Factor a symmetric positive definite matrix.
pub fn cholesky(m: &SparseMatrix) -> Result<CholeskyFactor> {
    if m.ncols() <= DENSE_BLOCK_LIMIT {
        Ok(CholeskyFactor::Dense(cholesky_dense(&m.to_dense())?))
    } else {
        Ok(CholeskyFactor::Sparse(sparse_ldl(m, true, None)?))
    }
}

/// Solve M x = rhs against a [`cholesky`] factor.
pub fn solve_chol(factor: &CholeskyFactor, rhs: &[f64]) -> Result<Vec<f64>> {
    match factor {
        CholeskyFactor::Dense(f) => f.solve(rhs),
        CholeskyFactor::Sparse(f) => f.solve(rhs),
    }
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        match self {
            CholeskyFactor::Dense(f) => f.dim(),
            CholeskyFactor::Sparse(f) => f.dim(),
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        solve_chol(self, rhs)
    }
}

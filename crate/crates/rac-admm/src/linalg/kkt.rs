//! KKT solves for the single-block update.
//!
//! The bordered system
//!
//! ```text
//! [ H + beta I   sqrt(beta) A' ] [x ]   [r]
//! [ sqrt(beta) A      -I       ] [mu] = [0]
//! ```
//!
//! is symmetric quasidefinite, so an unpivoted LDL' factorization exists for
//! any symmetric permutation; the factor is built once and reused for every
//! iteration. Eliminating `mu` shows the x-part solves
//! `(H + beta I + beta A'A) x = r` without ever forming `A'A`.
//!
//! When `H` is diagonal there is a cheaper route: factor the m-by-m matrix
//! `G = I + beta A (H + beta I)^{-1} A'` and recover x by the matrix
//! inversion lemma. That keeps the factorization at the row count of `A`,
//! which is what makes huge weakly-constrained problems cheap.

use nalgebra::DMatrix;

use crate::error::Error;
use crate::problem::SparseMatrix;
use crate::Result;

use super::cholesky::{cholesky_dense, DenseCholesky, PIVOT_RTOL};
use super::csc::Csc;
use super::sparse_ldl::{sparse_ldl, SparseLdl};
use super::DENSE_BLOCK_LIMIT;

/// Unpivoted dense LDL' of a symmetric matrix. Safe for positive definite
/// and quasidefinite inputs.
pub struct DenseLdl {
    l: DMatrix<f64>,
    d: Vec<f64>,
}

pub fn ldl_dense(m: &DMatrix<f64>) -> Result<DenseLdl> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Dimension(format!("LDL of {}x{} matrix", n, m.ncols())));
    }
    let max_diag = (0..n).map(|i| m[(i, i)].abs()).fold(0.0f64, f64::max);
    let floor = PIVOT_RTOL * max_diag;
    let mut l = DMatrix::identity(n, n);
    let mut d = vec![0f64; n];
    for j in 0..n {
        let mut dj = m[(j, j)];
        for k in 0..j {
            dj -= l[(j, k)] * l[(j, k)] * d[k];
        }
        if dj.abs() <= floor || !dj.is_finite() {
            return Err(Error::Singular(format!("zero pivot at column {}", j)));
        }
        d[j] = dj;
        for i in (j + 1)..n {
            let mut v = m[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)] * d[k];
            }
            l[(i, j)] = v / dj;
        }
    }
    Ok(DenseLdl { l, d })
}

impl DenseLdl {
    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.d.len();
        if rhs.len() != n {
            return Err(Error::Dimension(format!(
                "rhs of length {} for {}x{} factor",
                rhs.len(),
                n,
                n
            )));
        }
        let mut w = rhs.to_vec();
        for j in 0..n {
            let wj = w[j];
            for i in (j + 1)..n {
                w[i] -= self.l[(i, j)] * wj;
            }
        }
        for j in 0..n {
            w[j] /= self.d[j];
        }
        for j in (0..n).rev() {
            let mut s = w[j];
            for i in (j + 1)..n {
                s -= self.l[(i, j)] * w[i];
            }
            w[j] = s;
        }
        Ok(w)
    }
}

/// Factorization of the bordered single-block system, dense below
/// [`DENSE_BLOCK_LIMIT`] total dimension and sparse above it.
pub enum KktFactor {
    Dense { ldl: DenseLdl, n: usize, m: usize },
    Sparse { ldl: SparseLdl, n: usize, m: usize },
}

/// Assemble the bordered matrix as triplets.
fn kkt_triplets(h: &SparseMatrix, a: &SparseMatrix, beta: f64) -> Vec<(usize, usize, f64)> {
    let n = h.nrows();
    let m = a.nrows();
    let sb = beta.sqrt();
    let mut t = Vec::with_capacity(h.nnz() + 2 * a.nnz() + n + m);
    t.extend(h.entries().iter().copied());
    for i in 0..n {
        t.push((i, i, beta));
    }
    for &(r, j, v) in a.entries() {
        t.push((n + r, j, sb * v));
        t.push((j, n + r, sb * v));
    }
    for r in 0..m {
        t.push((n + r, n + r, -1.0));
    }
    t
}

/// Dense copy of the bordered matrix, for residual checks and small systems.
pub fn kkt_matrix_dense(h: &SparseMatrix, a: &SparseMatrix, beta: f64) -> DMatrix<f64> {
    let n = h.nrows();
    let m = a.nrows();
    let mut k = DMatrix::zeros(n + m, n + m);
    for (i, j, v) in kkt_triplets(h, a, beta) {
        k[(i, j)] += v;
    }
    k
}

/// Factor `[[H + beta I, sqrt(beta) A'], [sqrt(beta) A, -I]]` once for reuse.
pub fn kkt_factor_general(h: &SparseMatrix, a: &SparseMatrix, beta: f64) -> Result<KktFactor> {
    let n = h.nrows();
    let m = a.nrows();
    if h.ncols() != n {
        return Err(Error::Dimension(format!(
            "H must be square, got {}x{}",
            n,
            h.ncols()
        )));
    }
    if m > 0 && a.ncols() != n {
        return Err(Error::Dimension(format!(
            "A has {} columns for {} variables",
            a.ncols(),
            n
        )));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument(format!("beta must be positive, got {}", beta)));
    }
    let dim = n + m;
    if dim <= DENSE_BLOCK_LIMIT {
        let k = kkt_matrix_dense(h, a, beta);
        Ok(KktFactor::Dense {
            ldl: ldl_dense(&k)?,
            n,
            m,
        })
    } else {
        let k = SparseMatrix::from_triplets(dim, dim, kkt_triplets(h, a, beta))?;
        Ok(KktFactor::Sparse {
            ldl: sparse_ldl(&k, false, None)?,
            n,
            m,
        })
    }
}

impl KktFactor {
    pub fn n(&self) -> usize {
        match self {
            KktFactor::Dense { n, .. } | KktFactor::Sparse { n, .. } => *n,
        }
    }

    pub fn m(&self) -> usize {
        match self {
            KktFactor::Dense { m, .. } | KktFactor::Sparse { m, .. } => *m,
        }
    }

    /// Solve against the full bordered right-hand side of length n + m.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        match self {
            KktFactor::Dense { ldl, .. } => ldl.solve(rhs),
            KktFactor::Sparse { ldl, .. } => ldl.solve(rhs),
        }
    }

    /// Solve with the multiplier part of the right-hand side zero, returning
    /// only x: the solution of `(H + beta I + beta A'A) x = rhs_x`.
    pub fn solve_x(&self, rhs_x: &[f64]) -> Result<Vec<f64>> {
        let (n, m) = (self.n(), self.m());
        if rhs_x.len() != n {
            return Err(Error::Dimension(format!(
                "x-part rhs of length {} for n = {}",
                rhs_x.len(),
                n
            )));
        }
        let mut full = vec![0f64; n + m];
        full[..n].copy_from_slice(rhs_x);
        let mut sol = self.solve(&full)?;
        sol.truncate(n);
        Ok(sol)
    }
}

/// Woodbury-route factor for diagonal H: only the m-by-m Schur complement
/// `G = I + beta A D^{-1} A'` with `D = diag(h) + beta I` is factored.
pub struct DiagonalKkt {
    d_inv: Vec<f64>,
    a: Csc,
    beta: f64,
    g: Option<DenseCholesky>,
}

impl DiagonalKkt {
    pub fn new(h_diag: &[f64], a: &SparseMatrix, beta: f64) -> Result<Self> {
        let n = h_diag.len();
        let m = a.nrows();
        if m > 0 && a.ncols() != n {
            return Err(Error::Dimension(format!(
                "A has {} columns for {} variables",
                a.ncols(),
                n
            )));
        }
        if !(beta > 0.0) {
            return Err(Error::InvalidArgument(format!("beta must be positive, got {}", beta)));
        }
        let mut d_inv = Vec::with_capacity(n);
        for (i, &h) in h_diag.iter().enumerate() {
            let d = h + beta;
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { block: Some(i) });
            }
            d_inv.push(1.0 / d);
        }
        let a = Csc::from_sparse(a);
        let g = if m == 0 {
            None
        } else {
            let mut g = DMatrix::identity(m, m);
            for j in 0..n {
                let (rows, vals) = a.col(j);
                let w = beta * d_inv[j];
                for (p, &r) in rows.iter().enumerate() {
                    for (q, &s) in rows.iter().enumerate() {
                        g[(r, s)] += w * vals[p] * vals[q];
                    }
                }
            }
            Some(cholesky_dense(&g)?)
        };
        Ok(DiagonalKkt { d_inv, a, beta, g })
    }

    pub fn n(&self) -> usize {
        self.d_inv.len()
    }

    /// Solve `(H + beta I + beta A'A) x = rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.d_inv.len();
        if rhs.len() != n {
            return Err(Error::Dimension(format!(
                "rhs of length {} for n = {}",
                rhs.len(),
                n
            )));
        }
        let u: Vec<f64> = rhs.iter().zip(&self.d_inv).map(|(r, di)| r * di).collect();
        let g = match &self.g {
            None => return Ok(u),
            Some(g) => g,
        };
        let v = self.a.matvec(&u);
        let w = g.solve(&v)?;
        let atw = self.a.matvec_t(&w);
        Ok(u.iter()
            .zip(&self.d_inv)
            .zip(&atw)
            .map(|((ui, di), ti)| ui - self.beta * di * ti)
            .collect())
    }
}

/// One-shot diagonal-H solve of `(H + beta I + beta A'A) x = rhs`.
pub fn kkt_solve_diagonal(
    h_diag: &[f64],
    a: &SparseMatrix,
    beta: f64,
    rhs: &[f64],
) -> Result<Vec<f64>> {
    DiagonalKkt::new(h_diag, a, beta)?.solve(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual_ok(k: &DMatrix<f64>, x: &[f64], rhs: &[f64]) {
        let xv = nalgebra::DVector::from_column_slice(x);
        let r = k * &xv - nalgebra::DVector::from_column_slice(rhs);
        let scale = 1.0 + rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(
            r.amax() <= 1e-9 * scale,
            "residual {} over scale {}",
            r.amax(),
            scale
        );
    }

    #[test]
    fn bordered_two_var_one_row() {
        let h = SparseMatrix::identity(2);
        let a = SparseMatrix::from_triplets(1, 2, vec![(0, 0, 1.0), (0, 1, 1.0)]).unwrap();
        let f = kkt_factor_general(&h, &a, 1.0).unwrap();
        let sol = f.solve(&[3.0, 3.0, 0.0]).unwrap();
        assert!((sol[0] - 0.75).abs() < 1e-12);
        assert!((sol[1] - 0.75).abs() < 1e-12);
        assert!((sol[2] - 1.5).abs() < 1e-12);
    }

    #[test]
    fn empty_border_is_shifted_h_solve() {
        let h = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 3.0), (1, 1, 8.0)]).unwrap();
        let a = SparseMatrix::zeros(0, 2);
        let f = kkt_factor_general(&h, &a, 1.0).unwrap();
        let x = f.solve(&[4.0, 9.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn repeated_solves_meet_residual_bound() {
        let n = 7;
        let m = 3;
        let mut ht = Vec::new();
        for i in 0..n {
            ht.push((i, i, 2.0 + (i as f64 * 0.7).sin().abs()));
            if i + 1 < n {
                let v = 0.3 * ((i * i) as f64 * 0.13).cos();
                ht.push((i, i + 1, v));
                ht.push((i + 1, i, v));
            }
        }
        let h = SparseMatrix::from_triplets(n, n, ht).unwrap();
        let mut at = Vec::new();
        for r in 0..m {
            for j in 0..n {
                if (r + 2 * j) % 3 == 0 {
                    at.push((r, j, ((r + j) as f64 * 0.41).sin()));
                }
            }
        }
        let a = SparseMatrix::from_triplets(m, n, at).unwrap();
        let beta = 0.7;
        let f = kkt_factor_general(&h, &a, beta).unwrap();
        let k = kkt_matrix_dense(&h, &a, beta);
        for trial in 0..5 {
            let rhs: Vec<f64> = (0..n + m)
                .map(|i| ((i + trial) as f64 * 0.91).sin() * 3.0)
                .collect();
            let x = f.solve(&rhs).unwrap();
            residual_ok(&k, &x, &rhs);
        }
    }

    #[test]
    fn solve_x_eliminates_multiplier_block() {
        let h = SparseMatrix::identity(2);
        let a = SparseMatrix::from_triplets(1, 2, vec![(0, 0, 1.0), (0, 1, 1.0)]).unwrap();
        let beta = 2.0;
        let f = kkt_factor_general(&h, &a, beta).unwrap();
        let x = f.solve_x(&[1.0, 4.0]).unwrap();
        // (H + beta I + beta A'A) = [[5, 2], [2, 5]]; solve against (1, 4).
        assert!((5.0 * x[0] + 2.0 * x[1] - 1.0).abs() < 1e-12);
        assert!((2.0 * x[0] + 5.0 * x[1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_route_matches_general() {
        let n = 9;
        let m = 3;
        let h_diag: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).cos().abs() * 2.0).collect();
        let h = SparseMatrix::from_triplets(
            n,
            n,
            h_diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect::<Vec<_>>(),
        )
        .unwrap();
        let mut at = Vec::new();
        for r in 0..m {
            for j in 0..n {
                if (r + j) % 2 == 0 {
                    at.push((r, j, ((r * 7 + j) as f64 * 0.23).sin()));
                }
            }
        }
        let a = SparseMatrix::from_triplets(m, n, at).unwrap();
        let beta = 1.3;
        let f = kkt_factor_general(&h, &a, beta).unwrap();
        for trial in 0..4 {
            let rhs: Vec<f64> = (0..n).map(|i| ((i * 3 + trial) as f64 * 0.57).sin()).collect();
            let xg = f.solve_x(&rhs).unwrap();
            let xd = kkt_solve_diagonal(&h_diag, &a, beta, &rhs).unwrap();
            for (g, d) in xg.iter().zip(&xd) {
                assert!((g - d).abs() < 1e-9, "{} vs {}", g, d);
            }
        }
    }

    #[test]
    fn diagonal_one_var_example() {
        let a = SparseMatrix::from_triplets(1, 1, vec![(0, 0, 1.0)]).unwrap();
        let x = kkt_solve_diagonal(&[0.0], &a, 1.0, &[1.0]).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn diagonal_no_rows_is_componentwise() {
        let a = SparseMatrix::zeros(0, 3);
        let x = kkt_solve_diagonal(&[1.0, 3.0, 0.0], &a, 1.0, &[4.0, 8.0, 5.0]).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-14);
        assert!((x[1] - 2.0).abs() < 1e-14);
        assert!((x[2] - 5.0).abs() < 1e-14);
    }

    #[test]
    fn large_system_routes_sparse_and_solves() {
        let n = super::DENSE_BLOCK_LIMIT + 50;
        let mut ht = Vec::new();
        for i in 0..n {
            ht.push((i, i, 4.0));
            if i + 1 < n {
                ht.push((i, i + 1, -1.0));
                ht.push((i + 1, i, -1.0));
            }
        }
        let h = SparseMatrix::from_triplets(n, n, ht).unwrap();
        let a = SparseMatrix::from_triplets(1, n, vec![(0, 0, 1.0), (0, n - 1, 1.0)]).unwrap();
        let f = kkt_factor_general(&h, &a, 1.0).unwrap();
        assert!(matches!(f, KktFactor::Sparse { .. }));
        let mut rhs = vec![0.5f64; n + 1];
        rhs[n] = 0.0;
        let x = f.solve(&rhs).unwrap();
        let k = kkt_matrix_dense(&h, &a, 1.0);
        residual_ok(&k, &x, &rhs);
    }
}

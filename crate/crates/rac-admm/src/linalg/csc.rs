//! Compressed sparse column working format used by the factorization kernels
//! and the solver engines. Built once from assembled triplets; columns expose
//! contiguous (row, value) slices for fast block extraction.

use crate::problem::SparseMatrix;

#[derive(Debug, Clone)]
pub struct Csc {
    pub nrows: usize,
    pub ncols: usize,
    pub col_ptr: Vec<usize>,
    pub row_ind: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csc {
    pub fn from_sparse(m: &SparseMatrix) -> Csc {
        let mut col_counts = vec![0usize; m.ncols() + 1];
        for &(_, j, _) in m.entries() {
            col_counts[j + 1] += 1;
        }
        for j in 0..m.ncols() {
            col_counts[j + 1] += col_counts[j];
        }
        let col_ptr = col_counts;
        let mut next = col_ptr.clone();
        let mut row_ind = vec![0usize; m.nnz()];
        let mut values = vec![0.0f64; m.nnz()];
        for &(i, j, v) in m.entries() {
            let slot = next[j];
            row_ind[slot] = i;
            values[slot] = v;
            next[j] += 1;
        }
        // Triplets are sorted by (row, col), so each column's rows are already
        // in increasing order after the counting pass.
        Csc { nrows: m.nrows(), ncols: m.ncols(), col_ptr, row_ind, values }
    }

    pub fn nnz(&self) -> usize {
        self.row_ind.len()
    }

    /// (row indices, values) of column j.
    pub fn col(&self, j: usize) -> (&[usize], &[f64]) {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        (&self.row_ind[range.clone()], &self.values[range])
    }

    /// y += A[:, j] * alpha
    pub fn axpy_col(&self, j: usize, alpha: f64, y: &mut [f64]) {
        let (rows, vals) = self.col(j);
        for (&i, &v) in rows.iter().zip(vals) {
            y[i] += v * alpha;
        }
    }

    /// A[:, j]' x
    pub fn dot_col(&self, j: usize, x: &[f64]) -> f64 {
        let (rows, vals) = self.col(j);
        rows.iter().zip(vals).map(|(&i, &v)| v * x[i]).sum()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        for j in 0..self.ncols {
            if x[j] != 0.0 {
                self.axpy_col(j, x[j], &mut y);
            }
        }
        y
    }

    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        (0..self.ncols).map(|j| self.dot_col(j, x)).collect()
    }
}

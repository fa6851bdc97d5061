//! Problem data model: sparse triplet matrices, the LCQP record, validation,
//! and simple row scaling.
//!
//! The model is
//!
//! ```text
//!     min 1/2 x'Hx + c'x + c0
//!     s.t. A_eq x = b_eq,  A_ineq x <= b_ineq,  lb <= x <= ub
//! ```
//!
//! with per-variable kinds (continuous / binary / integer). Bounds are extended
//! reals; IEEE infinities stand for "unbounded". All types are immutable after
//! construction and safe to share across concurrent solves.

mod manifest;
mod matrix_market;

pub use manifest::{load_problem, load_problem_str, save_problem, ProblemManifest};
pub use matrix_market::{load_matrix_market, parse_matrix_market, write_matrix_market};

use crate::{Error, Result};
use nalgebra::DMatrix;

/// Integrality tag for one variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Continuous,
    Binary,
    Integer,
}

/// Sparse matrix in assembled triplet form: entries sorted by (row, col) with
/// duplicates summed. The `symmetric` flag asserts that entry (i, j) implies an
/// equal entry (j, i); it is set by constructors that guarantee it (e.g. the
/// Matrix Market reader after expanding a symmetric header).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
    symmetric: bool,
}

impl SparseMatrix {
    /// Empty matrix of the given shape.
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMatrix { nrows, ncols, entries: Vec::new(), symmetric: false }
    }

    pub fn identity(n: usize) -> Self {
        let entries = (0..n).map(|i| (i, i, 1.0)).collect();
        SparseMatrix { nrows: n, ncols: n, entries, symmetric: true }
    }

    /// Assemble from raw triplets: bounds-checks indices, sorts by (row, col)
    /// and sums duplicates (Matrix Market convention). Entries that cancel to
    /// zero are kept; explicit zeros are allowed.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut entries: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        for &(i, j, v) in &entries {
            if i >= nrows || j >= ncols {
                return Err(Error::Dimension(format!(
                    "entry ({i}, {j}) outside {nrows}x{ncols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("entry ({i}, {j}) is not finite")));
            }
        }
        entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        entries.dedup_by(|later, earlier| {
            if later.0 == earlier.0 && later.1 == earlier.1 {
                earlier.2 += later.2;
                true
            } else {
                false
            }
        });
        Ok(SparseMatrix { nrows, ncols, entries, symmetric: false })
    }

    /// Dense constructor; zero entries are dropped.
    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut entries = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    entries.push((i, j, m[(i, j)]));
                }
            }
        }
        SparseMatrix { nrows: m.nrows(), ncols: m.ncols(), entries, symmetric: false }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nrows == 0 || self.ncols == 0 || self.entries.is_empty()
    }

    /// Assembled triplets, sorted by (row, col).
    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn is_symmetric_flagged(&self) -> bool {
        self.symmetric
    }

    /// Verify the symmetry assertion within `tol` and set the flag.
    pub fn mark_symmetric(mut self, tol: f64) -> Result<Self> {
        let defect = self.symmetry_defect();
        if self.nrows != self.ncols || defect > tol {
            return Err(Error::InvalidArgument(format!(
                "matrix is not symmetric (defect {defect:.3e} > {tol:.3e})"
            )));
        }
        self.symmetric = true;
        Ok(self)
    }

    /// Largest |a_ij - a_ji|; 0 for the empty matrix, infinity when not square.
    pub fn symmetry_defect(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        let mut defect = 0.0f64;
        for &(i, j, v) in &self.entries {
            let vt = self.get(j, i);
            defect = defect.max((v - vt).abs());
        }
        defect
    }

    /// Entry lookup by binary search; absent entries are 0.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self.entries.binary_search_by(|e| (e.0, e.1).cmp(&(i, j))) {
            Ok(k) => self.entries[k].2,
            Err(_) => 0.0,
        }
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "matvec shape");
        let mut y = vec![0.0; self.nrows];
        for &(i, j, v) in &self.entries {
            y[i] += v * x[j];
        }
        y
    }

    /// y = A' x.
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows, "matvec_t shape");
        let mut y = vec![0.0; self.ncols];
        for &(i, j, v) in &self.entries {
            y[j] += v * x[i];
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
        }
        m
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut entries: Vec<(usize, usize, f64)> =
            self.entries.iter().map(|&(i, j, v)| (j, i, v)).collect();
        entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        SparseMatrix { nrows: self.ncols, ncols: self.nrows, entries, symmetric: self.symmetric }
    }

    /// Infinity norm of each row.
    pub fn row_inf_norms(&self) -> Vec<f64> {
        let mut norms = vec![0.0f64; self.nrows];
        for &(i, _, v) in &self.entries {
            norms[i] = norms[i].max(v.abs());
        }
        norms
    }

    /// Divide each row by `factors[i]` (a factor of 1 leaves the row alone).
    pub fn scale_rows(&self, factors: &[f64]) -> SparseMatrix {
        assert_eq!(factors.len(), self.nrows, "scale_rows shape");
        let entries = self.entries.iter().map(|&(i, j, v)| (i, j, v / factors[i])).collect();
        SparseMatrix { nrows: self.nrows, ncols: self.ncols, entries, symmetric: false }
    }
}

/// Linearly constrained quadratic program with per-variable integrality.
#[derive(Debug, Clone)]
pub struct Lcqp {
    /// Symmetric n-by-n Hessian of the 1/2 x'Hx term.
    pub h: SparseMatrix,
    pub c: Vec<f64>,
    pub a_eq: SparseMatrix,
    pub b_eq: Vec<f64>,
    pub a_ineq: SparseMatrix,
    pub b_ineq: Vec<f64>,
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
    pub kinds: Vec<VarKind>,
    /// Constant objective offset.
    pub c0: f64,
}

impl Lcqp {
    /// Unconstrained problem with free bounds and continuous kinds.
    pub fn unconstrained(h: SparseMatrix, c: Vec<f64>) -> Self {
        let n = c.len();
        Lcqp {
            h,
            c,
            a_eq: SparseMatrix::zeros(0, n),
            b_eq: Vec::new(),
            a_ineq: SparseMatrix::zeros(0, n),
            b_ineq: Vec::new(),
            lb: vec![f64::NEG_INFINITY; n],
            ub: vec![f64::INFINITY; n],
            kinds: vec![VarKind::Continuous; n],
            c0: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn m_eq(&self) -> usize {
        self.b_eq.len()
    }

    pub fn m_ineq(&self) -> usize {
        self.b_ineq.len()
    }

    /// 1/2 x'Hx + c'x + c0.
    pub fn objective(&self, x: &[f64]) -> f64 {
        let hx = self.h.matvec(x);
        let mut val = self.c0;
        for i in 0..self.n() {
            val += (0.5 * hx[i] + self.c[i]) * x[i];
        }
        val
    }

    pub fn is_continuous(&self) -> bool {
        self.kinds.iter().all(|k| *k == VarKind::Continuous)
    }

    /// Indices of binary/integer variables.
    pub fn integer_indices(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.kinds[i] != VarKind::Continuous).collect()
    }

    /// Run all validation checks; `check_eigenvalue` additionally estimates the
    /// minimum eigenvalue sign of H (only attempted for n <= 500).
    pub fn validate(&self, check_eigenvalue: bool) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let n = self.n();
        let mut dim = |name: &str, got: usize, want: usize| {
            if got != want {
                out.push(Diagnostic::error(format!("{name}: expected {want}, found {got}")));
            }
        };
        dim("H rows", self.h.nrows(), n);
        dim("H cols", self.h.ncols(), n);
        dim("A_eq cols", self.a_eq.ncols(), n);
        dim("A_ineq cols", self.a_ineq.ncols(), n);
        dim("b_eq length", self.b_eq.len(), self.a_eq.nrows());
        dim("b_ineq length", self.b_ineq.len(), self.a_ineq.nrows());
        dim("lb length", self.lb.len(), n);
        dim("ub length", self.ub.len(), n);
        dim("kinds length", self.kinds.len(), n);
        for i in 0..self.lb.len().min(self.ub.len()) {
            if self.lb[i] > self.ub[i] {
                out.push(Diagnostic::error(format!(
                    "bounds crossed at index {i}: lb {} > ub {}",
                    self.lb[i], self.ub[i]
                )));
            }
        }
        for (i, k) in self.kinds.iter().enumerate() {
            if *k == VarKind::Binary
                && i < self.lb.len()
                && i < self.ub.len()
                && (self.lb[i] > 0.0 || self.ub[i] < 1.0)
            {
                out.push(Diagnostic::warning(format!(
                    "binary variable {i} has bounds [{}, {}] tighter than {{0,1}}",
                    self.lb[i], self.ub[i]
                )));
            }
        }
        let defect = self.h.symmetry_defect();
        if defect > SYMMETRY_TOL {
            out.push(Diagnostic::error(format!(
                "H asymmetric: defect {defect:.3e} exceeds {SYMMETRY_TOL:.0e}"
            )));
        }
        if check_eigenvalue && n > 0 && n <= 500 && self.h.nrows() == n && self.h.ncols() == n {
            let eigs = self.h.to_dense().symmetric_eigenvalues();
            let min = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
            if min < -1e-8 {
                out.push(Diagnostic::warning(format!(
                    "H has negative eigenvalue {min:.3e}; problem is not convex"
                )));
            } else {
                out.push(Diagnostic::info(format!("min eigenvalue of H: {min:.3e}")));
            }
        }
        out
    }

    /// Validation as a hard gate: first error-severity diagnostic becomes an Err.
    pub fn check(&self) -> Result<()> {
        match self.validate(false).into_iter().find(|d| d.severity == Severity::Error) {
            Some(d) => Err(Error::InvalidArgument(d.message)),
            None => Ok(()),
        }
    }
}

/// Tolerance for declaring H symmetric on its provided entries.
pub const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Info,
    Warning,
    Error,
}

#[derive(Debug, Clone)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    fn error(message: String) -> Self {
        Diagnostic { severity: Severity::Error, message }
    }

    fn warning(message: String) -> Self {
        Diagnostic { severity: Severity::Warning, message }
    }

    fn info(message: String) -> Self {
        Diagnostic { severity: Severity::Info, message }
    }
}

/// Row scale factors applied to the constraint systems; needed to recompute
/// residuals and duals on the original model.
#[derive(Debug, Clone)]
pub struct RowScaling {
    pub eq: Vec<f64>,
    pub ineq: Vec<f64>,
}

/// Divide each nonzero constraint row and its right-hand side by the row's
/// infinity norm. Zero rows are left untouched (factor 1). The feasible set is
/// unchanged; returned factors let callers map duals back (y_orig = y_scaled / f).
pub fn row_scale(problem: &Lcqp) -> (Lcqp, RowScaling) {
    let one_if_zero = |v: Vec<f64>| -> Vec<f64> {
        v.into_iter().map(|x| if x == 0.0 { 1.0 } else { x }).collect()
    };
    let eq = one_if_zero(problem.a_eq.row_inf_norms());
    let ineq = one_if_zero(problem.a_ineq.row_inf_norms());
    let mut scaled = problem.clone();
    scaled.a_eq = problem.a_eq.scale_rows(&eq);
    scaled.a_ineq = problem.a_ineq.scale_rows(&ineq);
    for (b, f) in scaled.b_eq.iter_mut().zip(&eq) {
        *b /= f;
    }
    for (b, f) in scaled.b_ineq.iter_mut().zip(&ineq) {
        *b /= f;
    }
    (scaled, RowScaling { eq, ineq })
}

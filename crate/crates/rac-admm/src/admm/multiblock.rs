//! Gauss-Seidel block sweeps over the augmented Lagrangian: randomly
//! re-assembled blocks (RAC), a fixed partition visited in fresh random order
//! (RP), and the plain cyclic baseline.
//!
//! Every iteration solves, for each block omega in turn,
//!
//! ```text
//!     Q[omega,omega] x_omega = -(q_omega + q_hat)
//! ```
//!
//! where `Q = H + beta A_eq'A_eq + beta A_ineq'A_ineq (+ beta I)` and `q_hat`
//! carries the coupling with the out-of-block coordinates. The coupling is
//! assembled incrementally from cached products `Hx`, `A_eq x`, `A_ineq x`
//! (never forming A'A globally), so one iteration costs O(nnz) plus the block
//! factorizations. Designated "local" constraint rows skip the augmented
//! Lagrangian and are enforced exactly inside each sub-problem instead.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::blocks::{
    detect_structure, random_partition, BlockPartition, SuperVariableSet, UpdateOrder,
};
use crate::error::Error;
use crate::linalg::{
    cholesky_dense, sparse_ldl, DenseCholesky, SparseLdl, DENSE_BLOCK_LIMIT,
};
use crate::problem::{Lcqp, SparseMatrix};
use crate::Result;

use super::ipm::{solve_dense_qp, IPM_MAX_ITER, IPM_TOL};
use super::{
    compute_q_masked, default_initial_x, residuals_cached, split_active, stacked_constraints,
    Grouping, Mode, Monitor, PartialLagrangian, Residuals, SolveResult, SolverOptions,
};

/// Iterates plus the incrementally maintained matrix-vector products.
pub(crate) struct SweepState {
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub xt: Vec<f64>,
    pub z: Vec<f64>,
    pub ye: Vec<f64>,
    pub yi: Vec<f64>,
    /// H x, A_eq x, A_ineq x for the current x.
    pub hx: Vec<f64>,
    pub aex: Vec<f64>,
    pub aix: Vec<f64>,
}

/// Column-bucketed matrix entries for one block: `(global row, local col,
/// value)` for every entry whose column belongs to the block.
pub(crate) struct BlockData {
    pub id: usize,
    /// Global column indices, sorted ascending.
    pub idx: Vec<usize>,
    pub h: Vec<(usize, usize, f64)>,
    pub ae: Vec<(usize, usize, f64)>,
    pub ai: Vec<(usize, usize, f64)>,
}

/// Local constraint rows of one block sub-problem, with right-hand sides
/// already adjusted by the out-of-block coordinates.
pub(crate) struct LocalCons {
    pub eq_rows: Vec<usize>,
    pub eq_mat: DMatrix<f64>,
    pub eq_rhs: Vec<f64>,
    pub ineq_rows: Vec<usize>,
    pub ineq_mat: DMatrix<f64>,
    pub ineq_rhs: Vec<f64>,
}

impl LocalCons {
    pub fn is_empty(&self) -> bool {
        self.eq_rows.is_empty() && self.ineq_rows.is_empty()
    }
}

/// Cached per-block factorization (valid across iterations when the
/// partition is fixed, since Q depends only on problem data and beta).
pub(crate) enum BlockFactor {
    Dense(DenseCholesky),
    Sparse(SparseLdl),
}

impl BlockFactor {
    pub(crate) fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        match self {
            BlockFactor::Dense(f) => f.solve(rhs),
            BlockFactor::Sparse(f) => f.solve(rhs),
        }
    }
}

/// Shared sweep machinery: owned iterate state plus everything needed to
/// assemble and apply block updates. The mixed-integer driver reuses it with
/// its own block solvers.
pub(crate) struct Sweep<'a> {
    pub problem: &'a Lcqp,
    pub beta: f64,
    pub use_split: bool,
    pub partial: Option<&'a PartialLagrangian>,
    /// Per-row flags: true when the row is dualized into the augmented
    /// Lagrangian (the default), false for sub-problem-local rows.
    pub eq_dualized: Vec<bool>,
    pub ineq_dualized: Vec<bool>,
    pub st: SweepState,
    col_map: Vec<(usize, usize)>,
}

impl<'a> Sweep<'a> {
    pub fn new(
        problem: &'a Lcqp,
        beta: f64,
        partial: Option<&'a PartialLagrangian>,
        x0: Vec<f64>,
        use_split: bool,
    ) -> Sweep<'a> {
        let mut eq_dualized = vec![true; problem.m_eq()];
        let mut ineq_dualized = vec![true; problem.m_ineq()];
        if let Some(pl) = partial {
            for &r in &pl.local_eq {
                eq_dualized[r] = false;
            }
            for &r in &pl.local_ineq {
                ineq_dualized[r] = false;
            }
        }
        let hx = problem.h.matvec(&x0);
        let aex = problem.a_eq.matvec(&x0);
        let aix = problem.a_ineq.matvec(&x0);
        let s: Vec<f64> = problem
            .b_ineq
            .iter()
            .zip(&aix)
            .map(|(&b, &ax)| (b - ax).max(0.0))
            .collect();
        let st = SweepState {
            xt: x0.clone(),
            z: vec![0.0; problem.n()],
            ye: vec![0.0; problem.m_eq()],
            yi: vec![0.0; problem.m_ineq()],
            s,
            hx,
            aex,
            aix,
            x: x0,
        };
        Sweep {
            problem,
            beta,
            use_split,
            partial,
            eq_dualized,
            ineq_dualized,
            st,
            col_map: Vec::new(),
        }
    }

    /// Linear term shared by all blocks of one iteration.
    pub fn compute_q(&self) -> Vec<f64> {
        compute_q_masked(
            self.problem,
            self.beta,
            self.use_split,
            &self.st.s,
            &self.st.xt,
            &self.st.z,
            &self.st.ye,
            &self.st.yi,
            &self.eq_dualized,
            &self.ineq_dualized,
        )
    }

    /// Bucket all matrix entries by the block owning their column. Also
    /// rebuilds the column lookup, so buckets from an earlier partition are
    /// invalidated.
    pub fn build_buckets(&mut self, partition: &BlockPartition) -> Vec<BlockData> {
        let n = self.problem.n();
        self.col_map.clear();
        self.col_map.resize(n, (usize::MAX, usize::MAX));
        let mut out: Vec<BlockData> = partition
            .groups()
            .iter()
            .enumerate()
            .map(|(b, g)| {
                for (l, &i) in g.iter().enumerate() {
                    self.col_map[i] = (b, l);
                }
                BlockData { id: b, idx: g.clone(), h: Vec::new(), ae: Vec::new(), ai: Vec::new() }
            })
            .collect();
        for &(r, c, v) in self.problem.h.entries() {
            let (b, l) = self.col_map[c];
            out[b].h.push((r, l, v));
        }
        for &(r, c, v) in self.problem.a_eq.entries() {
            let (b, l) = self.col_map[c];
            out[b].ae.push((r, l, v));
        }
        for &(r, c, v) in self.problem.a_ineq.entries() {
            let (b, l) = self.col_map[c];
            out[b].ai.push((r, l, v));
        }
        out
    }

    /// Emit every entry of `H[omega,omega] + beta A_omega' A_omega` (without
    /// the split's beta I) into `sink(local_i, local_j, value)`.
    fn for_each_system_entry(&self, bd: &BlockData, sink: &mut impl FnMut(usize, usize, f64)) {
        for &(r, jl, v) in &bd.h {
            let (b, lr) = self.col_map[r];
            if b == bd.id {
                sink(lr, jl, v);
            }
        }
        gram_rows(&bd.ae, &self.eq_dualized, self.beta, sink);
        gram_rows(&bd.ai, &self.ineq_dualized, self.beta, sink);
    }

    /// Coupling vector t = A_omega' (A x) over the dualized rows. The slack
    /// contribution beta A_ineq's lives in q (see `compute_q_masked`), so it
    /// must not be repeated here.
    fn coupling(&self, bd: &BlockData) -> Vec<f64> {
        let mut t = vec![0.0; bd.idx.len()];
        for &(r, jl, v) in &bd.ae {
            if self.eq_dualized[r] {
                t[jl] += v * self.st.aex[r];
            }
        }
        for &(r, jl, v) in &bd.ai {
            if self.ineq_dualized[r] {
                t[jl] += v * self.st.aix[r];
            }
        }
        t
    }

    /// Right-hand side of the block system given the accumulated
    /// `S x_old = (H[omega,omega] + beta A_omega'A_omega) x_old` products.
    fn block_rhs(&self, bd: &BlockData, q: &[f64], sx: &[f64]) -> Vec<f64> {
        let t = self.coupling(bd);
        bd.idx
            .iter()
            .enumerate()
            .map(|(j, &g)| -q[g] - self.st.hx[g] - self.beta * t[j] + sx[j])
            .collect()
    }

    /// Dense block system `(M, rhs)` with the split's beta I included in M.
    pub fn dense_system(&self, bd: &BlockData, q: &[f64]) -> (DMatrix<f64>, Vec<f64>) {
        let d = bd.idx.len();
        let x_old: Vec<f64> = bd.idx.iter().map(|&g| self.st.x[g]).collect();
        let mut m = DMatrix::<f64>::zeros(d, d);
        let mut sx = vec![0.0; d];
        self.for_each_system_entry(bd, &mut |i, j, v| {
            m[(i, j)] += v;
            sx[i] += v * x_old[j];
        });
        let rhs = self.block_rhs(bd, q, &sx);
        if self.use_split {
            for i in 0..d {
                m[(i, i)] += self.beta;
            }
        }
        (m, rhs)
    }

    /// Sparse block system as triplets (large blocks).
    fn sparse_system(&self, bd: &BlockData, q: &[f64]) -> (Vec<(usize, usize, f64)>, Vec<f64>) {
        let d = bd.idx.len();
        let x_old: Vec<f64> = bd.idx.iter().map(|&g| self.st.x[g]).collect();
        let mut trips: Vec<(usize, usize, f64)> = Vec::new();
        let mut sx = vec![0.0; d];
        self.for_each_system_entry(bd, &mut |i, j, v| {
            trips.push((i, j, v));
            sx[i] += v * x_old[j];
        });
        let rhs = self.block_rhs(bd, q, &sx);
        if self.use_split {
            for i in 0..d {
                trips.push((i, i, self.beta));
            }
        }
        (trips, rhs)
    }

    /// Local (non-dualized) constraint rows restricted to this block, with
    /// right-hand sides adjusted by the current out-of-block coordinates.
    pub fn local_constraints(&self, bd: &BlockData) -> LocalCons {
        let d = bd.idx.len();
        let collect = |entries: &[(usize, usize, f64)],
                       dualized: &[bool],
                       prod: &[f64],
                       b: &[f64]|
         -> (Vec<usize>, DMatrix<f64>, Vec<f64>) {
            let mut rows: Vec<usize> = Vec::new();
            let mut coef: Vec<Vec<f64>> = Vec::new();
            let mut rhs: Vec<f64> = Vec::new();
            let mut i = 0;
            while i < entries.len() {
                let r = entries[i].0;
                let mut j = i;
                let mut in_block = 0.0;
                while j < entries.len() && entries[j].0 == r {
                    j += 1;
                }
                if !dualized[r] {
                    let mut row = vec![0.0; d];
                    for &(_, jl, v) in &entries[i..j] {
                        row[jl] = v;
                        in_block += v * self.st.x[bd.idx[jl]];
                    }
                    rows.push(r);
                    coef.push(row);
                    rhs.push(b[r] - prod[r] + in_block);
                }
                i = j;
            }
            let mat = DMatrix::from_fn(rows.len(), d, |i, j| coef[i][j]);
            (rows, mat, rhs)
        };
        let (eq_rows, eq_mat, eq_rhs) =
            collect(&bd.ae, &self.eq_dualized, &self.st.aex, &self.problem.b_eq);
        let (ineq_rows, ineq_mat, ineq_rhs) =
            collect(&bd.ai, &self.ineq_dualized, &self.st.aix, &self.problem.b_ineq);
        LocalCons { eq_rows, eq_mat, eq_rhs, ineq_rows, ineq_mat, ineq_rhs }
    }

    /// Commit new block values and patch the cached products.
    pub fn apply_block(&mut self, bd: &BlockData, x_new: &[f64]) {
        let delta: Vec<f64> = bd
            .idx
            .iter()
            .zip(x_new)
            .map(|(&g, &v)| v - self.st.x[g])
            .collect();
        for (k, &g) in bd.idx.iter().enumerate() {
            self.st.x[g] = x_new[k];
        }
        for &(r, jl, v) in &bd.h {
            self.st.hx[r] += v * delta[jl];
        }
        for &(r, jl, v) in &bd.ae {
            self.st.aex[r] += v * delta[jl];
        }
        for &(r, jl, v) in &bd.ai {
            self.st.aix[r] += v * delta[jl];
        }
    }

    /// Solve one block: plain positive definite solve on the standard path,
    /// or the constrained sub-problem when local rows / local bounds apply.
    /// `cache` (fixed partitions only) holds the reusable factorization.
    pub fn solve_block_continuous(
        &mut self,
        bd: &BlockData,
        q: &[f64],
        cache: Option<&mut Option<BlockFactor>>,
    ) -> Result<()> {
        let lc = self.local_constraints(bd);
        let bounds_local = self.partial.is_some_and(|pl| pl.bounds_local);
        if lc.is_empty() && !bounds_local {
            let d = bd.idx.len();
            let x_new = if let Some(slot) = cache {
                if slot.is_none() {
                    *slot = Some(self.factor_block(bd, q)?.0);
                }
                let rhs = self.system_rhs_only(bd, q);
                slot.as_ref().expect("factor cached above").solve(&rhs)?
            } else {
                let (factor, rhs) = self.factor_block(bd, q)?;
                factor.solve(&rhs)?
            };
            debug_assert_eq!(x_new.len(), d);
            self.apply_block(bd, &x_new);
            return Ok(());
        }
        self.solve_block_constrained(bd, q, lc, bounds_local)
    }

    /// Factor the block system (dense below the size threshold, sparse LDL
    /// above), mapping pivot failures to the per-block assumption violation.
    fn factor_block(&self, bd: &BlockData, q: &[f64]) -> Result<(BlockFactor, Vec<f64>)> {
        let d = bd.idx.len();
        let name_block = |e: Error| match e {
            Error::NotPositiveDefinite { .. } => {
                Error::NotPositiveDefinite { block: Some(bd.id) }
            }
            other => other,
        };
        if d <= DENSE_BLOCK_LIMIT {
            let (m, rhs) = self.dense_system(bd, q);
            let f = cholesky_dense(&m).map_err(name_block)?;
            Ok((BlockFactor::Dense(f), rhs))
        } else {
            let (trips, rhs) = self.sparse_system(bd, q);
            let sp = SparseMatrix::from_triplets(d, d, trips)?;
            let f = sparse_ldl(&sp, true, None).map_err(name_block)?;
            Ok((BlockFactor::Sparse(f), rhs))
        }
    }

    /// Factor the block matrix alone (no right-hand side); used by sweeps
    /// that assemble their own linear terms.
    pub fn factor_block_matrix(&self, bd: &BlockData) -> Result<BlockFactor> {
        let zeros = vec![0.0; self.problem.n()];
        Ok(self.factor_block(bd, &zeros)?.0)
    }

    /// (H[omega,omega] x_omega) for the current x.
    pub fn block_hx_own(&self, bd: &BlockData) -> Vec<f64> {
        let mut out = vec![0.0; bd.idx.len()];
        for &(r, jl, v) in &bd.h {
            let (b, lr) = self.col_map[r];
            if b == bd.id {
                out[lr] += v * self.st.x[bd.idx[jl]];
            }
        }
        out
    }

    /// A_eq[:, omega]' w (length |omega|).
    pub fn block_ae_t(&self, bd: &BlockData, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; bd.idx.len()];
        for &(r, jl, v) in &bd.ae {
            out[jl] += v * w[r];
        }
        out
    }

    /// A_eq[:, omega] x_omega (length m_eq).
    pub fn block_ae_x(&self, bd: &BlockData) -> Vec<f64> {
        let mut out = vec![0.0; self.problem.m_eq()];
        for &(r, jl, v) in &bd.ae {
            out[r] += v * self.st.x[bd.idx[jl]];
        }
        out
    }

    /// Right-hand side without re-assembling the matrix (cached factors).
    fn system_rhs_only(&self, bd: &BlockData, q: &[f64]) -> Vec<f64> {
        let d = bd.idx.len();
        let x_old: Vec<f64> = bd.idx.iter().map(|&g| self.st.x[g]).collect();
        let mut sx = vec![0.0; d];
        self.for_each_system_entry(bd, &mut |i, j, v| {
            sx[i] += v * x_old[j];
        });
        self.block_rhs(bd, q, &sx)
    }

    /// Sub-problem with explicit local rows and/or bounds, solved densely.
    fn solve_block_constrained(
        &mut self,
        bd: &BlockData,
        q: &[f64],
        lc: LocalCons,
        bounds_local: bool,
    ) -> Result<()> {
        let d = bd.idx.len();
        let (m, rhs) = self.dense_system(bd, q);
        let g: Vec<f64> = rhs.iter().map(|&v| -v).collect();

        // Fold finite bounds into <= rows when they are sub-problem-local.
        let mut c_rows: Vec<Vec<f64>> = Vec::new();
        let mut c_rhs: Vec<f64> = Vec::new();
        // (variable local index, +1 upper / -1 lower) per folded bound row.
        let mut bound_tags: Vec<(usize, f64)> = Vec::new();
        for r in 0..lc.ineq_rows.len() {
            c_rows.push((0..d).map(|j| lc.ineq_mat[(r, j)]).collect());
            c_rhs.push(lc.ineq_rhs[r]);
        }
        if bounds_local {
            for (j, &gidx) in bd.idx.iter().enumerate() {
                let (l, u) = (self.problem.lb[gidx], self.problem.ub[gidx]);
                if u.is_finite() {
                    let mut row = vec![0.0; d];
                    row[j] = 1.0;
                    c_rows.push(row);
                    c_rhs.push(u);
                    bound_tags.push((j, 1.0));
                }
                if l.is_finite() {
                    let mut row = vec![0.0; d];
                    row[j] = -1.0;
                    c_rows.push(row);
                    c_rhs.push(-l);
                    bound_tags.push((j, -1.0));
                }
            }
        }
        let mi_local = lc.ineq_rows.len();
        let c_mat = DMatrix::from_fn(c_rows.len(), d, |i, j| c_rows[i][j]);

        let sol = solve_dense_qp(
            &m,
            &g,
            &lc.eq_mat,
            &lc.eq_rhs,
            &c_mat,
            &c_rhs,
            IPM_TOL,
            IPM_MAX_ITER,
        )?;

        // Recover multipliers into the global convention
        // (Hx + c - A'y - z = 0): y = -(sub-problem multiplier).
        for (k, &row) in lc.eq_rows.iter().enumerate() {
            self.st.ye[row] = -sol.y_eq[k];
        }
        for (k, &row) in lc.ineq_rows.iter().enumerate() {
            self.st.yi[row] = -sol.y_ineq[k];
        }
        if bounds_local {
            // z_i = w_lower - w_upper from the folded bound rows.
            let mut znew = vec![0.0; d];
            for (t, &(j, dir)) in bound_tags.iter().enumerate() {
                let w = sol.y_ineq[mi_local + t];
                znew[j] += if dir > 0.0 { -w } else { w };
            }
            for (j, &gidx) in bd.idx.iter().enumerate() {
                self.st.z[gidx] = znew[j];
            }
        }
        self.apply_block(bd, &sol.x);
        Ok(())
    }

    /// End-of-iteration closed forms: refresh the cached products exactly,
    /// update slacks, the split copy, and the multipliers of dualized rows.
    pub fn finish_iteration(&mut self) {
        // Exact refresh caps the roundoff drift of the incremental updates.
        self.st.hx = self.problem.h.matvec(&self.st.x);
        self.st.aex = self.problem.a_eq.matvec(&self.st.x);
        self.st.aix = self.problem.a_ineq.matvec(&self.st.x);

        for r in 0..self.problem.m_ineq() {
            self.st.s[r] = if self.ineq_dualized[r] {
                (self.st.yi[r] / self.beta + self.problem.b_ineq[r] - self.st.aix[r]).max(0.0)
            } else {
                // Local rows carry no augmented term; keep the bookkeeping
                // slack at the one-sided gap so residuals stay meaningful.
                (self.problem.b_ineq[r] - self.st.aix[r]).max(0.0)
            };
        }
        if self.use_split {
            for i in 0..self.problem.n() {
                let xt = (self.st.x[i] - self.st.z[i] / self.beta)
                    .max(self.problem.lb[i])
                    .min(self.problem.ub[i]);
                self.st.xt[i] = xt;
                self.st.z[i] -= self.beta * (self.st.x[i] - xt);
            }
        }
        for r in 0..self.problem.m_eq() {
            if self.eq_dualized[r] {
                self.st.ye[r] -= self.beta * (self.st.aex[r] - self.problem.b_eq[r]);
            }
        }
        for r in 0..self.problem.m_ineq() {
            if self.ineq_dualized[r] {
                self.st.yi[r] -=
                    self.beta * (self.st.aix[r] + self.st.s[r] - self.problem.b_ineq[r]);
            }
        }
    }

    pub fn residuals(&self) -> Residuals {
        residuals_cached(
            self.problem,
            &self.st.x,
            &self.st.s,
            &self.st.xt,
            &self.st.z,
            &self.st.ye,
            &self.st.yi,
            self.use_split,
            &self.st.hx,
            &self.st.aex,
            &self.st.aix,
        )
    }

    pub fn objective(&self) -> f64 {
        let mut val = self.problem.c0;
        for i in 0..self.problem.n() {
            val += (0.5 * self.st.hx[i] + self.problem.c[i]) * self.st.x[i];
        }
        val
    }
}

/// Gram-row emitter: for each dualized row of a bucketed constraint matrix,
/// push `beta * a_i a_j` for every pair of in-block entries. Buckets are
/// grouped by row because the source triplets are sorted row-major.
fn gram_rows(
    entries: &[(usize, usize, f64)],
    dualized: &[bool],
    beta: f64,
    sink: &mut impl FnMut(usize, usize, f64),
) {
    let mut i = 0;
    while i < entries.len() {
        let r = entries[i].0;
        let mut j = i;
        while j < entries.len() && entries[j].0 == r {
            j += 1;
        }
        if dualized[r] {
            for a in i..j {
                for b in i..j {
                    sink(entries[a].1, entries[b].1, beta * entries[a].2 * entries[b].2);
                }
            }
        }
        i = j;
    }
}

/// Fixed near-equal partition in index order, keeping super-variables atomic.
pub(crate) fn fixed_partition(
    n: usize,
    p: usize,
    supers: Option<&SuperVariableSet>,
) -> Result<BlockPartition> {
    match supers {
        None => Ok(BlockPartition::chunked(n, p)),
        Some(sv) => {
            let mut covered = vec![false; n];
            let mut atoms: Vec<Vec<usize>> = Vec::new();
            for g in &sv.supers {
                for &i in g {
                    if i >= n {
                        return Err(Error::InvalidArgument(format!(
                            "super-variable index {i} out of range for n = {n}"
                        )));
                    }
                    covered[i] = true;
                }
                if !g.is_empty() {
                    atoms.push(g.clone());
                }
            }
            atoms.extend((0..n).filter(|&i| !covered[i]).map(|i| vec![i]));
            atoms.sort_by_key(|a| a[0]);
            if p > atoms.len() {
                return Err(Error::InvalidArgument(format!(
                    "cannot form {p} groups from {} atoms",
                    atoms.len()
                )));
            }
            let base = atoms.len() / p;
            let rem = atoms.len() % p;
            let mut groups = Vec::with_capacity(p);
            let mut next = 0;
            for k in 0..p {
                let take = base + usize::from(k < rem);
                let mut g: Vec<usize> =
                    atoms[next..next + take].iter().flatten().copied().collect();
                g.sort_unstable();
                groups.push(g);
                next += take;
            }
            Ok(BlockPartition::new(groups))
        }
    }
}

/// Resolve the grouping option into an optional super-variable set.
pub(crate) fn resolve_grouping(
    problem: &Lcqp,
    grouping: &Grouping,
    p: usize,
) -> Result<Option<SuperVariableSet>> {
    match grouping {
        Grouping::None => Ok(None),
        Grouping::Supplied(sv) => {
            let atoms = sv.atom_count(problem.n());
            if p > atoms {
                return Err(Error::InvalidArgument(format!(
                    "{p} blocks but only {atoms} atoms under the supplied grouping"
                )));
            }
            Ok(Some(sv.clone()))
        }
        Grouping::Auto => {
            let a = stacked_constraints(problem);
            if a.nnz() == 0 {
                return Ok(None);
            }
            let sv = detect_structure(&a, p);
            if sv.is_degenerate() || p > sv.atom_count(problem.n()) {
                Ok(None)
            } else {
                Ok(Some(sv))
            }
        }
    }
}

/// RAC / RP / CYCLIC driver.
pub fn solve_multiblock(problem: &Lcqp, options: &SolverOptions) -> Result<SolveResult> {
    let use_split = split_active(problem, options.partial.as_ref());
    let x0 = options
        .initial_x
        .clone()
        .unwrap_or_else(|| default_initial_x(problem));
    let mut sweep = Sweep::new(problem, options.beta, options.partial.as_ref(), x0, use_split);
    let mut rng = ChaCha12Rng::seed_from_u64(options.seed);
    let supers = resolve_grouping(problem, &options.grouping, options.p)?;

    let mut notes = vec![format!(
        "mode={:?} p={} beta={} split={}",
        options.mode, options.p, options.beta, use_split
    )];
    if let Some(sv) = &supers {
        notes.push(format!(
            "grouping: {} super-variables, {} shared columns",
            sv.supers.len(),
            sv.shared.len()
        ));
    }

    // Fixed-partition modes bucket once and reuse per-block factorizations
    // (the block matrices depend only on problem data and beta).
    let fixed: Option<Vec<BlockData>> = match options.mode {
        Mode::Rp | Mode::Cyclic => {
            let part = fixed_partition(problem.n(), options.p, supers.as_ref())?;
            Some(sweep.build_buckets(&part))
        }
        _ => None,
    };
    let cache_factors = fixed.is_some() && options.partial.is_none();
    let mut factor_cache: Vec<Option<BlockFactor>> = Vec::new();
    if cache_factors {
        factor_cache.resize_with(options.p, || None);
        notes.push("block factors cached across iterations".into());
    }

    let mut monitor = Monitor::new(options.eps, options.max_iter, options.max_time);
    let status;
    let mut iter = 0usize;
    loop {
        let rac_buckets;
        let (buckets, order): (&[BlockData], Vec<usize>) = match options.mode {
            Mode::Rac => {
                let part =
                    random_partition(problem.n(), options.p, &mut rng, supers.as_ref())?;
                rac_buckets = sweep.build_buckets(&part);
                (&rac_buckets, (0..options.p).collect())
            }
            Mode::Rp => (
                fixed.as_deref().expect("fixed partition built for RP"),
                UpdateOrder::random(options.p, &mut rng).0,
            ),
            Mode::Cyclic => (
                fixed.as_deref().expect("fixed partition built for CYCLIC"),
                (0..options.p).collect(),
            ),
            _ => unreachable!("multiblock driver only handles RAC/RP/CYCLIC"),
        };

        let q = sweep.compute_q();
        for &k in &order {
            let cache_slot = if cache_factors { Some(&mut factor_cache[k]) } else { None };
            sweep.solve_block_continuous(&buckets[k], &q, cache_slot)?;
        }
        sweep.finish_iteration();

        let r = sweep.residuals();
        if let Some(st) = monitor.step(iter, &r, sweep.objective(), &sweep.st.x) {
            status = st;
            break;
        }
        iter += 1;
    }

    let objective = sweep.objective();
    let residuals = super::verify_solution(
        problem,
        &sweep.st.x,
        &sweep.st.ye,
        &sweep.st.yi,
        &sweep.st.z,
    );
    Ok(SolveResult {
        x: sweep.st.x,
        s: sweep.st.s,
        y_eq: sweep.st.ye,
        y_ineq: sweep.st.yi,
        z: sweep.st.z,
        objective,
        residuals,
        status,
        iterations: monitor.trace.len(),
        trace: monitor.trace,
        notes,
    })
}

/// One Gauss-Seidel block update in place: solves the block system for the
/// variables in `omega` against the current values of everything else and
/// writes the result into `x`. `block_id` labels the block in error messages.
/// This is the reference (non-incremental) form of the engine's inner step.
#[allow(clippy::too_many_arguments)]
pub fn update_block(
    problem: &Lcqp,
    beta: f64,
    use_split: bool,
    omega: &[usize],
    block_id: usize,
    x: &mut [f64],
    s: &[f64],
    x_tilde: &[f64],
    z: &[f64],
    y_eq: &[f64],
    y_ineq: &[f64],
) -> Result<()> {
    let n = problem.n();
    if x.len() != n || x_tilde.len() != n || z.len() != n {
        return Err(Error::Dimension("x, x_tilde, z must have length n".into()));
    }
    if s.len() != problem.m_ineq() || y_ineq.len() != problem.m_ineq() {
        return Err(Error::Dimension("s, y_ineq must have length m_ineq".into()));
    }
    if y_eq.len() != problem.m_eq() {
        return Err(Error::Dimension("y_eq must have length m_eq".into()));
    }
    let mut seen = vec![false; n];
    for &i in omega {
        if i >= n || seen[i] {
            return Err(Error::InvalidArgument(format!(
                "block contains out-of-range or repeated index {i}"
            )));
        }
        seen[i] = true;
    }
    if omega.is_empty() {
        return Ok(());
    }

    let mut sweep = Sweep::new(problem, beta, None, x.to_vec(), use_split);
    sweep.st.s = s.to_vec();
    sweep.st.xt = x_tilde.to_vec();
    sweep.st.z = z.to_vec();
    sweep.st.ye = y_eq.to_vec();
    sweep.st.yi = y_ineq.to_vec();

    let mut groups = vec![omega.to_vec()];
    let rest: Vec<usize> = (0..n).filter(|i| !seen[*i]).collect();
    if !rest.is_empty() {
        groups.push(rest);
    }
    let partition = BlockPartition::new(groups);
    let buckets = sweep.build_buckets(&partition);
    let q = sweep.compute_q();
    sweep
        .solve_block_continuous(&buckets[0], &q, None)
        .map_err(|e| match e {
            Error::NotPositiveDefinite { .. } => {
                Error::NotPositiveDefinite { block: Some(block_id) }
            }
            other => other,
        })?;
    x.copy_from_slice(&sweep.st.x);
    Ok(())
}

//! Solve-perturb-resolve driver for binary and mixed-binary quadratic
//! programs: random-assembly sweeps in which every pure-binary block is
//! solved exactly (enumeration for small blocks, depth-first
//! branch-and-bound for medium ones), a best-feasible-solution tracker,
//! and structured perturbation restarts from the incumbent.
//!
//! The sweeps reuse the multi-block machinery with the split variable
//! disabled: binary coordinates take their bounds from the {0,1} domain of
//! the exact sub-solver, and finite bounds of continuous coordinates are
//! folded into their block sub-problems.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::admm::multiblock::{resolve_grouping, BlockData, Sweep};
use crate::admm::{
    default_initial_x, residuals, PartialLagrangian, SolveResult, SolverOptions, Status,
    TracePoint,
};
use crate::blocks::{BlockPartition, SuperVariableSet};
use crate::error::Error;
use crate::problem::{Lcqp, VarKind};
use crate::Result;

/// Pure enumeration handles binary blocks up to this many variables.
pub const BINARY_ENUM_LIMIT: usize = 16;
/// Branch-and-bound extends the exact block range up to this many variables.
pub const BINARY_BNB_LIMIT: usize = 30;
/// Absolute tolerance for a local constraint row to count as satisfied by a
/// candidate assignment.
const LOCAL_ROW_TOL: f64 = 1e-7;
/// A new incumbent must beat the old objective by more than this.
const IMPROVE_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Options and results
// ---------------------------------------------------------------------------

/// How a perturbation round rewrites the coordinates it touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbKind {
    /// Redraw each chosen binary coordinate uniformly from {0, 1}.
    Reassign,
    /// Negate each chosen binary coordinate (x becomes 1 - x).
    BitFlip,
    /// Negate an equal number of ones and zeros, preserving the coordinate
    /// sum e'x.
    SwapBalanced,
    /// Rewrite whole super-variables: a one-hot group moves its 1 to a
    /// different position (staying one-hot), any other group has a random
    /// subset of its coordinates negated.
    QapSuperSwap,
}

/// Perturbation and termination controls for [`solve_mip`].
#[derive(Debug, Clone)]
pub struct MipOptions {
    /// Mean of the truncated exponential that draws the perturbation size.
    /// Defaults to 0.4 times the number of perturbable atoms (binary
    /// variables, or super-variables when a grouping is active).
    pub lambda: Option<f64>,
    /// Smallest perturbation size. Default 2.
    pub np_min: usize,
    /// Largest perturbation size. Defaults to the number of perturbable
    /// atoms.
    pub np_max: Option<usize>,
    /// Feasible sweeps without improvement before a perturbation restart.
    /// Defaults to min(2, ceil(0.005 n)), clamped to at least 1. The min
    /// looks inverted (it is 2 for every n >= 400) but is kept as the
    /// documented formula; pass an explicit value to override it.
    pub n_trial: Option<usize>,
    /// Largest constraint violation a point may have and still count as
    /// feasible.
    pub feas_eps: f64,
    /// Wall-clock limit; falls back to the solver options' limit when unset.
    pub max_time: Option<Duration>,
    /// Stop after this many consecutive perturbation rounds produce no new
    /// incumbent. Unlimited when unset (the sweep budget still applies).
    pub max_no_improve: Option<usize>,
    /// Stop as soon as the incumbent objective reaches this value.
    pub target: Option<f64>,
    pub perturb: PerturbKind,
    /// Restrict each dualized equality row's in-block residual to {0, 1}
    /// during binary block solves (the balanced-partition sub-problem form:
    /// an implied binary slack absorbs one unit of residual). Falls back to
    /// the plain penalized solve when no assignment attains the window.
    pub cardinality_slack: bool,
}

impl Default for MipOptions {
    fn default() -> Self {
        MipOptions {
            lambda: None,
            np_min: 2,
            np_max: None,
            n_trial: None,
            feas_eps: 1e-6,
            max_time: None,
            max_no_improve: None,
            target: None,
            perturb: PerturbKind::Reassign,
            cardinality_slack: false,
        }
    }
}

impl MipOptions {
    pub fn validate(&self, problem: &Lcqp) -> Result<()> {
        if let Some(l) = self.lambda {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "perturbation lambda must be positive and finite, got {}",
                    l
                )));
            }
        }
        if self.np_min == 0 {
            return Err(Error::InvalidArgument(
                "np_min must be at least 1".into(),
            ));
        }
        if let Some(hi) = self.np_max {
            if hi < self.np_min || hi > problem.n() {
                return Err(Error::InvalidArgument(format!(
                    "np_max = {} outside [np_min = {}, n = {}]",
                    hi,
                    self.np_min,
                    problem.n()
                )));
            }
        }
        if self.n_trial == Some(0) {
            return Err(Error::InvalidArgument(
                "n_trial must be at least 1".into(),
            ));
        }
        if !(self.feas_eps >= 0.0) || !self.feas_eps.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "feasibility eps must be finite and non-negative, got {}",
                self.feas_eps
            )));
        }
        if let Some(t) = self.target {
            if !t.is_finite() {
                return Err(Error::InvalidArgument("target objective must be finite".into()));
            }
        }
        let n_binary = problem
            .kinds
            .iter()
            .filter(|k| **k == VarKind::Binary)
            .count();
        if n_binary == 0 {
            return Err(Error::InvalidArgument(
                "no binary variables; use the continuous solver".into(),
            ));
        }
        if problem.kinds.iter().any(|k| *k == VarKind::Integer) {
            return Err(Error::Unsupported(
                "general integer variables are not supported; only binary and continuous".into(),
            ));
        }
        Ok(())
    }

    fn effective_n_trial(&self, n: usize) -> usize {
        self.n_trial
            .unwrap_or_else(|| ((0.005 * n as f64).min(2.0).ceil() as usize).max(1))
    }
}

/// Incumbent: the best feasible point seen so far. Replaced only by a
/// feasible point with a strictly better objective.
#[derive(Debug, Clone)]
pub struct BestSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub feasible: bool,
    /// Wall-clock time from solve start until this incumbent appeared.
    pub found_at: Duration,
    /// Sweep (1-based) at which this incumbent appeared.
    pub sweep: usize,
}

/// One entry of the improvement log: when a new incumbent was accepted.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ImprovementEvent {
    pub sweep: usize,
    pub seconds: f64,
    pub objective: f64,
}

#[derive(Debug)]
pub struct MipResult {
    /// Final point (the incumbent when one exists, otherwise the
    /// least-violating iterate), with multipliers left at zero: the
    /// restarted sweeps do not produce a meaningful dual certificate.
    pub result: SolveResult,
    /// Best feasible point, if any sweep produced one.
    pub best: Option<BestSolution>,
    pub events: Vec<ImprovementEvent>,
    pub perturbations: usize,
}

// ---------------------------------------------------------------------------
// Feasibility and gap
// ---------------------------------------------------------------------------

/// Largest constraint violation of `x`: equality rows in the infinity norm,
/// the one-sided part of inequality rows (A x <= b), and bound violations.
pub fn max_violation(problem: &Lcqp, x: &[f64]) -> f64 {
    assert_eq!(x.len(), problem.n(), "point length");
    let mut worst: f64 = 0.0;
    for (r, &ax) in problem.a_eq.matvec(x).iter().enumerate() {
        worst = worst.max((ax - problem.b_eq[r]).abs());
    }
    for (r, &ax) in problem.a_ineq.matvec(x).iter().enumerate() {
        worst = worst.max(ax - problem.b_ineq[r]);
    }
    for i in 0..problem.n() {
        worst = worst.max(problem.lb[i] - x[i]);
        worst = worst.max(x[i] - problem.ub[i]);
    }
    worst.max(0.0)
}

/// Whether `x` satisfies every constraint to within `eps`.
pub fn feasibility(problem: &Lcqp, x: &[f64], eps: f64) -> bool {
    max_violation(problem, x) <= eps
}

/// Relative objective gap (found - reference) / (1 + |reference|), negated
/// for maximization so a worse-than-reference answer is positive either way.
pub fn gap(found: f64, reference: f64, maximize: bool) -> f64 {
    let g = (found - reference) / (1.0 + reference.abs());
    if maximize {
        -g
    } else {
        g
    }
}

// ---------------------------------------------------------------------------
// Perturbation
// ---------------------------------------------------------------------------

/// Draw the perturbation size from an exponential with mean `lambda`,
/// truncated to [lo, hi], by inverting the truncated CDF.
fn sample_np(rng: &mut impl Rng, lambda: f64, lo: usize, hi: usize) -> usize {
    if hi <= lo {
        return lo;
    }
    let u: f64 = rng.random();
    let at_lo = (-(lo as f64) / lambda).exp();
    let at_hi = (-(hi as f64) / lambda).exp();
    let t = -lambda * (at_lo * (1.0 - u) + at_hi * u).ln();
    (t.round() as usize).clamp(lo, hi)
}

/// Perturb a copy of the incumbent: `np` coordinates (or super-variables for
/// [`PerturbKind::QapSuperSwap`]) are rewritten according to `kind`. Counts
/// larger than the available atoms are capped; `SwapBalanced` touches the
/// largest balanced pair count not exceeding `np`.
pub fn perturb(
    x_best: &[f64],
    problem: &Lcqp,
    kind: PerturbKind,
    np: usize,
    supers: Option<&SuperVariableSet>,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    let mut x = x_best.to_vec();
    let binary: Vec<usize> = (0..problem.n())
        .filter(|&i| problem.kinds[i] == VarKind::Binary)
        .collect();
    match kind {
        PerturbKind::Reassign => {
            for k in rand::seq::index::sample(rng, binary.len(), np.min(binary.len())) {
                x[binary[k]] = rng.random_range(0..=1) as f64;
            }
        }
        PerturbKind::BitFlip => {
            let sel: Vec<usize> = rand::seq::index::sample(rng, binary.len(), np.min(binary.len()))
                .iter()
                .map(|k| binary[k])
                .collect();
            bit_flip_at(&mut x, &sel);
        }
        PerturbKind::SwapBalanced => {
            let ones: Vec<usize> = binary.iter().copied().filter(|&i| x[i] > 0.5).collect();
            let zeros: Vec<usize> = binary.iter().copied().filter(|&i| x[i] <= 0.5).collect();
            let k = (np / 2).min(ones.len()).min(zeros.len());
            let before: f64 = binary.iter().map(|&i| x[i]).sum();
            for j in rand::seq::index::sample(rng, ones.len(), k) {
                x[ones[j]] = 0.0;
            }
            for j in rand::seq::index::sample(rng, zeros.len(), k) {
                x[zeros[j]] = 1.0;
            }
            let after: f64 = binary.iter().map(|&i| x[i]).sum();
            debug_assert_eq!(before, after, "balanced swap must preserve e'x");
        }
        PerturbKind::QapSuperSwap => {
            let sv = supers.ok_or_else(|| {
                Error::InvalidArgument(
                    "qap_super_swap needs a super-variable grouping".into(),
                )
            })?;
            let k = np.min(sv.supers.len());
            for gi in rand::seq::index::sample(rng, sv.supers.len(), k) {
                let g = &sv.supers[gi];
                super_swap(&mut x, g, rng);
            }
        }
    }
    Ok(x)
}

/// Negate the listed coordinates in place.
fn bit_flip_at(x: &mut [f64], indices: &[usize]) {
    for &i in indices {
        x[i] = 1.0 - x[i];
    }
}

/// Rewrite one super-variable: a one-hot group moves its 1 to a different
/// position (no-op for singleton groups), any other group has a uniformly
/// sized random subset negated.
fn super_swap(x: &mut [f64], group: &[usize], rng: &mut impl Rng) {
    let ones: Vec<usize> = group.iter().copied().filter(|&i| x[i] > 0.5).collect();
    if ones.len() == 1 {
        if group.len() > 1 {
            let from = ones[0];
            let others: Vec<usize> = group.iter().copied().filter(|&i| i != from).collect();
            let to = others[rng.random_range(0..others.len())];
            x[from] = 0.0;
            x[to] = 1.0;
        }
        debug_assert_eq!(
            group.iter().filter(|&&i| x[i] > 0.5).count(),
            1,
            "one-hot group must stay one-hot"
        );
    } else {
        let m = rng.random_range(1..=group.len());
        let sel: Vec<usize> = rand::seq::index::sample(rng, group.len(), m)
            .iter()
            .map(|j| group[j])
            .collect();
        bit_flip_at(x, &sel);
    }
}

// ---------------------------------------------------------------------------
// Exact binary sub-solver
// ---------------------------------------------------------------------------

/// Local constraints of one binary block: equality rows `E x = d`, one-sided
/// rows `C x <= f`, and per-variable bounds intersected with {0, 1}.
#[derive(Debug, Clone)]
pub struct BinaryBlockCons {
    pub eq_mat: DMatrix<f64>,
    pub eq_rhs: Vec<f64>,
    pub ineq_mat: DMatrix<f64>,
    pub ineq_rhs: Vec<f64>,
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
}

impl BinaryBlockCons {
    /// No rows, full {0, 1} domain.
    pub fn free(d: usize) -> Self {
        BinaryBlockCons {
            eq_mat: DMatrix::zeros(0, d),
            eq_rhs: Vec::new(),
            ineq_mat: DMatrix::zeros(0, d),
            ineq_rhs: Vec::new(),
            lb: vec![0.0; d],
            ub: vec![1.0; d],
        }
    }

    fn check_dims(&self, d: usize) -> Result<()> {
        let row_ok = |m: &DMatrix<f64>, rhs: &[f64]| m.nrows() == rhs.len() && (m.nrows() == 0 || m.ncols() == d);
        if !row_ok(&self.eq_mat, &self.eq_rhs)
            || !row_ok(&self.ineq_mat, &self.ineq_rhs)
            || self.lb.len() != d
            || self.ub.len() != d
        {
            return Err(Error::Dimension(format!(
                "local constraints do not match a block of {} variables",
                d
            )));
        }
        Ok(())
    }

    fn satisfied_by(&self, x: &[f64]) -> bool {
        for r in 0..self.eq_rhs.len() {
            let ax: f64 = (0..x.len()).map(|j| self.eq_mat[(r, j)] * x[j]).sum();
            if (ax - self.eq_rhs[r]).abs() > LOCAL_ROW_TOL {
                return false;
            }
        }
        for r in 0..self.ineq_rhs.len() {
            let ax: f64 = (0..x.len()).map(|j| self.ineq_mat[(r, j)] * x[j]).sum();
            if ax - self.ineq_rhs[r] > LOCAL_ROW_TOL {
                return false;
            }
        }
        true
    }
}

/// Minimize 1/2 x'Qx + lin'x over {0,1}^d intersected with the local
/// constraints. Exact: enumeration up to [`BINARY_ENUM_LIMIT`] variables,
/// depth-first branch-and-bound up to [`BINARY_BNB_LIMIT`]. Ties are broken
/// toward the lexicographically smallest assignment. Errors when the block
/// is larger than the exact range or no assignment is feasible.
pub fn exact_binary_subsolve(
    q: &DMatrix<f64>,
    lin: &[f64],
    cons: &BinaryBlockCons,
) -> Result<Vec<f64>> {
    best_binary_assignment(q, lin, cons)?
        .map(|(_, x)| x)
        .ok_or_else(|| {
            Error::InvalidArgument(
                "no binary assignment satisfies the block's local constraints".into(),
            )
        })
}

/// Exact minimizer and value, or None when no assignment is feasible.
fn best_binary_assignment(
    q: &DMatrix<f64>,
    lin: &[f64],
    cons: &BinaryBlockCons,
) -> Result<Option<(f64, Vec<f64>)>> {
    let d = lin.len();
    if q.nrows() != d || q.ncols() != d {
        return Err(Error::Dimension(format!(
            "{}x{} quadratic for a block of {} variables",
            q.nrows(),
            q.ncols(),
            d
        )));
    }
    cons.check_dims(d)?;
    if d == 0 {
        return Ok(Some((0.0, Vec::new())));
    }
    if d > BINARY_BNB_LIMIT {
        return Err(Error::CapExceeded(format!(
            "block of {} binary variables exceeds the exact limit {}; raise the block count so blocks stay within it",
            d, BINARY_BNB_LIMIT
        )));
    }
    // Values each variable may take after intersecting {0,1} with its bounds.
    let mut allowed = Vec::with_capacity(d);
    for i in 0..d {
        let zero_ok = cons.lb[i] <= 1e-9 && cons.ub[i] >= -1e-9;
        let one_ok = cons.lb[i] <= 1.0 + 1e-9 && cons.ub[i] >= 1.0 - 1e-9;
        if !zero_ok && !one_ok {
            return Err(Error::InvalidArgument(format!(
                "bounds [{}, {}] leave variable {} with no binary value",
                cons.lb[i], cons.ub[i], i
            )));
        }
        allowed.push((zero_ok, one_ok));
    }
    if d <= BINARY_ENUM_LIMIT {
        Ok(enumerate_assignments(q, lin, cons, &allowed))
    } else {
        Ok(branch_and_bound(q, lin, cons, &allowed))
    }
}

/// 1/2 x'Qx + lin'x for a 0/1 vector.
fn half_quad(q: &DMatrix<f64>, lin: &[f64], x: &[f64]) -> f64 {
    let mut val = 0.0;
    for i in 0..x.len() {
        if x[i] == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for j in 0..x.len() {
            if x[j] != 0.0 {
                row += q[(i, j)];
            }
        }
        val += lin[i] + 0.5 * row;
    }
    val
}

/// Walk all masks in lexicographic order of (x_0, ..., x_{d-1}); the strict
/// comparison keeps the first (lexicographically smallest) among ties.
fn enumerate_assignments(
    q: &DMatrix<f64>,
    lin: &[f64],
    cons: &BinaryBlockCons,
    allowed: &[(bool, bool)],
) -> Option<(f64, Vec<f64>)> {
    let d = lin.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut x = vec![0.0; d];
    'mask: for mask in 0..(1u64 << d) {
        for i in 0..d {
            let one = (mask >> (d - 1 - i)) & 1 == 1;
            if (one && !allowed[i].1) || (!one && !allowed[i].0) {
                continue 'mask;
            }
            x[i] = if one { 1.0 } else { 0.0 };
        }
        if !cons.satisfied_by(&x) {
            continue;
        }
        let val = half_quad(q, lin, &x);
        if best.as_ref().is_none_or(|(bv, _)| val < *bv) {
            best = Some((val, x.clone()));
        }
    }
    best
}

/// Depth-first search over (x_0, ..., x_{d-1}) with the zero branch first,
/// so the first leaf among ties is the lexicographically smallest. The node
/// bound decomposes the symmetrized objective into exact fixed terms plus
/// min(0, .) contributions of free diagonals and free pairs; constraint rows
/// prune through interval arithmetic on their free coordinates.
fn branch_and_bound(
    q: &DMatrix<f64>,
    lin: &[f64],
    cons: &BinaryBlockCons,
    allowed: &[(bool, bool)],
) -> Option<(f64, Vec<f64>)> {
    let d = lin.len();
    let qs = (q + q.transpose()) * 0.5;
    // pair_min[k] = sum over free pairs k <= i < j of min(0, qs_ij).
    let mut pair_min = vec![0.0; d + 1];
    for k in (0..d).rev() {
        let mut row = 0.0;
        for j in k + 1..d {
            row += qs[(k, j)].min(0.0);
        }
        pair_min[k] = pair_min[k + 1] + row;
    }
    let suffix = |mat: &DMatrix<f64>, pick: fn(f64) -> f64| -> Vec<Vec<f64>> {
        (0..mat.nrows())
            .map(|r| {
                let mut s = vec![0.0; d + 1];
                for k in (0..d).rev() {
                    s[k] = s[k + 1] + pick(mat[(r, k)]);
                }
                s
            })
            .collect()
    };
    let lo = |v: f64| v.min(0.0);
    let hi = |v: f64| v.max(0.0);
    let mut dfs = Dfs {
        d,
        qs: &qs,
        cons,
        allowed,
        pair_min,
        eq_lo: suffix(&cons.eq_mat, lo),
        eq_hi: suffix(&cons.eq_mat, hi),
        iq_lo: suffix(&cons.ineq_mat, lo),
        lin_cur: lin.to_vec(),
        eq_fix: vec![0.0; cons.eq_rhs.len()],
        iq_fix: vec![0.0; cons.ineq_rhs.len()],
        x: vec![0.0; d],
        best: None,
    };
    dfs.walk(0, 0.0);
    dfs.best
}

struct Dfs<'a> {
    d: usize,
    qs: &'a DMatrix<f64>,
    cons: &'a BinaryBlockCons,
    allowed: &'a [(bool, bool)],
    pair_min: Vec<f64>,
    eq_lo: Vec<Vec<f64>>,
    eq_hi: Vec<Vec<f64>>,
    iq_lo: Vec<Vec<f64>>,
    /// Linear coefficient of each still-free variable given the fixed prefix.
    lin_cur: Vec<f64>,
    /// Fixed-prefix partial sums of each constraint row.
    eq_fix: Vec<f64>,
    iq_fix: Vec<f64>,
    x: Vec<f64>,
    best: Option<(f64, Vec<f64>)>,
}

impl Dfs<'_> {
    fn walk(&mut self, k: usize, fixed_obj: f64) {
        if k == self.d {
            for (r, &f) in self.eq_fix.iter().enumerate() {
                if (f - self.cons.eq_rhs[r]).abs() > LOCAL_ROW_TOL {
                    return;
                }
            }
            for (r, &f) in self.iq_fix.iter().enumerate() {
                if f - self.cons.ineq_rhs[r] > LOCAL_ROW_TOL {
                    return;
                }
            }
            if self.best.as_ref().is_none_or(|(bv, _)| fixed_obj < *bv) {
                self.best = Some((fixed_obj, self.x.clone()));
            }
            return;
        }
        // Objective bound: pruning on >= keeps the earlier (lexicographically
        // smaller) assignment whenever a later branch could only tie.
        let mut bound = fixed_obj + self.pair_min[k];
        for i in k..self.d {
            bound += (0.5 * self.qs[(i, i)] + self.lin_cur[i]).min(0.0);
        }
        if self.best.as_ref().is_some_and(|(bv, _)| bound >= *bv) {
            return;
        }
        // Constraint reachability over the free suffix.
        for r in 0..self.cons.eq_rhs.len() {
            let reach_lo = self.eq_fix[r] + self.eq_lo[r][k];
            let reach_hi = self.eq_fix[r] + self.eq_hi[r][k];
            if reach_lo > self.cons.eq_rhs[r] + LOCAL_ROW_TOL
                || reach_hi < self.cons.eq_rhs[r] - LOCAL_ROW_TOL
            {
                return;
            }
        }
        for r in 0..self.cons.ineq_rhs.len() {
            if self.iq_fix[r] + self.iq_lo[r][k] > self.cons.ineq_rhs[r] + LOCAL_ROW_TOL {
                return;
            }
        }
        for v in [0.0, 1.0] {
            if (v == 0.0 && !self.allowed[k].0) || (v == 1.0 && !self.allowed[k].1) {
                continue;
            }
            let delta = v * (self.lin_cur[k] + 0.5 * self.qs[(k, k)]);
            self.x[k] = v;
            if v == 1.0 {
                for i in k + 1..self.d {
                    self.lin_cur[i] += self.qs[(i, k)];
                }
                for r in 0..self.eq_fix.len() {
                    self.eq_fix[r] += self.cons.eq_mat[(r, k)];
                }
                for r in 0..self.iq_fix.len() {
                    self.iq_fix[r] += self.cons.ineq_mat[(r, k)];
                }
            }
            self.walk(k + 1, fixed_obj + delta);
            if v == 1.0 {
                for i in k + 1..self.d {
                    self.lin_cur[i] -= self.qs[(i, k)];
                }
                for r in 0..self.eq_fix.len() {
                    self.eq_fix[r] -= self.cons.eq_mat[(r, k)];
                }
                for r in 0..self.iq_fix.len() {
                    self.iq_fix[r] -= self.cons.ineq_mat[(r, k)];
                }
            }
        }
        self.x[k] = 0.0;
    }
}

// ---------------------------------------------------------------------------
// Kind-aware partitioning
// ---------------------------------------------------------------------------

/// Atoms (super-variables plus uncovered singletons) separated by variable
/// kind, so sampled blocks never mix exact and continuous solves.
struct KindAtoms {
    binary: Vec<Vec<usize>>,
    continuous: Vec<Vec<usize>>,
}

fn split_atoms(problem: &Lcqp, supers: Option<&SuperVariableSet>) -> Result<KindAtoms> {
    let n = problem.n();
    let mut atoms: Vec<Vec<usize>> = Vec::new();
    match supers {
        None => atoms.extend((0..n).map(|i| vec![i])),
        Some(sv) => {
            let mut covered = vec![false; n];
            for g in &sv.supers {
                for &i in g {
                    if i >= n {
                        return Err(Error::InvalidArgument(format!(
                            "super-variable index {} out of range for n = {}",
                            i, n
                        )));
                    }
                    covered[i] = true;
                }
                if !g.is_empty() {
                    atoms.push(g.clone());
                }
            }
            atoms.extend((0..n).filter(|&i| !covered[i]).map(|i| vec![i]));
        }
    }
    let mut out = KindAtoms { binary: Vec::new(), continuous: Vec::new() };
    for atom in atoms {
        let bin = atom.iter().filter(|&&i| problem.kinds[i] == VarKind::Binary).count();
        if bin == atom.len() {
            out.binary.push(atom);
        } else if bin == 0 {
            out.continuous.push(atom);
        } else {
            return Err(Error::Unsupported(
                "a super-variable mixes binary and continuous coordinates".into(),
            ));
        }
    }
    Ok(out)
}

/// Fresh random partition with blocks assembled within one variable kind:
/// block counts are split in proportion to the variable counts, atoms are
/// shuffled within their kind and chunked. Returns the partition and a
/// per-block flag marking the exact (binary) blocks.
fn draw_partition(
    atoms: &KindAtoms,
    p: usize,
    rng: &mut impl Rng,
) -> (BlockPartition, Vec<bool>) {
    let nb: usize = atoms.binary.iter().map(Vec::len).sum();
    let nc: usize = atoms.continuous.iter().map(Vec::len).sum();
    let p_eff = p.min(atoms.binary.len() + atoms.continuous.len()).max(1);
    let (p_bin, p_cont) = if nc == 0 {
        (p_eff.min(atoms.binary.len()), 0)
    } else if nb == 0 {
        (0, p_eff.min(atoms.continuous.len()))
    } else {
        let share = (p_eff as f64 * nb as f64 / (nb + nc) as f64).round() as usize;
        let pb = share.clamp(1, p_eff - 1).min(atoms.binary.len());
        (pb, (p_eff - pb).min(atoms.continuous.len()))
    };
    let chunk = |src: &[Vec<usize>], k: usize, rng: &mut dyn RngCore| -> Vec<Vec<usize>> {
        if k == 0 {
            return Vec::new();
        }
        let mut order: Vec<usize> = (0..src.len()).collect();
        order.shuffle(rng);
        let base = src.len() / k;
        let rem = src.len() % k;
        let mut out = Vec::with_capacity(k);
        let mut next = 0;
        for b in 0..k {
            let size = base + usize::from(b < rem);
            let mut g = Vec::new();
            for &a in &order[next..next + size] {
                g.extend_from_slice(&src[a]);
            }
            out.push(g);
            next += size;
        }
        out
    };
    let mut groups = chunk(&atoms.binary, p_bin, rng);
    let mut flags = vec![true; groups.len()];
    let cont = chunk(&atoms.continuous, p_cont, rng);
    flags.extend(std::iter::repeat_n(false, cont.len()));
    groups.extend(cont);
    (BlockPartition::new(groups), flags)
}

// ---------------------------------------------------------------------------
// Binary block solve
// ---------------------------------------------------------------------------

/// The dualized equality rows touching this block, as a residual window:
/// rows restricting each in-block residual a'x - b_tilde to [0, 1], which is
/// the balanced-partition sub-problem form with its implied binary slack.
fn residual_window_rows(sweep: &Sweep, bd: &BlockData) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
    let d = bd.idx.len();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let entries = &bd.ae;
    let mut i = 0;
    while i < entries.len() {
        let r = entries[i].0;
        let mut j = i;
        while j < entries.len() && entries[j].0 == r {
            j += 1;
        }
        if sweep.eq_dualized[r] {
            let mut coef = vec![0.0; d];
            let mut in_block = 0.0;
            for &(_, jl, v) in &entries[i..j] {
                coef[jl] = v;
                in_block += v * sweep.st.x[bd.idx[jl]];
            }
            let b_tilde = sweep.problem.b_eq[r] - sweep.st.aex[r] + in_block;
            // a'x <= b_tilde + 1 and -a'x <= -b_tilde.
            rows.push(coef.clone());
            rhs.push(b_tilde + 1.0);
            rows.push(coef.iter().map(|&v| -v).collect());
            rhs.push(-b_tilde);
        }
        i = j;
    }
    if rows.is_empty() {
        None
    } else {
        Some((rows, rhs))
    }
}

/// Solve one pure-binary block exactly and commit it. The quadratic model is
/// the same augmented-Lagrangian restriction the continuous path factors;
/// with the residual window active, dualized equality rows are additionally
/// pinned to at most one unit of in-block residual (falling back to the
/// plain penalized solve when that window is empty).
fn solve_binary_block(
    sweep: &mut Sweep,
    bd: &BlockData,
    q: &[f64],
    cardinality_slack: bool,
) -> Result<()> {
    let (m, rhs) = sweep.dense_system(bd, q);
    let lin: Vec<f64> = rhs.iter().map(|&v| -v).collect();
    let lc = sweep.local_constraints(bd);
    let d = bd.idx.len();
    let cons = BinaryBlockCons {
        eq_mat: lc.eq_mat,
        eq_rhs: lc.eq_rhs,
        ineq_mat: lc.ineq_mat,
        ineq_rhs: lc.ineq_rhs,
        lb: bd.idx.iter().map(|&i| sweep.problem.lb[i]).collect(),
        ub: bd.idx.iter().map(|&i| sweep.problem.ub[i]).collect(),
    };
    if cardinality_slack {
        if let Some((extra, extra_rhs)) = residual_window_rows(sweep, bd) {
            let base = cons.ineq_rhs.len();
            let mut windowed = cons.clone();
            windowed.ineq_mat = DMatrix::from_fn(base + extra.len(), d, |r, c| {
                if r < base {
                    cons.ineq_mat[(r, c)]
                } else {
                    extra[r - base][c]
                }
            });
            windowed.ineq_rhs.extend_from_slice(&extra_rhs);
            if let Some((_, x_new)) = best_binary_assignment(&m, &lin, &windowed)? {
                sweep.apply_block(bd, &x_new);
                return Ok(());
            }
        }
    }
    let x_new = exact_binary_subsolve(&m, &lin, &cons)?;
    sweep.apply_block(bd, &x_new);
    Ok(())
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

/// Solve-perturb-resolve: random-assembly sweeps with exact binary blocks,
/// tracking the best feasible point. After `n_trial` feasible sweeps without
/// improvement the incumbent is perturbed and the sweeps restart from it
/// with fresh multipliers. Runs until the sweep budget (`options.max_iter`),
/// the time limit, the no-improvement limit, or the target objective is hit.
pub fn solve_mip(
    problem: &Lcqp,
    options: &SolverOptions,
    mip: &MipOptions,
) -> Result<MipResult> {
    options.validate(problem)?;
    mip.validate(problem)?;
    let n = problem.n();
    let supers = resolve_grouping(problem, &options.grouping, options.p)?;
    let atoms = split_atoms(problem, supers.as_ref())?;

    // Continuous-variable bounds have to live inside the block sub-problems
    // because the sweeps run without the split variable.
    let fold_bounds = (0..n).any(|i| {
        problem.kinds[i] == VarKind::Continuous
            && (problem.lb[i].is_finite() || problem.ub[i].is_finite())
    });
    let partial: Option<PartialLagrangian> = match (&options.partial, fold_bounds) {
        (Some(pl), fold) => {
            let mut pl = pl.clone();
            pl.bounds_local = pl.bounds_local || fold;
            Some(pl)
        }
        (None, true) => Some(PartialLagrangian {
            local_eq: Vec::new(),
            local_ineq: Vec::new(),
            bounds_local: true,
        }),
        (None, false) => None,
    };

    // Snap binary coordinates of the starting point onto their domain.
    let mut x0 = options
        .initial_x
        .clone()
        .unwrap_or_else(|| default_initial_x(problem));
    for i in 0..n {
        if problem.kinds[i] == VarKind::Binary {
            x0[i] = if x0[i] >= 0.5 { 1.0 } else { 0.0 };
        }
    }

    let bin_atoms = atoms.binary.len();
    let lambda = mip.lambda.unwrap_or(0.4 * bin_atoms as f64).max(1e-9);
    let np_lo = mip.np_min.min(bin_atoms.max(1));
    let np_hi = mip
        .np_max
        .unwrap_or(bin_atoms)
        .clamp(np_lo, bin_atoms.max(1));
    let n_trial = mip.effective_n_trial(n);
    let max_time = mip.max_time.or(options.max_time);

    let mut rng = ChaCha12Rng::seed_from_u64(options.seed);
    let mut sweep = Sweep::new(problem, options.beta, partial.as_ref(), x0.clone(), false);
    let start = Instant::now();

    let mut best: Option<BestSolution> = None;
    let mut fallback = (max_violation(problem, &x0), x0);
    let mut events: Vec<ImprovementEvent> = Vec::new();
    let mut trace: Vec<TracePoint> = Vec::new();
    let mut notes: Vec<String> = vec![format!(
        "mip: {} binary and {} continuous atoms, n_trial = {}, perturb = {:?}",
        bin_atoms,
        atoms.continuous.len(),
        n_trial,
        mip.perturb
    )];
    let mut status = Status::IterLimit;
    let mut feas_no_improve = 0usize;
    let mut rounds_since_best = 0usize;
    let mut perturbations = 0usize;
    let mut sweeps_done = 0usize;

    'driver: for it in 0..options.max_iter {
        if let Some(limit) = max_time {
            if start.elapsed() >= limit {
                status = Status::TimeLimit;
                break;
            }
        }
        let (partition, is_binary) = draw_partition(&atoms, options.p, &mut rng);
        let buckets = sweep.build_buckets(&partition);
        let q = sweep.compute_q();
        for (bd, exact) in buckets.iter().zip(&is_binary) {
            if *exact {
                solve_binary_block(&mut sweep, bd, &q, mip.cardinality_slack)?;
            } else {
                sweep.solve_block_continuous(bd, &q, None)?;
            }
        }
        sweep.finish_iteration();
        sweeps_done = it + 1;

        let viol = max_violation(problem, &sweep.st.x);
        let obj = sweep.objective();
        trace.push(TracePoint {
            iter: sweeps_done,
            r_prim: viol,
            r_dual: f64::NAN,
            objective: obj,
            elapsed: start.elapsed(),
        });
        if viol < fallback.0 {
            fallback = (viol, sweep.st.x.clone());
        }
        if viol <= mip.feas_eps {
            let improved = best
                .as_ref()
                .is_none_or(|b| obj < b.objective - IMPROVE_TOL);
            if improved {
                best = Some(BestSolution {
                    x: sweep.st.x.clone(),
                    objective: obj,
                    feasible: true,
                    found_at: start.elapsed(),
                    sweep: sweeps_done,
                });
                events.push(ImprovementEvent {
                    sweep: sweeps_done,
                    seconds: start.elapsed().as_secs_f64(),
                    objective: obj,
                });
                feas_no_improve = 0;
                rounds_since_best = 0;
                if let Some(t) = mip.target {
                    if obj <= t + 1e-9 {
                        status = Status::Optimal;
                        notes.push(format!("mip: target objective {} reached", t));
                        break 'driver;
                    }
                }
            } else {
                feas_no_improve += 1;
            }
        }
        if feas_no_improve >= n_trial {
            if let Some(b) = &best {
                if let Some(limit) = mip.max_no_improve {
                    if rounds_since_best >= limit {
                        notes.push(format!(
                            "mip: stopped after {} perturbation rounds without a new best",
                            rounds_since_best
                        ));
                        break;
                    }
                }
                let np = sample_np(&mut rng, lambda, np_lo, np_hi);
                let xp = perturb(&b.x, problem, mip.perturb, np, supers.as_ref(), &mut rng)?;
                sweep = Sweep::new(problem, options.beta, partial.as_ref(), xp, false);
                perturbations += 1;
                rounds_since_best += 1;
                feas_no_improve = 0;
            }
        }
    }

    let (x_fin, obj_fin) = match &best {
        Some(b) => (b.x.clone(), b.objective),
        None => {
            notes.push(
                "mip: no feasible point found within the limits; returning the least-violating iterate"
                    .into(),
            );
            let obj = problem.objective(&fallback.1);
            (fallback.1.clone(), obj)
        }
    };
    let s_fin: Vec<f64> = problem
        .a_ineq
        .matvec(&x_fin)
        .iter()
        .zip(&problem.b_ineq)
        .map(|(&ax, &b)| (b - ax).max(0.0))
        .collect();
    let res = residuals(
        problem,
        &x_fin,
        &s_fin,
        &x_fin,
        &vec![0.0; n],
        &vec![0.0; problem.m_eq()],
        &vec![0.0; problem.m_ineq()],
        false,
    );
    let result = SolveResult {
        x: x_fin,
        s: s_fin,
        y_eq: vec![0.0; problem.m_eq()],
        y_ineq: vec![0.0; problem.m_ineq()],
        z: vec![0.0; n],
        objective: obj_fin,
        residuals: res,
        status,
        iterations: sweeps_done,
        trace,
        notes,
    };
    Ok(MipResult { result, best, events, perturbations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admm::{Grouping, Mode};
    use crate::generators::{
        gen_markowitz, gen_maxbisection, gen_maxcut, GraphSpec, MarkowitzData, MarkowitzSpec,
    };
    use crate::problem::SparseMatrix;
    use proptest::prelude::*;

    fn dense(rows: usize, cols: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, v)
    }

    fn binary_problem(h: SparseMatrix, c: Vec<f64>) -> Lcqp {
        let n = c.len();
        Lcqp {
            h,
            c,
            a_eq: SparseMatrix::zeros(0, n),
            b_eq: Vec::new(),
            a_ineq: SparseMatrix::zeros(0, n),
            b_ineq: Vec::new(),
            lb: vec![0.0; n],
            ub: vec![1.0; n],
            kinds: vec![VarKind::Binary; n],
            c0: 0.0,
        }
    }

    fn triangle() -> GraphSpec {
        GraphSpec { vertices: 3, edges: vec![(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)] }
    }

    /// Brute-force reference over the full 0/1 cube: minimum of
    /// 1/2 x'Hx + c'x subject to feasibility of the original problem.
    fn enumerate_problem(problem: &Lcqp, eps: f64) -> (f64, Vec<f64>) {
        let n = problem.n();
        assert!(n <= 20, "oracle is exponential");
        let mut best = (f64::INFINITY, vec![0.0; n]);
        for mask in 0..(1u64 << n) {
            let x: Vec<f64> = (0..n).map(|i| ((mask >> (n - 1 - i)) & 1) as f64).collect();
            if max_violation(problem, &x) > eps {
                continue;
            }
            let val = problem.objective(&x);
            if val < best.0 {
                best = (val, x);
            }
        }
        best
    }

    // -- exact sub-solver ---------------------------------------------------

    #[test]
    fn subsolve_scalar_prefers_one_when_it_wins() {
        let q = dense(1, 1, &[2.0]);
        let x = exact_binary_subsolve(&q, &[-3.0], &BinaryBlockCons::free(1)).unwrap();
        assert_eq!(x, vec![1.0]);
        // Flip the sign so zero wins.
        let x = exact_binary_subsolve(&q, &[3.0], &BinaryBlockCons::free(1)).unwrap();
        assert_eq!(x, vec![0.0]);
    }

    #[test]
    fn subsolve_breaks_ties_lexicographically_smallest() {
        let q = dense(2, 2, &[0.0, 2.0, 2.0, 0.0]);
        // (0,0), (0,1), (1,0) all score 0; (1,1) scores 2.
        let x = exact_binary_subsolve(&q, &[0.0, 0.0], &BinaryBlockCons::free(2)).unwrap();
        assert_eq!(x, vec![0.0, 0.0]);
    }

    #[test]
    fn subsolve_cardinality_row_picks_the_cheapest_index() {
        let q = DMatrix::zeros(3, 3);
        let mut cons = BinaryBlockCons::free(3);
        cons.eq_mat = dense(1, 3, &[1.0, 1.0, 1.0]);
        cons.eq_rhs = vec![1.0];
        let x = exact_binary_subsolve(&q, &[-3.0, -1.0, -2.0], &cons).unwrap();
        assert_eq!(x, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn subsolve_respects_tightened_bounds() {
        let q = dense(2, 2, &[2.0, 0.0, 0.0, 2.0]);
        let mut cons = BinaryBlockCons::free(2);
        // Force x0 = 1 even though it costs, and keep x1 at 0.
        cons.lb[0] = 1.0;
        cons.ub[1] = 0.0;
        let x = exact_binary_subsolve(&q, &[5.0, -5.0], &cons).unwrap();
        assert_eq!(x, vec![1.0, 0.0]);
        // Contradictory bounds leave no binary value.
        cons.lb[1] = 0.4;
        cons.ub[1] = 0.6;
        assert!(matches!(
            exact_binary_subsolve(&q, &[0.0, 0.0], &cons),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn subsolve_infeasible_rows_report_invalid() {
        let q = DMatrix::zeros(2, 2);
        let mut cons = BinaryBlockCons::free(2);
        cons.eq_mat = dense(1, 2, &[1.0, 1.0]);
        cons.eq_rhs = vec![3.0];
        assert!(matches!(
            exact_binary_subsolve(&q, &[0.0, 0.0], &cons),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn subsolve_beyond_the_exact_range_is_capped() {
        let d = BINARY_BNB_LIMIT + 1;
        let q = DMatrix::zeros(d, d);
        let err = exact_binary_subsolve(&q, &vec![0.0; d], &BinaryBlockCons::free(d));
        assert!(matches!(err, Err(Error::CapExceeded(_))));
    }

    #[test]
    fn branch_and_bound_matches_plain_enumeration() {
        let d = BINARY_ENUM_LIMIT + 2;
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for case in 0..4 {
            let mut q = DMatrix::zeros(d, d);
            for i in 0..d {
                for j in 0..=i {
                    let v = rng.random_range(-2.0..2.0);
                    q[(i, j)] = v;
                    q[(j, i)] = v;
                }
            }
            let lin: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
            let mut cons = BinaryBlockCons::free(d);
            if case % 2 == 1 {
                cons.ineq_mat = DMatrix::from_element(1, d, 1.0);
                cons.ineq_rhs = vec![(d / 2) as f64];
            }
            let allowed = vec![(true, true); d];
            let bnb = branch_and_bound(&q, &lin, &cons, &allowed).unwrap();
            let brute = enumerate_assignments(&q, &lin, &cons, &allowed).unwrap();
            assert!((bnb.0 - brute.0).abs() < 1e-9, "value mismatch in case {}", case);
            assert_eq!(bnb.1, brute.1, "assignment mismatch in case {}", case);
        }
    }

    // -- perturbation ---------------------------------------------------------

    #[test]
    fn bit_flip_negates_exactly_the_chosen_coordinates() {
        let mut x = vec![1.0, 0.0, 1.0];
        bit_flip_at(&mut x, &[0, 1]);
        assert_eq!(x, vec![0.0, 1.0, 1.0]);
    }

    #[test]
    fn perturb_bit_flip_touches_the_sampled_count() {
        let problem = binary_problem(SparseMatrix::zeros(6, 6), vec![0.0; 6]);
        let x = vec![1.0, 1.0, 0.0, 0.0, 1.0, 0.0];
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let y = perturb(&x, &problem, PerturbKind::BitFlip, 3, None, &mut rng).unwrap();
        let changed = x.iter().zip(&y).filter(|(a, b)| a != b).count();
        assert_eq!(changed, 3);
    }

    #[test]
    fn perturb_swap_balanced_preserves_the_sum() {
        let problem = binary_problem(SparseMatrix::zeros(8, 8), vec![0.0; 8]);
        let x = vec![1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        for np in [2usize, 4, 6, 9] {
            let y = perturb(&x, &problem, PerturbKind::SwapBalanced, np, None, &mut rng).unwrap();
            assert_eq!(
                x.iter().sum::<f64>(),
                y.iter().sum::<f64>(),
                "sum changed for np = {}",
                np
            );
            let changed = x.iter().zip(&y).filter(|(a, b)| a != b).count();
            assert_eq!(changed, 2 * (np / 2).min(4), "pair count for np = {}", np);
        }
    }

    #[test]
    fn perturb_super_swap_keeps_one_hot_rows_one_hot() {
        let problem = binary_problem(SparseMatrix::zeros(6, 6), vec![0.0; 6]);
        let supers = SuperVariableSet::new(vec![vec![0, 1, 2], vec![3, 4, 5]]).unwrap();
        let x = vec![0.0, 1.0, 0.0, 1.0, 0.0, 0.0];
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..20 {
            let y =
                perturb(&x, &problem, PerturbKind::QapSuperSwap, 2, Some(&supers), &mut rng)
                    .unwrap();
            for g in &supers.supers {
                let ones = g.iter().filter(|&&i| y[i] > 0.5).count();
                assert_eq!(ones, 1, "group {:?} lost its one-hot shape: {:?}", g, y);
            }
        }
        // A changed unit row must still be a unit row at a different spot.
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let y = perturb(&x, &problem, PerturbKind::QapSuperSwap, 1, Some(&supers), &mut rng)
            .unwrap();
        assert_eq!(y.iter().sum::<f64>(), 2.0);
    }

    #[test]
    fn perturb_super_swap_without_grouping_is_an_error() {
        let problem = binary_problem(SparseMatrix::zeros(2, 2), vec![0.0; 2]);
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        assert!(matches!(
            perturb(&[0.0, 1.0], &problem, PerturbKind::QapSuperSwap, 1, None, &mut rng),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn truncated_exponential_sample_stays_clipped_and_deterministic() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let draws: Vec<usize> = (0..2000).map(|_| sample_np(&mut rng, 4.0, 2, 10)).collect();
        assert!(draws.iter().all(|&v| (2..=10).contains(&v)));
        // Small sizes dominate for a mean-4 exponential on [2, 10].
        let small = draws.iter().filter(|&&v| v <= 4).count();
        assert!(small > draws.len() / 2, "{} of {} draws were <= 4", small, draws.len());
        let mut rng2 = ChaCha12Rng::seed_from_u64(7);
        let again: Vec<usize> = (0..2000).map(|_| sample_np(&mut rng2, 4.0, 2, 10)).collect();
        assert_eq!(draws, again);
    }

    // -- feasibility and gap --------------------------------------------------

    #[test]
    fn feasibility_checks_are_one_sided_for_inequalities() {
        let n = 2;
        let problem = Lcqp {
            h: SparseMatrix::zeros(n, n),
            c: vec![0.0; n],
            a_eq: SparseMatrix::from_triplets(1, n, vec![(0, 0, 1.0), (0, 1, 1.0)]).unwrap(),
            b_eq: vec![1.0],
            a_ineq: SparseMatrix::from_triplets(1, n, vec![(0, 0, 1.0)]).unwrap(),
            b_ineq: vec![0.75],
            lb: vec![0.0; n],
            ub: vec![1.0; n],
            kinds: vec![VarKind::Binary; n],
            c0: 0.0,
        };
        // Exactly feasible: equality holds, inequality slack positive.
        assert!(feasibility(&problem, &[0.0, 1.0], 0.0));
        // Equality off by 1e-3 fails a 1e-4 gate.
        assert!(!feasibility(&problem, &[1e-3, 1.0], 1e-4));
        // Inequality violated on the high side only.
        assert_eq!(max_violation(&problem, &[1.0, 0.0]), 0.25);
    }

    #[test]
    fn gap_formula_and_sign_convention() {
        assert_eq!(gap(1.0, 1.0, false), 0.0);
        assert_eq!(gap(2.0, 1.0, false), 0.5);
        assert!((gap(9.0, 10.0, true) - 1.0 / 11.0).abs() < 1e-15);
    }

    // -- driver ---------------------------------------------------------------

    #[test]
    fn separable_diagonal_objective_solves_in_one_sweep() {
        // Each coordinate independently compares 1/2 h_ii + c_i with zero.
        let h = SparseMatrix::from_triplets(
            4,
            4,
            vec![(0, 0, -2.0), (1, 1, 1.0), (2, 2, -4.0), (3, 3, -4.0)],
        )
        .unwrap()
        .mark_symmetric(0.0)
        .unwrap();
        let problem = binary_problem(h, vec![0.0, -2.0, 1.0, 3.0]);
        let options = SolverOptions { p: 2, max_iter: 1, seed: 42, ..Default::default() };
        let out = solve_mip(&problem, &options, &MipOptions::default()).unwrap();
        let best = out.best.expect("one sweep suffices");
        assert_eq!(best.x, vec![1.0, 1.0, 1.0, 0.0]);
        assert!((best.objective - (-1.0 - 1.5 - 1.0)).abs() < 1e-12);
        assert_eq!(best.sweep, 1);
    }

    #[test]
    fn triangle_max_cut_reaches_the_enumeration_optimum() {
        let problem = gen_maxcut(&triangle()).unwrap();
        let (opt, _) = enumerate_problem(&problem, 0.0);
        assert_eq!(opt, -2.0);
        // Single block: the first sweep is the exact optimum.
        let one = SolverOptions { p: 1, max_iter: 5, seed: 0, ..Default::default() };
        let out = solve_mip(&problem, &one, &MipOptions::default()).unwrap();
        assert_eq!(out.best.as_ref().unwrap().objective, -2.0);
        // Two blocks with bit-flip restarts find it as well.
        let two = SolverOptions { p: 2, max_iter: 200, seed: 7, ..Default::default() };
        let mip = MipOptions {
            perturb: PerturbKind::BitFlip,
            target: Some(-2.0),
            ..Default::default()
        };
        let out = solve_mip(&problem, &two, &mip).unwrap();
        let best = out.best.expect("feasible incumbent");
        assert_eq!(best.objective, -2.0);
        assert_eq!(gap(best.objective, opt, false), 0.0);
        assert_eq!(out.result.status, Status::Optimal);
    }

    #[test]
    fn binary_markowitz_matches_support_enumeration() {
        // n = 10 assets, pick exactly 5: brute force checks all supports.
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        let f = DMatrix::from_fn(10, 10, |_, _| rng.random_range(-1.0..1.0));
        let v = &f * f.transpose() * 0.1
            + DMatrix::from_diagonal(&nalgebra::DVector::from_element(10, 0.05));
        let mean: Vec<f64> = (0..10).map(|_| rng.random_range(0.0..0.2)).collect();
        let spec = MarkowitzSpec {
            data: MarkowitzData::Covariance { v, mean: Some(mean) },
            tau: 1.0,
            kappa: 0.0,
            cardinality: Some(5),
            low_rank: false,
        };
        let problem = gen_markowitz(&spec).unwrap();
        let (opt, x_opt) = enumerate_problem(&problem, 0.0);
        assert_eq!(x_opt.iter().sum::<f64>(), 5.0);

        // Single block with the cardinality row enforced in the sub-problem:
        // the first sweep is already the constrained optimum.
        let options = SolverOptions {
            p: 1,
            max_iter: 3,
            seed: 3,
            partial: Some(PartialLagrangian {
                local_eq: vec![0],
                local_ineq: Vec::new(),
                bounds_local: false,
            }),
            ..Default::default()
        };
        let out = solve_mip(&problem, &options, &MipOptions::default()).unwrap();
        let best = out.best.expect("local row keeps every sweep feasible");
        assert!((best.objective - opt).abs() < 1e-9, "{} vs {}", best.objective, opt);

        // Two blocks, dualized row with the residual window and balanced
        // swaps: the heuristic reaches the same optimum.
        let options = SolverOptions { p: 2, max_iter: 400, seed: 5, beta: 0.5, ..Default::default() };
        let mip = MipOptions {
            perturb: PerturbKind::SwapBalanced,
            cardinality_slack: true,
            target: Some(opt),
            ..Default::default()
        };
        let mut feasible_start = vec![0.0; 10];
        for x in feasible_start.iter_mut().take(5) {
            *x = 1.0;
        }
        let options = SolverOptions { initial_x: Some(feasible_start), ..options };
        let out = solve_mip(&problem, &options, &mip).unwrap();
        let best = out.best.expect("feasible incumbent");
        assert!(
            (best.objective - opt).abs() < 1e-9,
            "heuristic returned {} instead of {}",
            best.objective,
            opt
        );
    }

    #[test]
    fn max_bisection_on_k4_finds_a_balanced_optimal_cut() {
        let spec = GraphSpec {
            vertices: 4,
            edges: vec![
                (0, 1, 1.0),
                (0, 2, 1.0),
                (0, 3, 1.0),
                (1, 2, 1.0),
                (1, 3, 1.0),
                (2, 3, 1.0),
            ],
        };
        let problem = gen_maxbisection(&spec).unwrap();
        let (opt, x_opt) = enumerate_problem(&problem, 0.0);
        assert_eq!(opt, -4.0);
        assert_eq!(x_opt.iter().sum::<f64>(), 2.0);
        let options = SolverOptions {
            p: 2,
            beta: 0.005,
            max_iter: 300,
            seed: 11,
            initial_x: Some(vec![1.0, 1.0, 0.0, 0.0]),
            ..Default::default()
        };
        let mip = MipOptions {
            perturb: PerturbKind::SwapBalanced,
            cardinality_slack: true,
            target: Some(-4.0),
            ..Default::default()
        };
        let out = solve_mip(&problem, &options, &mip).unwrap();
        let best = out.best.expect("balanced start stays reachable");
        assert_eq!(best.objective, -4.0);
        assert_eq!(best.x.iter().sum::<f64>(), 2.0);
    }

    #[test]
    fn improvement_events_decrease_strictly_and_incumbents_are_feasible() {
        let problem = gen_maxcut(&GraphSpec {
            vertices: 8,
            edges: vec![
                (0, 1, 2.0),
                (1, 2, 1.0),
                (2, 3, 3.0),
                (3, 4, 1.0),
                (4, 5, 2.0),
                (5, 6, 1.0),
                (6, 7, 2.0),
                (7, 0, 1.0),
                (0, 4, 1.5),
                (2, 6, 0.5),
            ],
        })
        .unwrap();
        let options = SolverOptions { p: 3, max_iter: 120, seed: 2, ..Default::default() };
        let mip = MipOptions { perturb: PerturbKind::BitFlip, ..Default::default() };
        let out = solve_mip(&problem, &options, &mip).unwrap();
        let best = out.best.expect("unconstrained problem is always feasible");
        assert!(feasibility(&problem, &best.x, 0.0));
        assert!(!out.events.is_empty());
        for pair in out.events.windows(2) {
            assert!(
                pair[1].objective < pair[0].objective - IMPROVE_TOL,
                "events must improve strictly: {:?}",
                out.events
            );
        }
        assert_eq!(out.events.last().unwrap().objective, best.objective);
        assert!(out.perturbations > 0, "120 sweeps at n_trial 1 must perturb");
    }

    #[test]
    fn infeasible_instance_reports_no_best_and_keeps_the_least_violating_point() {
        // e'x = 0.5 has no binary solution.
        let problem = Lcqp {
            a_eq: SparseMatrix::from_triplets(1, 2, vec![(0, 0, 1.0), (0, 1, 1.0)]).unwrap(),
            b_eq: vec![0.5],
            ..binary_problem(SparseMatrix::zeros(2, 2), vec![0.0, 0.0])
        };
        let options = SolverOptions { p: 1, max_iter: 10, seed: 0, ..Default::default() };
        let out = solve_mip(&problem, &options, &MipOptions::default()).unwrap();
        assert!(out.best.is_none());
        assert_eq!(out.result.status, Status::IterLimit);
        assert!(out
            .result
            .notes
            .iter()
            .any(|n| n.contains("no feasible point")));
        assert!(max_violation(&problem, &out.result.x) <= 0.5 + 1e-12);
    }

    #[test]
    fn mixed_binary_and_continuous_coordinates_split_cleanly() {
        // 1/2 (2 x0^2) - 0.6 x0 over [0, 1] has its optimum at x0 = 0.3;
        // the binary coordinate compares 1/2*2 - 3 < 0 and switches on.
        let h = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 2.0), (1, 1, 2.0)])
            .unwrap()
            .mark_symmetric(0.0)
            .unwrap();
        let problem = Lcqp {
            h,
            c: vec![-0.6, -3.0],
            a_eq: SparseMatrix::zeros(0, 2),
            b_eq: Vec::new(),
            a_ineq: SparseMatrix::zeros(0, 2),
            b_ineq: Vec::new(),
            lb: vec![0.0, 0.0],
            ub: vec![1.0, 1.0],
            kinds: vec![VarKind::Continuous, VarKind::Binary],
            c0: 0.0,
        };
        let options = SolverOptions { p: 2, max_iter: 5, seed: 1, ..Default::default() };
        let out = solve_mip(&problem, &options, &MipOptions::default()).unwrap();
        let best = out.best.expect("separable problem");
        assert!((best.x[0] - 0.3).abs() < 1e-6, "continuous coordinate: {:?}", best.x);
        assert_eq!(best.x[1], 1.0);
    }

    #[test]
    fn rejects_problems_without_binary_variables_and_integer_kinds() {
        let mut problem = binary_problem(SparseMatrix::zeros(2, 2), vec![0.0, 0.0]);
        problem.kinds = vec![VarKind::Continuous; 2];
        let options = SolverOptions::default();
        assert!(matches!(
            solve_mip(&problem, &options, &MipOptions::default()),
            Err(Error::InvalidArgument(_))
        ));
        problem.kinds = vec![VarKind::Binary, VarKind::Integer];
        assert!(matches!(
            solve_mip(&problem, &options, &MipOptions::default()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn qap_style_supers_keep_rows_feasible_through_the_solve() {
        // Two facilities on two locations: x[i*2 + k] = 1 places facility i
        // at location k. Row sums are block-local through the grouping; the
        // column rows stay dualized.
        let n = 4;
        let h = SparseMatrix::from_triplets(
            n,
            n,
            vec![(0, 0, 2.0), (1, 1, 2.0), (2, 2, 2.0), (3, 3, 2.0), (0, 3, 1.0), (3, 0, 1.0)],
        )
        .unwrap()
        .mark_symmetric(0.0)
        .unwrap();
        let a_eq = SparseMatrix::from_triplets(
            4,
            n,
            vec![
                // Row sums (facility rows).
                (0, 0, 1.0),
                (0, 1, 1.0),
                (1, 2, 1.0),
                (1, 3, 1.0),
                // Column sums (location rows).
                (2, 0, 1.0),
                (2, 2, 1.0),
                (3, 1, 1.0),
                (3, 3, 1.0),
            ],
        )
        .unwrap();
        let problem = Lcqp {
            h,
            c: vec![-1.0, 0.0, 0.0, -1.0],
            a_eq,
            b_eq: vec![1.0; 4],
            a_ineq: SparseMatrix::zeros(0, n),
            b_ineq: Vec::new(),
            lb: vec![0.0; n],
            ub: vec![1.0; n],
            kinds: vec![VarKind::Binary; n],
            c0: 0.0,
        };
        let supers = SuperVariableSet::new(vec![vec![0, 1], vec![2, 3]]).unwrap();
        let options = SolverOptions {
            p: 2,
            max_iter: 100,
            seed: 13,
            grouping: Grouping::Supplied(supers),
            partial: Some(PartialLagrangian {
                local_eq: vec![0, 1],
                local_ineq: Vec::new(),
                bounds_local: false,
            }),
            initial_x: Some(vec![1.0, 0.0, 0.0, 1.0]),
            ..Default::default()
        };
        let mip = MipOptions { perturb: PerturbKind::QapSuperSwap, ..Default::default() };
        let out = solve_mip(&problem, &options, &mip).unwrap();
        let best = out.best.expect("assignment problems stay feasible");
        let (opt, _) = enumerate_problem(&problem, 0.0);
        assert!((best.objective - opt).abs() < 1e-9);
        // Both permutation rows hold exactly.
        assert_eq!(best.x[0] + best.x[1], 1.0);
        assert_eq!(best.x[2] + best.x[3], 1.0);
    }

    #[test]
    fn driver_ignores_the_solver_mode_field() {
        // The driver always random-assembles; a stray mode setting must not
        // change determinism for a fixed seed.
        let problem = gen_maxcut(&triangle()).unwrap();
        let a = SolverOptions { p: 2, max_iter: 30, seed: 9, ..Default::default() };
        let b = SolverOptions { mode: Mode::Cyclic, ..a.clone() };
        let ra = solve_mip(&problem, &a, &MipOptions::default()).unwrap();
        let rb = solve_mip(&problem, &b, &MipOptions::default()).unwrap();
        assert_eq!(ra.result.x, rb.result.x);
        assert_eq!(ra.result.objective, rb.result.objective);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        /// With one block the first sweep enumerates the whole cube, so the
        /// driver must return the brute-force optimum of any unconstrained
        /// binary objective (convex or not).
        #[test]
        fn single_block_matches_brute_force(seed in 0u64..500, n in 2usize..10) {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let mut trips = Vec::new();
            for i in 0..n {
                for j in 0..=i {
                    let v = (rng.random_range(-20..20) as f64) / 4.0;
                    if v != 0.0 {
                        trips.push((i, j, v));
                        if i != j {
                            trips.push((j, i, v));
                        }
                    }
                }
            }
            let h = SparseMatrix::from_triplets(n, n, trips).unwrap().mark_symmetric(0.0).unwrap();
            let c: Vec<f64> = (0..n).map(|_| (rng.random_range(-20..20) as f64) / 4.0).collect();
            let problem = binary_problem(h, c);
            let options = SolverOptions { p: 1, max_iter: 1, seed, ..Default::default() };
            let out = solve_mip(&problem, &options, &MipOptions::default()).unwrap();
            let best = out.best.expect("unconstrained");
            let (opt, x_opt) = enumerate_problem(&problem, 0.0);
            prop_assert!((best.objective - opt).abs() < 1e-9);
            prop_assert_eq!(best.x, x_opt);
        }

        /// The incumbent is only replaced by strictly better feasible points.
        #[test]
        fn incumbent_objective_is_monotone(seed in 0u64..200) {
            let problem = gen_maxcut(&triangle()).unwrap();
            let options = SolverOptions { p: 2, max_iter: 40, seed, ..Default::default() };
            let mip = MipOptions { perturb: PerturbKind::BitFlip, ..Default::default() };
            let out = solve_mip(&problem, &options, &mip).unwrap();
            for pair in out.events.windows(2) {
                prop_assert!(pair[1].objective < pair[0].objective);
            }
            if let Some(best) = &out.best {
                prop_assert!(feasibility(&problem, &best.x, 0.0));
            }
        }
    }
}

//! Continuous solvers for linearly constrained convex QPs: a randomized
//! multi-block alternating-direction engine plus cyclic, randomly permuted,
//! distributed, and single-block variants, with shared residual and
//! termination machinery.
//!
//! All variants work on the augmented Lagrangian of
//!
//! ```text
//! min 1/2 x'Hx + c'x   s.t.  A_eq x = b_eq,  A_ineq x + s = b_ineq,
//!                            s >= 0,  lb <= x <= ub
//! ```
//!
//! where bounds are enforced through a split copy x_tilde with multiplier z
//! whenever any bound is finite (and not delegated to sub-problems), and the
//! sweep updates x block by block, then s, then the split copy, then the
//! multipliers.

pub mod distributed;
pub mod ipm;
pub mod multiblock;
pub mod single;

use std::time::{Duration, Instant};

use crate::blocks::SuperVariableSet;
use crate::error::Error;
use crate::problem::{Lcqp, SparseMatrix};
use crate::Result;

pub use multiblock::update_block;

/// Sweep strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Random assembly: fresh uniform random partition every iteration.
    Rac,
    /// Fixed partition, fresh random visiting order every iteration.
    Rp,
    /// Fixed partition, fixed order.
    Cyclic,
    /// Jacobi-style distributed sweep with per-block constraint splitting.
    Distributed,
    /// One block; the KKT system is factored once and reused.
    SingleBlock,
}

/// How variables are grouped into blocks.
#[derive(Debug, Clone, Default)]
pub enum Grouping {
    #[default]
    None,
    Supplied(SuperVariableSet),
    /// Run structure detection on the stacked constraint matrix and keep the
    /// result unless it is degenerate.
    Auto,
}

/// Constraint rows enforced exactly inside each block sub-problem instead of
/// being dualized into the augmented Lagrangian.
#[derive(Debug, Clone, Default)]
pub struct PartialLagrangian {
    pub local_eq: Vec<usize>,
    pub local_ineq: Vec<usize>,
    /// Enforce variable bounds inside sub-problems rather than through the
    /// split copy.
    pub bounds_local: bool,
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub mode: Mode,
    /// Number of blocks.
    pub p: usize,
    /// Augmented Lagrangian penalty.
    pub beta: f64,
    /// Relative residual tolerance.
    pub eps: f64,
    pub max_iter: usize,
    pub max_time: Option<Duration>,
    pub seed: u64,
    pub grouping: Grouping,
    pub partial: Option<PartialLagrangian>,
    /// Starting point; defaults to the componentwise max(0, lb).
    pub initial_x: Option<Vec<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            mode: Mode::Rac,
            p: 1,
            beta: 1.0,
            eps: 1e-5,
            max_iter: 4000,
            max_time: None,
            seed: 0,
            grouping: Grouping::None,
            partial: None,
            initial_x: None,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self, problem: &Lcqp) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "beta must be positive and finite, got {}",
                self.beta
            )));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        if self.p == 0 {
            return Err(Error::InvalidArgument("block count must be >= 1".into()));
        }
        if self.p > problem.n() {
            return Err(Error::InvalidArgument(format!(
                "{} blocks for {} variables",
                self.p,
                problem.n()
            )));
        }
        if let Some(x0) = &self.initial_x {
            if x0.len() != problem.n() {
                return Err(Error::Dimension(format!(
                    "initial point of length {} for {} variables",
                    x0.len(),
                    problem.n()
                )));
            }
        }
        if let Some(pl) = &self.partial {
            for &r in &pl.local_eq {
                if r >= problem.m_eq() {
                    return Err(Error::InvalidArgument(format!(
                        "local equality row {} out of range",
                        r
                    )));
                }
            }
            for &r in &pl.local_ineq {
                if r >= problem.m_ineq() {
                    return Err(Error::InvalidArgument(format!(
                        "local inequality row {} out of range",
                        r
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    IterLimit,
    TimeLimit,
    Diverged,
}

/// Relative residuals; the primal one is the max of its three components.
#[derive(Debug, Clone, Copy, Default)]
pub struct Residuals {
    pub r_prim: f64,
    pub r_dual: f64,
    pub r_eq: f64,
    pub r_ineq: f64,
    pub r_bounds: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct TracePoint {
    pub iter: usize,
    pub r_prim: f64,
    pub r_dual: f64,
    pub objective: f64,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub y_eq: Vec<f64>,
    pub y_ineq: Vec<f64>,
    /// Bound multipliers (the split-variable duals).
    pub z: Vec<f64>,
    pub objective: f64,
    /// Solver-agnostic residuals recomputed on the unscaled model.
    pub residuals: Residuals,
    pub status: Status,
    pub iterations: usize,
    pub trace: Vec<TracePoint>,
    /// Routing and configuration notes (factorization paths, cache use).
    pub notes: Vec<String>,
}

impl SolveResult {
    /// Residual trace as CSV rows: iter, r_prim, r_dual, objective,
    /// elapsed_ms.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iter,r_prim,r_dual,objective,elapsed_ms\n");
        for t in &self.trace {
            out.push_str(&format!(
                "{},{:e},{:e},{},{:.3}\n",
                t.iter,
                t.r_prim,
                t.r_dual,
                t.objective,
                t.elapsed.as_secs_f64() * 1e3
            ));
        }
        out
    }
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}

/// Does the bound-splitting machinery apply: any finite bound present and
/// bounds not delegated to sub-problems.
pub(crate) fn split_active(problem: &Lcqp, partial: Option<&PartialLagrangian>) -> bool {
    if partial.is_some_and(|pl| pl.bounds_local) {
        return false;
    }
    problem
        .lb
        .iter()
        .chain(problem.ub.iter())
        .any(|b| b.is_finite())
}

/// Default starting point: componentwise max(0, lb) pushed inside the box,
/// which reduces to 0 for free variables.
pub(crate) fn default_initial_x(problem: &Lcqp) -> Vec<f64> {
    problem
        .lb
        .iter()
        .zip(&problem.ub)
        .map(|(&l, &u)| 0.0f64.max(l).min(u))
        .collect()
}

/// Linear term of the x-update systems:
///
/// ```text
/// q = c - A_eq'(y_eq + beta b_eq) - A_ineq'(y_ineq + beta (b_ineq - s))
///     - z - beta x_tilde
/// ```
///
/// with the z / x_tilde terms present only when the split is active. Rows
/// whose mask entry is false (constraints enforced inside sub-problems) are
/// left out of the augmented Lagrangian entirely.
#[allow(clippy::too_many_arguments)]
pub(crate) fn compute_q_masked(
    problem: &Lcqp,
    beta: f64,
    use_split: bool,
    s: &[f64],
    x_tilde: &[f64],
    z: &[f64],
    y_eq: &[f64],
    y_ineq: &[f64],
    eq_dualized: &[bool],
    ineq_dualized: &[bool],
) -> Vec<f64> {
    let mut q = problem.c.clone();
    for &(r, j, v) in problem.a_eq.entries() {
        if eq_dualized[r] {
            q[j] -= v * (y_eq[r] + beta * problem.b_eq[r]);
        }
    }
    for &(r, j, v) in problem.a_ineq.entries() {
        if ineq_dualized[r] {
            q[j] -= v * (y_ineq[r] + beta * (problem.b_ineq[r] - s[r]));
        }
    }
    if use_split {
        for j in 0..problem.n() {
            q[j] -= z[j] + beta * x_tilde[j];
        }
    }
    q
}

/// Closed-form split-copy update: x_tilde = clamp(x - z/beta, lb, ub).
pub fn update_xtilde(x: &[f64], z: &[f64], beta: f64, lb: &[f64], ub: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(z)
        .zip(lb.iter().zip(ub))
        .map(|((&xi, &zi), (&l, &u))| (xi - zi / beta).max(l).min(u))
        .collect()
}

/// Closed-form slack update: s = max(0, y_ineq/beta + b_ineq - A_ineq x),
/// with the product A_ineq x supplied by the caller.
pub fn update_slack(y_ineq: &[f64], beta: f64, b_ineq: &[f64], ax_ineq: &[f64]) -> Vec<f64> {
    y_ineq
        .iter()
        .zip(b_ineq)
        .zip(ax_ineq)
        .map(|((&y, &b), &ax)| (y / beta + b - ax).max(0.0))
        .collect()
}

/// Multiplier steps: y_eq -= beta (A_eq x - b_eq),
/// y_ineq -= beta (A_ineq x + s - b_ineq), z -= beta (x - x_tilde).
pub fn update_duals(
    y_eq: &mut [f64],
    y_ineq: &mut [f64],
    z: Option<&mut [f64]>,
    beta: f64,
    ax_eq: &[f64],
    b_eq: &[f64],
    ax_ineq: &[f64],
    s: &[f64],
    b_ineq: &[f64],
    x: &[f64],
    x_tilde: &[f64],
) {
    for (y, (&ax, &b)) in y_eq.iter_mut().zip(ax_eq.iter().zip(b_eq)) {
        *y -= beta * (ax - b);
    }
    for (y, ((&ax, &si), &b)) in y_ineq
        .iter_mut()
        .zip(ax_ineq.iter().zip(s).zip(b_ineq))
    {
        *y -= beta * (ax + si - b);
    }
    if let Some(z) = z {
        for (zi, (&xi, &xt)) in z.iter_mut().zip(x.iter().zip(x_tilde)) {
            *zi -= beta * (xi - xt);
        }
    }
}

/// Iteration-scale relative residuals. `x_tilde` is ignored when the split
/// is inactive (its residual contributes zero).
#[allow(clippy::too_many_arguments)]
pub fn residuals(
    problem: &Lcqp,
    x: &[f64],
    s: &[f64],
    x_tilde: &[f64],
    z: &[f64],
    y_eq: &[f64],
    y_ineq: &[f64],
    use_split: bool,
) -> Residuals {
    let ax_eq = problem.a_eq.matvec(x);
    let ax_ineq = problem.a_ineq.matvec(x);
    let hx = problem.h.matvec(x);
    residuals_cached(problem, x, s, x_tilde, z, y_eq, y_ineq, use_split, &hx, &ax_eq, &ax_ineq)
}

/// Same as [`residuals`] with the three matrix-vector products already in
/// hand (the sweep engines keep them incrementally updated).
#[allow(clippy::too_many_arguments)]
pub(crate) fn residuals_cached(
    problem: &Lcqp,
    x: &[f64],
    s: &[f64],
    x_tilde: &[f64],
    z: &[f64],
    y_eq: &[f64],
    y_ineq: &[f64],
    use_split: bool,
    hx: &[f64],
    ax_eq: &[f64],
    ax_ineq: &[f64],
) -> Residuals {
    let r_eq = if problem.m_eq() == 0 {
        0.0
    } else {
        let num = ax_eq
            .iter()
            .zip(&problem.b_eq)
            .fold(0.0f64, |m, (&a, &b)| m.max((a - b).abs()));
        num / (1.0 + inf_norm(ax_eq).max(inf_norm(&problem.b_eq)))
    };
    let r_ineq = if problem.m_ineq() == 0 {
        0.0
    } else {
        let axs: Vec<f64> = ax_ineq.iter().zip(s).map(|(&a, &si)| a + si).collect();
        let num = axs
            .iter()
            .zip(&problem.b_ineq)
            .fold(0.0f64, |m, (&a, &b)| m.max((a - b).abs()));
        num / (1.0 + inf_norm(&axs).max(inf_norm(&problem.b_ineq)))
    };
    let r_bounds = if use_split {
        let num = x
            .iter()
            .zip(x_tilde)
            .fold(0.0f64, |m, (&a, &b)| m.max((a - b).abs()));
        num / (1.0 + inf_norm(x).max(inf_norm(x_tilde)))
    } else {
        0.0
    };

    let aty_eq = problem.a_eq.matvec_t(y_eq);
    let aty_ineq = problem.a_ineq.matvec_t(y_ineq);
    let n = problem.n();
    let mut num = 0.0f64;
    for i in 0..n {
        let g = hx[i] + problem.c[i] - aty_eq[i] - aty_ineq[i] - z[i];
        num = num.max(g.abs());
    }
    let denom = 1.0
        + inf_norm(hx)
            .max(inf_norm(&problem.c))
            .max(inf_norm(&aty_eq))
            .max(inf_norm(&aty_ineq))
            .max(inf_norm(z));
    let r_dual = num / denom;

    Residuals {
        r_prim: r_eq.max(r_ineq).max(r_bounds),
        r_dual,
        r_eq,
        r_ineq,
        r_bounds,
    }
}

/// Solver-agnostic residuals on the original model: one-sided inequality
/// violations, bound violations measured against lb/ub directly, and the
/// stationarity residual with explicit bound multipliers.
pub fn verify_solution(
    problem: &Lcqp,
    x: &[f64],
    y_eq: &[f64],
    y_ineq: &[f64],
    y_bounds: &[f64],
) -> Residuals {
    let ax_eq = problem.a_eq.matvec(x);
    let ax_ineq = problem.a_ineq.matvec(x);
    let hx = problem.h.matvec(x);

    let r_eq = if problem.m_eq() == 0 {
        0.0
    } else {
        let num = ax_eq
            .iter()
            .zip(&problem.b_eq)
            .fold(0.0f64, |m, (&a, &b)| m.max((a - b).abs()));
        num / (1.0 + inf_norm(&ax_eq).max(inf_norm(&problem.b_eq)))
    };
    let r_ineq = if problem.m_ineq() == 0 {
        0.0
    } else {
        let num = ax_ineq
            .iter()
            .zip(&problem.b_ineq)
            .fold(0.0f64, |m, (&a, &b)| m.max((a - b).max(0.0)));
        num / (1.0 + inf_norm(&ax_ineq).max(inf_norm(&problem.b_ineq)))
    };
    let mut viol = 0.0f64;
    let mut bound_scale = 0.0f64;
    for i in 0..problem.n() {
        let (l, u) = (problem.lb[i], problem.ub[i]);
        if l.is_finite() {
            viol = viol.max(l - x[i]);
            bound_scale = bound_scale.max(l.abs());
        }
        if u.is_finite() {
            viol = viol.max(x[i] - u);
            bound_scale = bound_scale.max(u.abs());
        }
    }
    let r_bounds = viol.max(0.0) / (1.0 + inf_norm(x).max(bound_scale));

    let aty_eq = problem.a_eq.matvec_t(y_eq);
    let aty_ineq = problem.a_ineq.matvec_t(y_ineq);
    let mut num = 0.0f64;
    for i in 0..problem.n() {
        let g = hx[i] + problem.c[i] - aty_eq[i] - aty_ineq[i] - y_bounds[i];
        num = num.max(g.abs());
    }
    let denom = 1.0
        + inf_norm(&hx)
            .max(inf_norm(&problem.c))
            .max(inf_norm(&aty_eq))
            .max(inf_norm(&aty_ineq))
            .max(inf_norm(y_bounds));
    Residuals {
        r_prim: r_eq.max(r_ineq).max(r_bounds),
        r_dual: num / denom,
        r_eq,
        r_ineq,
        r_bounds,
    }
}

/// Iteration bookkeeping shared by all solve loops: trace collection,
/// termination tests, and the divergence guard.
pub(crate) struct Monitor {
    pub start: Instant,
    pub eps: f64,
    pub max_iter: usize,
    pub max_time: Option<Duration>,
    pub trace: Vec<TracePoint>,
    best: f64,
}

impl Monitor {
    pub fn new(eps: f64, max_iter: usize, max_time: Option<Duration>) -> Self {
        Monitor {
            start: Instant::now(),
            eps,
            max_iter,
            max_time,
            trace: Vec::new(),
            best: f64::INFINITY,
        }
    }

    /// Record one iteration; Some(status) when the loop must stop.
    pub fn step(&mut self, iter: usize, r: &Residuals, objective: f64, x: &[f64]) -> Option<Status> {
        let worst = r.r_prim.max(r.r_dual);
        self.trace.push(TracePoint {
            iter,
            r_prim: r.r_prim,
            r_dual: r.r_dual,
            objective,
            elapsed: self.start.elapsed(),
        });
        if !worst.is_finite() || inf_norm(x) > 1e12 {
            return Some(Status::Diverged);
        }
        if worst < self.eps {
            return Some(Status::Optimal);
        }
        self.best = self.best.min(worst);
        if worst > 1e6 * self.best && worst > 1.0 {
            return Some(Status::Diverged);
        }
        if iter + 1 >= self.max_iter {
            return Some(Status::IterLimit);
        }
        if let Some(limit) = self.max_time {
            if self.start.elapsed() >= limit {
                return Some(Status::TimeLimit);
            }
        }
        None
    }
}

/// Stack equality above inequality rows into one matrix (used for grouping
/// and the single-block border).
pub(crate) fn stacked_constraints(problem: &Lcqp) -> SparseMatrix {
    let me = problem.m_eq();
    let mi = problem.m_ineq();
    let n = problem.n();
    let mut t: Vec<(usize, usize, f64)> = problem.a_eq.entries().to_vec();
    t.extend(
        problem
            .a_ineq
            .entries()
            .iter()
            .map(|&(i, j, v)| (me + i, j, v)),
    );
    SparseMatrix::from_triplets(me + mi, n, t).expect("stacked dims are consistent")
}

/// Mode choice for callers that do not care: single block when the
/// constraint matrix is very sparse and the problem is not huge, multi-block
/// otherwise.
pub fn auto_mode(problem: &Lcqp) -> Mode {
    let n = problem.n();
    let m = problem.m_eq() + problem.m_ineq();
    if m == 0 || n == 0 {
        return Mode::SingleBlock;
    }
    let nnz = problem.a_eq.nnz() + problem.a_ineq.nnz();
    let density = nnz as f64 / (m as f64 * n as f64);
    if density < 1e-3 && n <= 50_000 {
        Mode::SingleBlock
    } else {
        Mode::Rac
    }
}

/// Solve a continuous LCQP with the variant picked by `options.mode`.
pub fn solve(problem: &Lcqp, options: &SolverOptions) -> Result<SolveResult> {
    if !problem.is_continuous() {
        return Err(Error::InvalidArgument(
            "solve handles continuous problems; use the mixed-integer driver for integer kinds"
                .into(),
        ));
    }
    problem.check()?;
    options.validate(problem)?;
    match options.mode {
        Mode::SingleBlock => single::solve_single_block(problem, options),
        Mode::Distributed => distributed::solve_distributed(problem, options),
        Mode::Rac | Mode::Rp | Mode::Cyclic => multiblock::solve_multiblock(problem, options),
    }
}

/// Single-block entry point (mode must match).
pub fn solve_single_block(problem: &Lcqp, options: &SolverOptions) -> Result<SolveResult> {
    if options.mode != Mode::SingleBlock {
        return Err(Error::InvalidArgument(
            "solve_single_block requires mode SingleBlock".into(),
        ));
    }
    solve(problem, options)
}

/// Cyclic / randomly-permuted / distributed entry point (mode must match).
pub fn solve_variant(problem: &Lcqp, options: &SolverOptions) -> Result<SolveResult> {
    match options.mode {
        Mode::Cyclic | Mode::Rp | Mode::Distributed => solve(problem, options),
        _ => Err(Error::InvalidArgument(
            "solve_variant covers CYCLIC, RP, and DISTRIBUTED".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xtilde_examples() {
        assert_eq!(
            update_xtilde(&[0.5], &[0.0], 1.0, &[0.0], &[1.0]),
            vec![0.5]
        );
        assert_eq!(update_xtilde(&[2.0], &[0.0], 1.0, &[0.0], &[1.0]), vec![1.0]);
        assert_eq!(
            update_xtilde(&[0.5], &[1.0], 2.0, &[0.0], &[1.0]),
            vec![0.0]
        );
    }

    #[test]
    fn slack_examples() {
        // b - Ax = -1, y = 0 -> 0.
        assert_eq!(update_slack(&[0.0], 1.0, &[0.0], &[1.0]), vec![0.0]);
        // b - Ax = 1, y = 0 -> 1.
        assert_eq!(update_slack(&[0.0], 1.0, &[1.0], &[0.0]), vec![1.0]);
        // y = 2, beta = 4, b - Ax = 0 -> 0.5.
        assert_eq!(update_slack(&[2.0], 4.0, &[3.0], &[3.0]), vec![0.5]);
    }

    #[test]
    fn dual_step_examples() {
        let mut ye = vec![0.0];
        let mut yi = vec![0.0];
        let mut z = vec![1.5];
        // Feasible everywhere: nothing moves.
        update_duals(
            &mut ye,
            &mut yi,
            Some(&mut z),
            2.0,
            &[3.0],
            &[3.0],
            &[1.0],
            &[1.0],
            &[2.0],
            &[0.7],
            &[0.7],
        );
        assert_eq!(ye, vec![0.0]);
        assert_eq!(yi, vec![0.0]);
        assert_eq!(z, vec![1.5]);
        // A_eq x - b = 1 at beta 2 -> y_eq = -2.
        update_duals(
            &mut ye,
            &mut yi,
            None,
            2.0,
            &[4.0],
            &[3.0],
            &[1.0],
            &[1.0],
            &[2.0],
            &[0.7],
            &[0.7],
        );
        assert_eq!(ye, vec![-2.0]);
    }

    #[test]
    fn residual_formula_example() {
        // One equality row: ||Ax - b|| = 1, max(||Ax||, ||b||) = 9 -> 1/10.
        let problem = Lcqp {
            h: SparseMatrix::zeros(1, 1),
            c: vec![0.0],
            a_eq: SparseMatrix::from_triplets(1, 1, vec![(0, 0, 1.0)]).unwrap(),
            b_eq: vec![9.0],
            a_ineq: SparseMatrix::zeros(0, 1),
            b_ineq: vec![],
            lb: vec![f64::NEG_INFINITY],
            ub: vec![f64::INFINITY],
            kinds: vec![crate::problem::VarKind::Continuous],
            c0: 0.0,
        };
        let r = residuals(&problem, &[8.0], &[], &[8.0], &[0.0], &[0.0], &[], false);
        assert!((r.r_eq - 0.1).abs() < 1e-15);
        assert_eq!(r.r_prim, r.r_eq);
    }

    #[test]
    fn scaling_keeps_relative_residuals_bounded() {
        let problem = Lcqp {
            h: SparseMatrix::identity(2),
            c: vec![1.0, -1.0],
            a_eq: SparseMatrix::from_triplets(1, 2, vec![(0, 0, 1.0), (0, 1, 1.0)]).unwrap(),
            b_eq: vec![1.0],
            a_ineq: SparseMatrix::zeros(0, 2),
            b_ineq: vec![],
            lb: vec![f64::NEG_INFINITY; 2],
            ub: vec![f64::INFINITY; 2],
            kinds: vec![crate::problem::VarKind::Continuous; 2],
            c0: 0.0,
        };
        let base = residuals(
            &problem,
            &[3.0, 1.0],
            &[],
            &[3.0, 1.0],
            &[0.0, 0.0],
            &[2.0],
            &[],
            false,
        );
        // Scale x and y by 1000: raw residuals blow up, relative ones stay
        // bounded by 1 because the denominators grow alongside.
        let scaled = residuals(
            &problem,
            &[3000.0, 1000.0],
            &[],
            &[3000.0, 1000.0],
            &[0.0, 0.0],
            &[2000.0],
            &[],
            false,
        );
        assert!(base.r_prim <= 1.0 && base.r_dual <= 1.0);
        assert!(scaled.r_prim <= 1.0 && scaled.r_dual <= 1.0);
    }

    #[test]
    fn verify_bound_violation_example() {
        let problem = Lcqp {
            h: SparseMatrix::zeros(3, 3),
            c: vec![0.0; 3],
            a_eq: SparseMatrix::zeros(0, 3),
            b_eq: vec![],
            a_ineq: SparseMatrix::zeros(0, 3),
            b_ineq: vec![],
            lb: vec![0.0; 3],
            ub: vec![1.0; 3],
            kinds: vec![crate::problem::VarKind::Continuous; 3],
            c0: 0.0,
        };
        let x = [0.5, 0.5, 2.0]; // x_3 = ub_3 + 1
        let r = verify_solution(&problem, &x, &[], &[], &[0.0; 3]);
        let want = 1.0 / (1.0 + 2.0f64.max(1.0));
        assert!((r.r_bounds - want).abs() < 1e-15);
    }

    #[test]
    fn exact_point_zero_residuals() {
        // min 1/2 x'Ix - x with x free: optimum x = 1, no constraints.
        let problem = Lcqp {
            h: SparseMatrix::identity(1),
            c: vec![-1.0],
            a_eq: SparseMatrix::zeros(0, 1),
            b_eq: vec![],
            a_ineq: SparseMatrix::zeros(0, 1),
            b_ineq: vec![],
            lb: vec![f64::NEG_INFINITY],
            ub: vec![f64::INFINITY],
            kinds: vec![crate::problem::VarKind::Continuous],
            c0: 0.0,
        };
        let r = residuals(&problem, &[1.0], &[], &[1.0], &[0.0], &[], &[], false);
        assert_eq!(r.r_prim, 0.0);
        assert_eq!(r.r_dual, 0.0);
        let v = verify_solution(&problem, &[1.0], &[], &[], &[0.0]);
        assert_eq!(v.r_prim, 0.0);
        assert_eq!(v.r_dual, 0.0);
    }
}

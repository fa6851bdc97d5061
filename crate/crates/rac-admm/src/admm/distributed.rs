//! Distributed (Jacobi) variant: every block carries its own copy
//! `lambda_i` of the coupling constraint contribution and all blocks are
//! solved against the previous iterate, so the per-block solves are
//! independent. One iteration:
//!
//! ```text
//!     x_i   = argmin f_i(x_i) - y'(A_i x_i - lambda_i)
//!                   + beta/2 ||A_i x_i - lambda_i||^2        (in parallel)
//!     lambda_i = A_i x_i - (1/p)(sum_j A_j x_j - b)
//!     y     = y - (beta/p)(sum_j A_j x_j - b)
//! ```
//!
//! Cross-block Hessian coupling enters the block objective linearized at the
//! previous iterate. The variant covers equality constraints and bounds
//! (bounds through the same split copy as the other modes); inequality rows
//! are not supported.

use crate::error::Error;
use crate::problem::Lcqp;
use crate::Result;

use super::multiblock::{fixed_partition, resolve_grouping, BlockFactor, Sweep};
use super::{
    default_initial_x, split_active, Monitor, SolveResult, SolverOptions,
};

pub fn solve_distributed(problem: &Lcqp, options: &SolverOptions) -> Result<SolveResult> {
    if problem.m_ineq() > 0 {
        return Err(Error::Unsupported(
            "the distributed variant handles equality constraints and bounds only".into(),
        ));
    }
    if options.partial.is_some() {
        return Err(Error::Unsupported(
            "sub-problem-local constraints are not available in the distributed variant".into(),
        ));
    }
    let n = problem.n();
    let me = problem.m_eq();
    let p = options.p;
    let beta = options.beta;
    let pf = p as f64;
    let use_split = split_active(problem, None);

    let x0 = options
        .initial_x
        .clone()
        .unwrap_or_else(|| default_initial_x(problem));
    let mut sweep = Sweep::new(problem, beta, None, x0, use_split);
    let supers = resolve_grouping(problem, &options.grouping, p)?;
    let part = fixed_partition(n, p, supers.as_ref())?;
    let buckets = sweep.build_buckets(&part);

    // Fixed partition: factor every block system once.
    let factors: Vec<BlockFactor> = buckets
        .iter()
        .map(|bd| sweep.factor_block_matrix(bd))
        .collect::<Result<_>>()?;

    // lambda_i = A_i x_i - (1/p)(A x - b) at the starting point.
    let mut lambda: Vec<Vec<f64>> = buckets
        .iter()
        .map(|bd| {
            let axk = sweep.block_ae_x(bd);
            (0..me)
                .map(|r| axk[r] - (sweep.st.aex[r] - problem.b_eq[r]) / pf)
                .collect()
        })
        .collect();

    let mut notes = vec![format!(
        "mode=Distributed p={p} beta={beta} split={use_split} dual_step=beta/p"
    )];
    if let Some(sv) = &supers {
        notes.push(format!(
            "grouping: {} super-variables, {} shared columns",
            sv.supers.len(),
            sv.shared.len()
        ));
    }

    let mut monitor = Monitor::new(options.eps, options.max_iter, options.max_time);
    let status;
    let mut iter = 0usize;
    loop {
        // Jacobi solves against the previous iterate.
        let mut new_x: Vec<Vec<f64>> = Vec::with_capacity(p);
        for (k, bd) in buckets.iter().enumerate() {
            let own = sweep.block_hx_own(bd);
            let w: Vec<f64> = (0..me)
                .map(|r| sweep.st.ye[r] + beta * lambda[k][r])
                .collect();
            let atw = sweep.block_ae_t(bd, &w);
            let rhs: Vec<f64> = bd
                .idx
                .iter()
                .enumerate()
                .map(|(j, &g)| {
                    let mut v = -problem.c[g] - (sweep.st.hx[g] - own[j]) + atw[j];
                    if use_split {
                        v += sweep.st.z[g] + beta * sweep.st.xt[g];
                    }
                    v
                })
                .collect();
            new_x.push(factors[k].solve(&rhs)?);
        }
        for (bd, xn) in buckets.iter().zip(&new_x) {
            sweep.apply_block(bd, xn);
        }
        sweep.st.hx = problem.h.matvec(&sweep.st.x);
        sweep.st.aex = problem.a_eq.matvec(&sweep.st.x);

        for (k, bd) in buckets.iter().enumerate() {
            let axk = sweep.block_ae_x(bd);
            for r in 0..me {
                lambda[k][r] = axk[r] - (sweep.st.aex[r] - problem.b_eq[r]) / pf;
            }
        }
        for r in 0..me {
            sweep.st.ye[r] -= beta / pf * (sweep.st.aex[r] - problem.b_eq[r]);
        }
        if use_split {
            for i in 0..n {
                let xt = (sweep.st.x[i] - sweep.st.z[i] / beta)
                    .max(problem.lb[i])
                    .min(problem.ub[i]);
                sweep.st.xt[i] = xt;
                sweep.st.z[i] -= beta * (sweep.st.x[i] - xt);
            }
        }

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

//! Single-block method: the x-update solves one fixed linear system
//! `(H [+ beta I] + beta A'A) x = -q` every iteration, so the factorization
//! is built once and reused. Two routes:
//!
//! * general H: the bordered saddle system
//!   `[[H + beta I, sqrt(beta) A'], [sqrt(beta) A, -I]]`, LDL-factored once
//!   (dense or sparse by size);
//! * diagonal H: only the m-by-m Woodbury complement
//!   `G = I + beta A (H + beta I)^{-1} A'` is factored.
//!
//! When the problem has no finite bounds the split copy is dropped and the
//! `beta I` term with it, which is what makes unconstrained diagonal
//! problems close in a single iteration. The route taken is recorded in the
//! result notes.

use crate::linalg::{kkt_factor_general, DiagonalKkt, KktFactor};
use crate::problem::{Lcqp, SparseMatrix};
use crate::Result;

use super::{
    compute_q_masked, default_initial_x, residuals_cached, split_active, stacked_constraints,
    update_duals, update_slack, update_xtilde, Monitor, SolveResult, SolverOptions,
};

enum Route {
    Diagonal(DiagonalKkt),
    General(KktFactor),
}

impl Route {
    fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        match self {
            Route::Diagonal(d) => d.solve(rhs),
            Route::General(k) => k.solve_x(rhs),
        }
    }
}

pub fn solve_single_block(problem: &Lcqp, options: &SolverOptions) -> Result<SolveResult> {
    if options.partial.is_some() {
        return Err(crate::error::Error::Unsupported(
            "sub-problem-local constraints apply to multi-block modes".into(),
        ));
    }
    let n = problem.n();
    let beta = options.beta;
    let use_split = split_active(problem, None);
    let a = stacked_constraints(problem);

    // The factors solve (H + beta I + beta A'A) x = rhs; without the split
    // the beta I proximal term must not be there, so H is pre-shifted.
    let h_is_diagonal = problem.h.entries().iter().all(|&(i, j, _)| i == j);
    let (route, route_note) = if h_is_diagonal {
        let mut h_diag = vec![0.0; n];
        for &(i, _, v) in problem.h.entries() {
            h_diag[i] = v;
        }
        if !use_split {
            for d in h_diag.iter_mut() {
                *d -= beta;
            }
        }
        let k = DiagonalKkt::new(&h_diag, &a, beta)?;
        let note = format!("kkt=diagonal(n={n}, m={})", a.nrows());
        (Route::Diagonal(k), note)
    } else {
        let h_eff = if use_split {
            problem.h.clone()
        } else {
            let mut t = problem.h.entries().to_vec();
            t.extend((0..n).map(|i| (i, i, -beta)));
            SparseMatrix::from_triplets(n, n, t)?
        };
        let k = kkt_factor_general(&h_eff, &a, beta)?;
        let kind = match &k {
            KktFactor::Dense { .. } => "dense",
            KktFactor::Sparse { .. } => "sparse",
        };
        let note = format!("kkt=general({kind}, dim={})", n + a.nrows());
        (Route::General(k), note)
    };

    let mut x = options
        .initial_x
        .clone()
        .unwrap_or_else(|| default_initial_x(problem));
    let aix0 = problem.a_ineq.matvec(&x);
    let mut s: Vec<f64> = problem
        .b_ineq
        .iter()
        .zip(&aix0)
        .map(|(&b, &ax)| (b - ax).max(0.0))
        .collect();
    let mut xt = x.clone();
    let mut z = vec![0.0; n];
    let mut ye = vec![0.0; problem.m_eq()];
    let mut yi = vec![0.0; problem.m_ineq()];
    let eq_mask = vec![true; problem.m_eq()];
    let ineq_mask = vec![true; problem.m_ineq()];

    let mut monitor = Monitor::new(options.eps, options.max_iter, options.max_time);
    let status;
    let mut iter = 0usize;
    loop {
        let q = compute_q_masked(
            problem, beta, use_split, &s, &xt, &z, &ye, &yi, &eq_mask, &ineq_mask,
        );
        let rhs: Vec<f64> = q.iter().map(|&v| -v).collect();
        x = route.solve(&rhs)?;

        let hx = problem.h.matvec(&x);
        let aex = problem.a_eq.matvec(&x);
        let aix = problem.a_ineq.matvec(&x);
        s = update_slack(&yi, beta, &problem.b_ineq, &aix);
        if use_split {
            xt = update_xtilde(&x, &z, beta, &problem.lb, &problem.ub);
        }
        update_duals(
            &mut ye,
            &mut yi,
            use_split.then_some(z.as_mut_slice()),
            beta,
            &aex,
            &problem.b_eq,
            &aix,
            &s,
            &problem.b_ineq,
            &x,
            &xt,
        );

        let r = residuals_cached(
            problem, &x, &s, &xt, &z, &ye, &yi, use_split, &hx, &aex, &aix,
        );
        let objective = {
            let mut val = problem.c0;
            for i in 0..n {
                val += (0.5 * hx[i] + problem.c[i]) * x[i];
            }
            val
        };
        if let Some(st) = monitor.step(iter, &r, objective, &x) {
            status = st;
            break;
        }
        iter += 1;
    }

    let objective = problem.objective(&x);
    let residuals = super::verify_solution(problem, &x, &ye, &yi, &z);
    Ok(SolveResult {
        x,
        s,
        y_eq: ye,
        y_ineq: yi,
        z,
        objective,
        residuals,
        status,
        iterations: monitor.trace.len(),
        trace: monitor.trace,
        notes: vec![
            format!("mode=SingleBlock beta={beta} split={use_split}"),
            route_note,
        ],
    })
}

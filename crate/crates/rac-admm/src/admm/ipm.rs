//! Small dense primal-dual interior-point solver for the block sub-problems
//! that keep inequality rows or bounds explicit:
//!
//! ```text
//!     min 1/2 x'Qx + g'x   s.t.  E x = d,   C x <= f
//! ```
//!
//! Predictor-corrector path following on the perturbed KKT system, with the
//! inequality block eliminated into an augmented system
//!
//! ```text
//!     [ Q + C' (W/T) C + delta I    E'        ] [dx]   [r1]
//!     [ E                           -delta I  ] [dv] = [r2]
//! ```
//!
//! factored once per iteration by unpivoted LDL (the diagonal regularization
//! `delta` makes the matrix quasidefinite). Intended for systems up to a few
//! hundred variables; everything is dense.

use nalgebra::DMatrix;

use crate::error::Error;
use crate::linalg::ldl_dense;
use crate::Result;

/// Solution of the inequality-constrained QP. `y_ineq` holds the
/// nonnegative multipliers of the `C x <= f` rows in the stationarity
/// convention `Qx + g + E'y_eq + C'y_ineq = 0`.
#[derive(Debug, Clone)]
pub struct IpmSolution {
    pub x: Vec<f64>,
    pub y_eq: Vec<f64>,
    pub y_ineq: Vec<f64>,
    pub iterations: usize,
}

/// Default residual/complementarity tolerance.
pub const IPM_TOL: f64 = 1e-9;
/// Iteration cap; the sub-problems are tiny and well conditioned, so hitting
/// this signals a modeling problem rather than slow progress.
pub const IPM_MAX_ITER: usize = 100;

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}

/// Solve the QP above. `e`/`d` may have zero rows (no equalities); when `c`
/// has zero rows the problem reduces to an equality-constrained solve and is
/// handled directly.
pub fn solve_dense_qp(
    q: &DMatrix<f64>,
    g: &[f64],
    e: &DMatrix<f64>,
    d: &[f64],
    c: &DMatrix<f64>,
    f: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<IpmSolution> {
    let n = q.nrows();
    let me = e.nrows();
    let mi = c.nrows();
    if q.ncols() != n || g.len() != n || (me > 0 && e.ncols() != n) {
        return Err(Error::Dimension("inconsistent QP dimensions".into()));
    }
    if d.len() != me || f.len() != mi || (mi > 0 && c.ncols() != n) {
        return Err(Error::Dimension("inconsistent QP constraint dimensions".into()));
    }

    if mi == 0 {
        return solve_equality_qp(q, g, e, d);
    }

    // Scale-aware regularization keeps the augmented matrix quasidefinite.
    let delta = 1e-10 * (1.0 + q.amax());

    let mut x = vec![0.0; n];
    let mut v = vec![0.0; me];
    let mut w = vec![1.0; mi];
    let cx0 = mat_vec(c, &x);
    let mut t: Vec<f64> = (0..mi).map(|i| (f[i] - cx0[i]).max(1.0)).collect();

    for iter in 0..max_iter {
        let qx = mat_vec(q, &x);
        let etv = mat_t_vec(e, &v);
        let ctw = mat_t_vec(c, &w);
        let cx = mat_vec(c, &x);
        let ex = mat_vec(e, &x);

        let rd: Vec<f64> = (0..n).map(|i| qx[i] + g[i] + etv[i] + ctw[i]).collect();
        let rp1: Vec<f64> = (0..me).map(|i| ex[i] - d[i]).collect();
        let rp2: Vec<f64> = (0..mi).map(|i| cx[i] + t[i] - f[i]).collect();
        let mu = t.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / mi as f64;

        if inf_norm(&rd).max(inf_norm(&rp1)).max(inf_norm(&rp2)).max(mu) < tol {
            return Ok(IpmSolution { x, y_eq: v, y_ineq: w, iterations: iter });
        }

        // Augmented matrix for this iterate, shared by both solves.
        let dim = n + me;
        let mut k = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..n {
            for j in 0..n {
                k[(i, j)] = q[(i, j)];
            }
            k[(i, i)] += delta;
        }
        for r in 0..mi {
            let wt = w[r] / t[r];
            for i in 0..n {
                if c[(r, i)] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    k[(i, j)] += wt * c[(r, i)] * c[(r, j)];
                }
            }
        }
        for r in 0..me {
            for j in 0..n {
                k[(n + r, j)] = e[(r, j)];
                k[(j, n + r)] = e[(r, j)];
            }
            k[(n + r, n + r)] = -delta;
        }
        let ldl = ldl_dense(&k)?;

        // rc -> (dx, dv, dt, dw) through the eliminated system.
        let newton = |rc: &[f64]| -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
            let mut rhs = vec![0.0; dim];
            for i in 0..n {
                let mut acc = -rd[i];
                for r in 0..mi {
                    // C' T^{-1} (W rp2 - rc) term moved to the right side.
                    acc -= c[(r, i)] * (w[r] * rp2[r] - rc[r]) / t[r];
                }
                rhs[i] = acc;
            }
            for r in 0..me {
                rhs[n + r] = -rp1[r];
            }
            let sol = ldl.solve(&rhs)?;
            let dx = sol[..n].to_vec();
            let dv = sol[n..].to_vec();
            let cdx = mat_vec(c, &dx);
            let dt: Vec<f64> = (0..mi).map(|r| -rp2[r] - cdx[r]).collect();
            let dw: Vec<f64> = (0..mi).map(|r| -(rc[r] + w[r] * dt[r]) / t[r]).collect();
            Ok((dx, dv, dt, dw))
        };

        let step_len = |t: &[f64], dt: &[f64], w: &[f64], dw: &[f64]| -> f64 {
            let mut a = 1.0f64;
            for r in 0..mi {
                if dt[r] < 0.0 {
                    a = a.min(-t[r] / dt[r]);
                }
                if dw[r] < 0.0 {
                    a = a.min(-w[r] / dw[r]);
                }
            }
            0.995 * a
        };

        // Affine predictor chooses the centering weight.
        let rc_aff: Vec<f64> = (0..mi).map(|r| t[r] * w[r]).collect();
        let (_, _, dt_a, dw_a) = newton(&rc_aff)?;
        let alpha_aff = step_len(&t, &dt_a, &w, &dw_a).min(1.0);
        let mu_aff = (0..mi)
            .map(|r| (t[r] + alpha_aff * dt_a[r]) * (w[r] + alpha_aff * dw_a[r]))
            .sum::<f64>()
            / mi as f64;
        let sigma = (mu_aff / mu).powi(3).clamp(0.0, 1.0);

        let rc: Vec<f64> = (0..mi)
            .map(|r| t[r] * w[r] + dt_a[r] * dw_a[r] - sigma * mu)
            .collect();
        let (dx, dv, dt, dw) = newton(&rc)?;
        let alpha = step_len(&t, &dt, &w, &dw).min(1.0);

        for i in 0..n {
            x[i] += alpha * dx[i];
        }
        for r in 0..me {
            v[r] += alpha * dv[r];
        }
        for r in 0..mi {
            t[r] += alpha * dt[r];
            w[r] += alpha * dw[r];
        }
    }
    Err(Error::NoConvergence(format!(
        "interior-point sub-problem stalled after {max_iter} iterations"
    )))
}

/// Equality-constrained case via the regularized augmented system.
fn solve_equality_qp(
    q: &DMatrix<f64>,
    g: &[f64],
    e: &DMatrix<f64>,
    d: &[f64],
) -> Result<IpmSolution> {
    let n = q.nrows();
    let me = e.nrows();
    if me == 0 {
        let ldl = ldl_dense(q)?;
        let rhs: Vec<f64> = g.iter().map(|&gi| -gi).collect();
        let x = ldl.solve(&rhs)?;
        return Ok(IpmSolution { x, y_eq: vec![], y_ineq: vec![], iterations: 0 });
    }
    let delta = 1e-12 * (1.0 + q.amax());
    let dim = n + me;
    let mut k = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            k[(i, j)] = q[(i, j)];
        }
        k[(i, i)] += delta;
    }
    for r in 0..me {
        for j in 0..n {
            k[(n + r, j)] = e[(r, j)];
            k[(j, n + r)] = e[(r, j)];
        }
        k[(n + r, n + r)] = -delta;
    }
    let ldl = ldl_dense(&k)?;
    let mut rhs = vec![0.0; dim];
    for i in 0..n {
        rhs[i] = -g[i];
    }
    for r in 0..me {
        rhs[n + r] = d[r];
    }
    let sol = ldl.solve(&rhs)?;
    Ok(IpmSolution {
        x: sol[..n].to_vec(),
        y_eq: sol[n..].to_vec(),
        y_ineq: vec![],
        iterations: 0,
    })
}

fn mat_vec(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; m.nrows()];
    for i in 0..m.nrows() {
        let mut acc = 0.0;
        for j in 0..m.ncols() {
            acc += m[(i, j)] * x[j];
        }
        y[i] = acc;
    }
    y
}

fn mat_t_vec(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; m.ncols()];
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            y[j] += m[(i, j)] * x[i];
        }
    }
    y
}

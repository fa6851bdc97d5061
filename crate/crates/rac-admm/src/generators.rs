//! Benchmark problem generators: random convex QPs with a controlled
//! Hessian spectrum, portfolio selection (dense, low-rank, and cardinality
//! variants), quadratic assignment relaxations, max-cut and max-bisection
//! binary programs, and the kernelized SVM dual.
//!
//! Every generator is a pure function of its spec (seeded generators draw
//! from a counter-based stream), so the same spec reproduces the same
//! problem bit for bit.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Error;
use crate::problem::{Lcqp, SparseMatrix, VarKind};
use crate::Result;

/// Dense kernel matrices are refused above this many training points.
pub const KERNEL_POINT_CAP: usize = 5000;

fn dense_to_sparse(m: &DMatrix<f64>) -> SparseMatrix {
    let mut t = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v != 0.0 {
                t.push((i, j, v));
            }
        }
    }
    SparseMatrix::from_triplets(m.nrows(), m.ncols(), t).expect("dense dims are consistent")
}

// ---------------------------------------------------------------------------
// Random linearly constrained QP
// ---------------------------------------------------------------------------

/// Specification for a random convex LCQP with a controlled spectrum.
#[derive(Debug, Clone)]
pub struct RandomQpSpec {
    pub n: usize,
    pub m_eq: usize,
    pub m_ineq: usize,
    /// Fraction of constraint entries kept, in (0, 1].
    pub density: f64,
    /// Orientation mixing weight in [0, 1]: 0 keeps the Hessian diagonal.
    pub eta: f64,
    /// Rank-one eeᵀ shift weight, ≥ 0.
    pub zeta: f64,
    /// Condition number target for the spectrum diagonal, ≥ 1.
    pub condition: f64,
    pub seed: u64,
}

impl RandomQpSpec {
    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "density must be in (0, 1], got {}",
                self.density
            )));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidArgument(format!(
                "eta must be in [0, 1], got {}",
                self.eta
            )));
        }
        if self.zeta < 0.0 || !self.zeta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "zeta must be finite and >= 0, got {}",
                self.zeta
            )));
        }
        if self.condition < 1.0 || !self.condition.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "condition target must be finite and >= 1, got {}",
                self.condition
            )));
        }
        Ok(())
    }
}

/// Random constraint matrix: standard normal entries kept at `density`.
fn random_constraints(
    m: usize,
    n: usize,
    density: f64,
    rng: &mut ChaCha12Rng,
) -> Result<SparseMatrix> {
    let mut t = Vec::new();
    for i in 0..m {
        for j in 0..n {
            if density >= 1.0 || rng.random::<f64>() < density {
                let v: f64 = StandardNormal.sample(rng);
                t.push((i, j, v));
            }
        }
    }
    SparseMatrix::from_triplets(m, n, t)
}

/// Generate a random convex LCQP.
///
/// The Hessian is `W diag(V) W' / s + zeta ee'` where `W = eta U + (1-eta) I`
/// with uniform(0,1) entries in `U`, the spectrum diagonal `V` is log-uniform
/// on `[1, condition]` with both endpoints pinned so the target is hit
/// exactly, and `s` is the largest absolute entry of the unshifted product.
/// Right-hand sides are built from a uniform(0,1) interior point, so the
/// problem is always feasible.
pub fn gen_random_lcqp(spec: &RandomQpSpec) -> Result<Lcqp> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);

    let log_cond = spec.condition.log10();
    let mut u_exp: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * log_cond).collect();
    if n >= 1 {
        u_exp[0] = 0.0;
    }
    if n >= 2 {
        u_exp[1] = log_cond;
    }
    u_exp.shuffle(&mut rng);
    let v: Vec<f64> = u_exp.iter().map(|&u| 10f64.powf(u)).collect();

    let mut h = if spec.eta == 0.0 {
        DMatrix::from_fn(n, n, |i, j| if i == j { v[i] } else { 0.0 })
    } else {
        let u = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>());
        let w = u * spec.eta + DMatrix::identity(n, n) * (1.0 - spec.eta);
        let mut vd = DMatrix::zeros(n, n);
        for i in 0..n {
            vd[(i, i)] = v[i];
        }
        &w * vd * w.transpose()
    };
    let scale = h.amax();
    if scale > 0.0 {
        h /= scale;
    }
    if spec.zeta > 0.0 {
        for i in 0..n {
            for j in 0..n {
                h[(i, j)] += spec.zeta;
            }
        }
    }
    // Symmetrize exactly against round-off in the triple product.
    for i in 0..n {
        for j in 0..i {
            let s = 0.5 * (h[(i, j)] + h[(j, i)]);
            h[(i, j)] = s;
            h[(j, i)] = s;
        }
    }

    let c: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let a_eq = random_constraints(spec.m_eq, n, spec.density, &mut rng)?;
    let a_ineq = random_constraints(spec.m_ineq, n, spec.density, &mut rng)?;
    let x_hat: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let b_eq = a_eq.matvec(&x_hat);
    let slack: Vec<f64> = (0..spec.m_ineq).map(|_| rng.random::<f64>()).collect();
    let b_ineq: Vec<f64> = a_ineq
        .matvec(&x_hat)
        .iter()
        .zip(&slack)
        .map(|(ax, s)| ax + s)
        .collect();

    let h_sp = dense_to_sparse(&h).mark_symmetric(1e-12)?;
    Ok(Lcqp {
        h: h_sp,
        c,
        a_eq,
        b_eq,
        a_ineq,
        b_ineq,
        lb: vec![f64::NEG_INFINITY; n],
        ub: vec![f64::INFINITY; n],
        kinds: vec![VarKind::Continuous; n],
        c0: 0.0,
    })
}

// ---------------------------------------------------------------------------
// Portfolio selection
// ---------------------------------------------------------------------------

/// Asset data for portfolio problems: raw return observations or a
/// covariance matrix with an optional mean-return vector (zero if absent).
#[derive(Debug, Clone)]
pub enum MarkowitzData {
    /// k observations of N asset returns, one row per observation.
    Returns(DMatrix<f64>),
    Covariance {
        v: DMatrix<f64>,
        mean: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone)]
pub struct MarkowitzSpec {
    pub data: MarkowitzData,
    /// Risk tolerance multiplying the mean-return term.
    pub tau: f64,
    /// Ridge regularizer.
    pub kappa: f64,
    /// Number of assets to pick in the cardinality (binary) variant.
    pub cardinality: Option<usize>,
    /// Keep the factored form B x - y = 0 with a diagonal Hessian.
    pub low_rank: bool,
}

/// Centered, scaled factor `B = (R - ee'R/k) / sqrt(k-1)`, so `B'B` is the
/// sample covariance of the rows of R.
pub fn centered_factor(r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = r.nrows();
    if k < 2 {
        return Err(Error::InvalidArgument(
            "need at least 2 return observations".into(),
        ));
    }
    let n = r.ncols();
    let mut b = r.clone();
    for j in 0..n {
        let mean = r.column(j).sum() / k as f64;
        for i in 0..k {
            b[(i, j)] -= mean;
        }
    }
    b /= ((k - 1) as f64).sqrt();
    Ok(b)
}

impl MarkowitzSpec {
    fn n_assets(&self) -> usize {
        match &self.data {
            MarkowitzData::Returns(r) => r.ncols(),
            MarkowitzData::Covariance { v, .. } => v.ncols(),
        }
    }

    fn mean_returns(&self) -> Vec<f64> {
        match &self.data {
            MarkowitzData::Returns(r) => {
                let k = r.nrows().max(1) as f64;
                (0..r.ncols()).map(|j| r.column(j).sum() / k).collect()
            }
            MarkowitzData::Covariance { v, mean } => {
                mean.clone().unwrap_or_else(|| vec![0.0; v.ncols()])
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if self.tau < 0.0 || self.kappa < 0.0 {
            return Err(Error::InvalidArgument(
                "tau and kappa must be nonnegative".into(),
            ));
        }
        let n = self.n_assets();
        if n == 0 {
            return Err(Error::InvalidArgument("no assets".into()));
        }
        if let MarkowitzData::Covariance { v, mean } = &self.data {
            if v.nrows() != v.ncols() {
                return Err(Error::Dimension(format!(
                    "covariance must be square, got {}x{}",
                    v.nrows(),
                    v.ncols()
                )));
            }
            if let Some(m) = mean {
                if m.len() != n {
                    return Err(Error::Dimension(format!(
                        "{} mean returns for {} assets",
                        m.len(),
                        n
                    )));
                }
            }
        }
        if let Some(r) = self.cardinality {
            if r == 0 || r >= n {
                return Err(Error::InvalidArgument(format!(
                    "cardinality must be in 1..{}, got {}",
                    n, r
                )));
            }
        }
        Ok(())
    }
}

/// Portfolio selection: minimize x'Vx - tau m'x + kappa ||x||^2 with the
/// budget row e'x = 1 and x >= 0 (continuous), or the cardinality row
/// e'x = r with binary x. The low-rank variant keeps the factor B and
/// auxiliary returns y = Bx, leaving the Hessian diagonal.
pub fn gen_markowitz(spec: &MarkowitzSpec) -> Result<Lcqp> {
    spec.validate()?;
    let n = spec.n_assets();
    let m = spec.mean_returns();
    let binary = spec.cardinality.is_some();
    let budget = spec.cardinality.map(|r| r as f64).unwrap_or(1.0);

    // The family objective has no 1/2 factor, so the stored Hessian is
    // doubled: 1/2 x'(2V)x = x'Vx.
    if spec.low_rank {
        let b = match &spec.data {
            MarkowitzData::Returns(r) => centered_factor(r)?,
            MarkowitzData::Covariance { .. } => {
                return Err(Error::InvalidArgument(
                    "low-rank form requires return observations".into(),
                ))
            }
        };
        let k = b.nrows();
        let total = n + k;
        let mut ht = Vec::with_capacity(total);
        for i in 0..n {
            if spec.kappa > 0.0 {
                ht.push((i, i, 2.0 * spec.kappa));
            }
        }
        for i in 0..k {
            ht.push((n + i, n + i, 2.0));
        }
        let h = SparseMatrix::from_triplets(total, total, ht)?.mark_symmetric(0.0)?;
        let mut c = vec![0.0; total];
        for i in 0..n {
            c[i] = -spec.tau * m[i];
        }
        let mut at = Vec::new();
        for j in 0..n {
            at.push((0, j, 1.0));
        }
        for i in 0..k {
            for j in 0..n {
                let v = b[(i, j)];
                if v != 0.0 {
                    at.push((1 + i, j, v));
                }
            }
            at.push((1 + i, n + i, -1.0));
        }
        let a_eq = SparseMatrix::from_triplets(1 + k, total, at)?;
        let mut b_eq = vec![0.0; 1 + k];
        b_eq[0] = budget;
        let mut lb = vec![0.0; total];
        let mut ub = vec![if binary { 1.0 } else { f64::INFINITY }; total];
        for i in 0..k {
            lb[n + i] = f64::NEG_INFINITY;
            ub[n + i] = f64::INFINITY;
        }
        let mut kinds = vec![
            if binary {
                VarKind::Binary
            } else {
                VarKind::Continuous
            };
            total
        ];
        for kind in kinds.iter_mut().skip(n) {
            *kind = VarKind::Continuous;
        }
        return Ok(Lcqp {
            h,
            c,
            a_eq,
            b_eq,
            a_ineq: SparseMatrix::zeros(0, total),
            b_ineq: Vec::new(),
            lb,
            ub,
            kinds,
            c0: 0.0,
        });
    }

    let v = match &spec.data {
        MarkowitzData::Returns(r) => {
            let b = centered_factor(r)?;
            b.transpose() * &b
        }
        MarkowitzData::Covariance { v, .. } => v.clone(),
    };
    let mut h = v * 2.0;
    for i in 0..n {
        h[(i, i)] += 2.0 * spec.kappa;
    }
    let c: Vec<f64> = m.iter().map(|&mi| -spec.tau * mi).collect();
    let a_eq = SparseMatrix::from_triplets(1, n, (0..n).map(|j| (0, j, 1.0)).collect::<Vec<_>>())?;
    let h_sp = dense_to_sparse(&h).mark_symmetric(1e-12)?;
    Ok(Lcqp {
        h: h_sp,
        c,
        a_eq,
        b_eq: vec![budget],
        a_ineq: SparseMatrix::zeros(0, n),
        b_ineq: Vec::new(),
        lb: vec![0.0; n],
        ub: vec![if binary { 1.0 } else { f64::INFINITY }; n],
        kinds: vec![
            if binary {
                VarKind::Binary
            } else {
                VarKind::Continuous
            };
            n
        ],
        c0: 0.0,
    })
}

// ---------------------------------------------------------------------------
// Quadratic assignment
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct QapSpec {
    /// Flow matrix, r x r.
    pub flow: DMatrix<f64>,
    /// Distance matrix, r x r.
    pub distance: DMatrix<f64>,
    /// Diagonal-dominance slack added on top of the largest off-diagonal
    /// absolute row sum.
    pub delta: f64,
    /// Relax binaries to the unit box.
    pub relaxed: bool,
}

/// Quadratic assignment as a QP over x in {0,1}^(r*r) with x[i*r + k] = 1
/// when facility i sits at location k: Hessian A kron B shifted to strict
/// diagonal dominance, one assignment row per facility and per location.
pub fn gen_qap(spec: &QapSpec) -> Result<Lcqp> {
    let r = spec.flow.nrows();
    if r < 2 || spec.flow.ncols() != r || spec.distance.nrows() != r || spec.distance.ncols() != r
    {
        return Err(Error::Dimension(format!(
            "flow and distance must be square of equal size >= 2, got {}x{} and {}x{}",
            spec.flow.nrows(),
            spec.flow.ncols(),
            spec.distance.nrows(),
            spec.distance.ncols()
        )));
    }
    if !(spec.delta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "delta must be positive, got {}",
            spec.delta
        )));
    }
    let n = r * r;
    let mut kron = DMatrix::zeros(n, n);
    for i in 0..r {
        for j in 0..r {
            let a = spec.flow[(i, j)];
            if a == 0.0 {
                continue;
            }
            for k in 0..r {
                for l in 0..r {
                    kron[(i * r + k, j * r + l)] = a * spec.distance[(k, l)];
                }
            }
        }
    }
    let mut max_off = 0.0f64;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            if j != i {
                row += kron[(i, j)].abs();
            }
        }
        max_off = max_off.max(row);
    }
    let d = max_off + spec.delta;
    // Family objective x'(kron + dI)x, doubled into the 1/2 x'Hx slot.
    let mut h = kron * 2.0;
    for i in 0..n {
        h[(i, i)] += 2.0 * d;
    }

    let mut at = Vec::with_capacity(2 * n);
    for i in 0..r {
        for k in 0..r {
            at.push((i, i * r + k, 1.0));
        }
    }
    for k in 0..r {
        for i in 0..r {
            at.push((r + k, i * r + k, 1.0));
        }
    }
    let a_eq = SparseMatrix::from_triplets(2 * r, n, at)?;
    let h_sp = dense_to_sparse(&h).mark_symmetric(1e-12)?;
    Ok(Lcqp {
        h: h_sp,
        c: vec![0.0; n],
        a_eq,
        b_eq: vec![1.0; 2 * r],
        a_ineq: SparseMatrix::zeros(0, n),
        b_ineq: Vec::new(),
        lb: vec![0.0; n],
        ub: vec![1.0; n],
        kinds: vec![
            if spec.relaxed {
                VarKind::Continuous
            } else {
                VarKind::Binary
            };
            n
        ],
        c0: 0.0,
    })
}

// ---------------------------------------------------------------------------
// Max-cut and max-bisection
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct GraphSpec {
    pub vertices: usize,
    /// Undirected weighted edges (u, v, w), 0-based, no self-loops.
    /// Duplicate edges sum.
    pub edges: Vec<(usize, usize, f64)>,
}

impl GraphSpec {
    fn validate(&self) -> Result<()> {
        for &(u, v, w) in &self.edges {
            if u == v {
                return Err(Error::InvalidArgument(format!("self-loop at vertex {}", u)));
            }
            if u >= self.vertices || v >= self.vertices {
                return Err(Error::InvalidArgument(format!(
                    "edge ({}, {}) out of range for {} vertices",
                    u, v, self.vertices
                )));
            }
            if !w.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "non-finite weight on edge ({}, {})",
                    u, v
                )));
            }
        }
        Ok(())
    }

    /// Full symmetric weight matrix.
    fn weight_matrix(&self) -> DMatrix<f64> {
        let n = self.vertices;
        let mut w = DMatrix::zeros(n, n);
        for &(u, v, wt) in &self.edges {
            w[(u, v)] += wt;
            w[(v, u)] += wt;
        }
        w
    }
}

fn cut_hessian(spec: &GraphSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let n = spec.vertices;
    let w = spec.weight_matrix();
    let mut h = w.clone();
    for i in 0..n {
        let row: f64 = w.row(i).sum();
        let col: f64 = w.column(i).sum();
        h[(i, i)] = -0.5 * (row + col);
    }
    Ok(h)
}

/// Max-cut as an unconstrained binary QP: the family objective x'Hx equals
/// minus the weight of the cut induced by x, so minimizing it maximizes the
/// cut.
pub fn gen_maxcut(spec: &GraphSpec) -> Result<Lcqp> {
    let n = spec.vertices;
    let h = cut_hessian(spec)? * 2.0;
    let h_sp = dense_to_sparse(&h).mark_symmetric(0.0)?;
    Ok(Lcqp {
        h: h_sp,
        c: vec![0.0; n],
        a_eq: SparseMatrix::zeros(0, n),
        b_eq: Vec::new(),
        a_ineq: SparseMatrix::zeros(0, n),
        b_ineq: Vec::new(),
        lb: vec![0.0; n],
        ub: vec![1.0; n],
        kinds: vec![VarKind::Binary; n],
        c0: 0.0,
    })
}

/// Max-bisection: max-cut plus the balance row e'x = floor(n/2).
pub fn gen_maxbisection(spec: &GraphSpec) -> Result<Lcqp> {
    let n = spec.vertices;
    let mut p = gen_maxcut(spec)?;
    p.a_eq = SparseMatrix::from_triplets(1, n, (0..n).map(|j| (0, j, 1.0)).collect::<Vec<_>>())?;
    p.b_eq = vec![(n / 2) as f64];
    Ok(p)
}

/// Parse an edge-list: one `u v w` triple per line, 0-based vertex ids,
/// blank lines and `#` comments skipped. The vertex count is the largest id
/// plus one unless a larger count is supplied.
pub fn parse_edge_list(text: &str, vertices: Option<usize>) -> Result<GraphSpec> {
    let mut edges = Vec::new();
    let mut max_id = 0usize;
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let parse = |tok: Option<&str>, what: &str| -> Result<f64> {
            tok.ok_or_else(|| Error::Parse {
                line: ln + 1,
                msg: format!("missing {}", what),
            })?
            .parse::<f64>()
            .map_err(|e| Error::Parse {
                line: ln + 1,
                msg: format!("bad {}: {}", what, e),
            })
        };
        let u = parse(it.next(), "source vertex")? as usize;
        let v = parse(it.next(), "target vertex")?;
        let w = match it.next() {
            Some(tok) => parse(Some(tok), "weight")?,
            None => 1.0,
        };
        if it.next().is_some() {
            return Err(Error::Parse {
                line: ln + 1,
                msg: "expected at most 3 fields".into(),
            });
        }
        let v = v as usize;
        max_id = max_id.max(u).max(v);
        edges.push((u, v, w));
    }
    let inferred = if edges.is_empty() { 0 } else { max_id + 1 };
    let vertices = vertices.unwrap_or(inferred).max(inferred);
    let spec = GraphSpec { vertices, edges };
    spec.validate()?;
    Ok(spec)
}

/// Parse a headerless dense CSV of floats into a matrix (rows = lines).
pub fn parse_dense_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line: ln + 1,
                    msg: format!("bad number {:?}: {}", tok.trim(), e),
                })
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse {
                    line: ln + 1,
                    msg: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "empty matrix".into(),
        });
    }
    let (nr, nc) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

// ---------------------------------------------------------------------------
// SVM dual
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SvmSpec {
    /// One training point per row.
    pub features: DMatrix<f64>,
    /// Labels, one of -1.0 or +1.0 per point.
    pub labels: Vec<f64>,
    /// Box constraint.
    pub c: f64,
    /// Gaussian kernel width.
    pub sigma: f64,
}

/// Gaussian kernel over a retained training set, shared by the dual
/// generator and the trained-model predictor.
#[derive(Debug, Clone)]
pub struct GaussianKernel {
    pub points: DMatrix<f64>,
    pub sigma: f64,
}

impl GaussianKernel {
    pub fn eval(&self, i: usize, j: usize) -> f64 {
        let d = self.points.row(i) - self.points.row(j);
        (-d.norm_squared() / (2.0 * self.sigma * self.sigma)).exp()
    }

    /// Kernel value between training point i and an arbitrary point.
    pub fn eval_point(&self, i: usize, x: &[f64]) -> f64 {
        let mut d2 = 0.0;
        for (k, &xk) in x.iter().enumerate() {
            let diff = self.points[(i, k)] - xk;
            d2 += diff * diff;
        }
        (-d2 / (2.0 * self.sigma * self.sigma)).exp()
    }
}

impl SvmSpec {
    fn validate(&self) -> Result<()> {
        let n = self.features.nrows();
        if n == 0 {
            return Err(Error::InvalidArgument("no training points".into()));
        }
        if n > KERNEL_POINT_CAP {
            return Err(Error::CapExceeded(format!(
                "{} training points exceed the dense-kernel cap of {}",
                n, KERNEL_POINT_CAP
            )));
        }
        if self.labels.len() != n {
            return Err(Error::Dimension(format!(
                "{} labels for {} points",
                self.labels.len(),
                n
            )));
        }
        if self.labels.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::InvalidArgument("labels must be +1 or -1".into()));
        }
        if !(self.c > 0.0) || !(self.sigma > 0.0) {
            return Err(Error::InvalidArgument(
                "C and sigma must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Kernelized soft-margin SVM dual: minimize 1/2 z'Qz - e'z subject to
/// y'z = 0 and 0 <= z <= C, with Q_ij = y_i y_j K(x_i, x_j).
pub fn gen_svm_dual(spec: &SvmSpec) -> Result<(Lcqp, GaussianKernel)> {
    spec.validate()?;
    let n = spec.features.nrows();
    let kernel = GaussianKernel {
        points: spec.features.clone(),
        sigma: spec.sigma,
    };
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let q = spec.labels[i] * spec.labels[j] * kernel.eval(i, j);
            h[(i, j)] = q;
            h[(j, i)] = q;
        }
    }
    let a_eq = SparseMatrix::from_triplets(
        1,
        n,
        spec.labels
            .iter()
            .enumerate()
            .map(|(j, &y)| (0, j, y))
            .collect::<Vec<_>>(),
    )?;
    let h_sp = dense_to_sparse(&h).mark_symmetric(0.0)?;
    let problem = Lcqp {
        h: h_sp,
        c: vec![-1.0; n],
        a_eq,
        b_eq: vec![0.0],
        a_ineq: SparseMatrix::zeros(0, n),
        b_ineq: Vec::new(),
        lb: vec![0.0; n],
        ub: vec![spec.c; n],
        kinds: vec![VarKind::Continuous; n],
        c0: 0.0,
    };
    Ok((problem, kernel))
}

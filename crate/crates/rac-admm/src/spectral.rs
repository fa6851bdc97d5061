//! Spectral convergence certification.
//!
//! One sweep of the solver on an equality-constrained QP
//! `min ½x'Hx + c'x  s.t. Ax = b` with ordered block composition σ acts on
//! z = (x, y) as the affine map z ⟼ M_σ z + L̄_σ⁻¹ b̄. This module builds
//! those per-sweep maps, averages them over the sampling distribution of σ
//! (every composition and order for random assembly; the p! orders of one
//! fixed partition otherwise), and certifies convergence through three
//! quantities:
//!
//! * ρ(E(M_σ)) < 1 — the expected iterate converges linearly;
//! * eig(QS) ⊂ [0, 4/3) with Q = E(L_σ⁻¹), S = H + βA'A — the eigenvalue
//!   range backing that radius bound;
//! * ρ(E(M_σ ⊗ M_σ)) < 1 — second moments contract, so the iterates
//!   converge almost surely, not merely in expectation.
//!
//! The gap between the last two matters: [`divergence_fixture`] ships a 6×6
//! system whose randomly assembled sweep has expected-map radius well below
//! one yet oscillates forever, while fixed-partition sweeps on the same
//! system converge. [`simulate_iterates`] replays the affine maps directly
//! so that behavior can be observed rather than inferred.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::blocks::{
    count_ordered_combinations, enumerate_partitions, random_partition, BlockPartition,
    UpdateOrder, ENUMERATION_CAP,
};
use crate::error::Error;
use crate::linalg::{eigenvalues, symmetric_eigenvalues, symmetric_sqrt};
use crate::problem::Lcqp;
use crate::Result;

/// Hard cap on (n+m)² for the second-moment (Kronecker) test: beyond this
/// the T matrix itself becomes unreasonably large to form and decompose.
pub const KRONECKER_DIM_CAP: usize = 40_000;

/// How to take expectations over sweep orders.
#[derive(Debug, Clone)]
pub enum ExpectationMethod {
    /// Enumerate every order exactly (subject to [`ENUMERATION_CAP`]).
    Exact,
    /// Uniform sampling when enumeration is infeasible.
    MonteCarlo { samples: usize, seed: u64 },
}

/// Which sweep distribution is being certified.
#[derive(Debug, Clone)]
pub enum SweepMode {
    /// Random assembly: every equal-size composition and every block order.
    Rac { p: usize },
    /// Fixed partition: the p! update orders of one composition.
    Rp { partition: BlockPartition },
}

/// The matrices describing one sweep with ordered composition σ.
pub struct MappingSet {
    pub beta: f64,
    /// S = H + βA'A.
    pub s: DMatrix<f64>,
    /// Block lower-triangular part of S in sweep order (diagonal included).
    pub l: DMatrix<f64>,
    /// R = L − S (strict block upper part, negated).
    pub r: DMatrix<f64>,
    /// Bordered [[L, 0], [βA, I]].
    pub l_bar: DMatrix<f64>,
    /// Bordered [[R, A'], [0, I]].
    pub r_bar: DMatrix<f64>,
    /// The iteration map M_σ = L̄⁻¹ R̄ on z = (x, y).
    pub map: DMatrix<f64>,
}

fn check_dims(h: &DMatrix<f64>, a: &DMatrix<f64>, beta: f64) -> Result<(usize, usize)> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(Error::Dimension(format!(
            "quadratic term is {}x{}",
            n,
            h.ncols()
        )));
    }
    if a.ncols() != n {
        return Err(Error::Dimension(format!(
            "constraint matrix has {} columns for {} variables",
            a.ncols(),
            n
        )));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "beta must be positive, got {}",
            beta
        )));
    }
    Ok((n, a.nrows()))
}

/// S = H + βA'A.
pub fn s_matrix(h: &DMatrix<f64>, a: &DMatrix<f64>, beta: f64) -> DMatrix<f64> {
    h + beta * a.transpose() * a
}

fn principal_block(s: &DMatrix<f64>, g: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(g.len(), g.len(), |i, j| s[(g[i], g[j])])
}

/// Per-block positive-definiteness flags: block k holds iff
/// H_{σk,σk} + βA_σk'A_σk ≻ 0 (tested by Cholesky).
pub fn block_pd_flags(
    h: &DMatrix<f64>,
    a: &DMatrix<f64>,
    beta: f64,
    partition: &BlockPartition,
) -> Result<Vec<bool>> {
    let (n, _) = check_dims(h, a, beta)?;
    if !partition.is_partition_of(n) {
        return Err(Error::InvalidArgument(
            "groups must partition the variable indices exactly".into(),
        ));
    }
    let s = s_matrix(h, a, beta);
    Ok(partition
        .groups()
        .iter()
        .map(|g| nalgebra::Cholesky::new(principal_block(&s, g)).is_some())
        .collect())
}

impl MappingSet {
    /// Build the sweep matrices for one ordered composition. Errors with the
    /// offending block index when a diagonal block is not positive definite.
    pub fn build(
        h: &DMatrix<f64>,
        a: &DMatrix<f64>,
        beta: f64,
        sigma: &BlockPartition,
    ) -> Result<MappingSet> {
        let (n, m) = check_dims(h, a, beta)?;
        if !sigma.is_partition_of(n) {
            return Err(Error::InvalidArgument(
                "groups must partition the variable indices exactly".into(),
            ));
        }
        let s = s_matrix(h, a, beta);
        for (k, g) in sigma.groups().iter().enumerate() {
            if nalgebra::Cholesky::new(principal_block(&s, g)).is_none() {
                return Err(Error::NotPositiveDefinite { block: Some(k) });
            }
        }

        // Block-rank lower-triangular part of S in the original index space.
        let mut rank = vec![0usize; n];
        for (k, g) in sigma.groups().iter().enumerate() {
            for &i in g {
                rank[i] = k;
            }
        }
        let l = DMatrix::from_fn(n, n, |i, j| if rank[i] >= rank[j] { s[(i, j)] } else { 0.0 });
        let r = &l - &s;

        let mut l_bar = DMatrix::zeros(n + m, n + m);
        l_bar.view_mut((0, 0), (n, n)).copy_from(&l);
        l_bar.view_mut((n, 0), (m, n)).copy_from(&(beta * a));
        l_bar
            .view_mut((n, n), (m, m))
            .copy_from(&DMatrix::identity(m, m));

        let mut r_bar = DMatrix::zeros(n + m, n + m);
        r_bar.view_mut((0, 0), (n, n)).copy_from(&r);
        r_bar.view_mut((0, n), (n, m)).copy_from(&a.transpose());
        r_bar
            .view_mut((n, n), (m, m))
            .copy_from(&DMatrix::identity(m, m));

        // M = L̄⁻¹R̄, computed by solving against the bordered triangle:
        // top rows solve L·U = [R, A']; bottom rows are [0, I] − βA·U.
        let lu = l.clone().lu();
        let top_rhs = r_bar.view((0, 0), (n, n + m)).into_owned();
        let top = lu.solve(&top_rhs).ok_or_else(|| {
            Error::Singular("sweep triangle is singular despite positive definite blocks".into())
        })?;
        let mut bottom = DMatrix::zeros(m, n + m);
        bottom
            .view_mut((0, n), (m, m))
            .copy_from(&DMatrix::identity(m, m));
        bottom -= beta * a * &top;
        let mut map = DMatrix::zeros(n + m, n + m);
        map.view_mut((0, 0), (n, n + m)).copy_from(&top);
        map.view_mut((n, 0), (m, n + m)).copy_from(&bottom);

        Ok(MappingSet {
            beta,
            s,
            l,
            r,
            l_bar,
            r_bar,
            map,
        })
    }

    /// Constant term of the affine iteration, L̄⁻¹ [−c + βA'b; βb]. The
    /// fixed point of z ⟼ map·z + constant is the KKT pair of the QP.
    pub fn constant_term(&self, a: &DMatrix<f64>, c: &[f64], b: &[f64]) -> Result<DVector<f64>> {
        let n = self.l.nrows();
        let m = a.nrows();
        if c.len() != n || b.len() != m {
            return Err(Error::Dimension(format!(
                "linear term length {} and rhs length {} for n = {}, m = {}",
                c.len(),
                b.len(),
                n,
                m
            )));
        }
        let cv = DVector::from_column_slice(c);
        let bv = DVector::from_column_slice(b);
        let top_rhs = self.beta * a.transpose() * &bv - cv;
        let lu = self.l.clone().lu();
        let top = lu
            .solve(&top_rhs)
            .ok_or_else(|| Error::Singular("sweep triangle is singular".into()))?;
        let bottom = self.beta * (&bv - a * &top);
        let mut out = DVector::zeros(n + m);
        out.rows_mut(0, n).copy_from(&top);
        out.rows_mut(n, m).copy_from(&bottom);
        Ok(out)
    }
}

fn permutations(p: usize) -> Vec<Vec<usize>> {
    fn rec(p: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == p {
            out.push(cur.clone());
            return;
        }
        for k in 0..p {
            if !used[k] {
                used[k] = true;
                cur.push(k);
                rec(p, cur, used, out);
                cur.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(p, &mut Vec::with_capacity(p), &mut vec![false; p], &mut out);
    out
}

fn require_equal_blocks(n: usize, p: usize) -> Result<()> {
    if p == 0 || n == 0 {
        return Err(Error::InvalidArgument("n and p must be at least 1".into()));
    }
    if n % p != 0 {
        return Err(Error::InvalidArgument(format!(
            "spectral analysis assumes equal-size blocks; p = {} does not divide n = {}",
            p, n
        )));
    }
    Ok(())
}

/// Visit every ordered composition in the random-assembly distribution.
fn for_each_ordered_composition(
    n: usize,
    p: usize,
    mut f: impl FnMut(&BlockPartition) -> Result<()>,
) -> Result<()> {
    require_equal_blocks(n, p)?;
    let combos = count_ordered_combinations(n, p)?;
    if combos > ENUMERATION_CAP {
        return Err(Error::CapExceeded(format!(
            "{} ordered compositions exceed the enumeration cap of {}; use Monte Carlo sampling",
            combos, ENUMERATION_CAP
        )));
    }
    let orders = permutations(p);
    for part in enumerate_partitions(n, p)? {
        for ord in &orders {
            f(&part.reordered(&UpdateOrder(ord.clone())))?;
        }
    }
    Ok(())
}

fn inverse_of_triangle(
    h: &DMatrix<f64>,
    a: &DMatrix<f64>,
    beta: f64,
    s: &DMatrix<f64>,
    sigma: &BlockPartition,
) -> Result<DMatrix<f64>> {
    let n = s.nrows();
    let mut rank = vec![0usize; n];
    for (k, g) in sigma.groups().iter().enumerate() {
        for &i in g {
            rank[i] = k;
        }
    }
    let l = DMatrix::from_fn(n, n, |i, j| if rank[i] >= rank[j] { s[(i, j)] } else { 0.0 });
    l.lu().try_inverse().ok_or_else(|| {
        // Surface which block breaks the assumption rather than a bare
        // singularity: recheck per-block definiteness for the message.
        match block_pd_flags(h, a, beta, sigma) {
            Ok(flags) => match flags.iter().position(|&ok| !ok) {
                Some(k) => Error::NotPositiveDefinite { block: Some(k) },
                None => Error::Singular("sweep triangle is singular".into()),
            },
            Err(e) => e,
        }
    })
}

/// Q = E(L_σ⁻¹) over the random-assembly distribution with p blocks.
pub fn expected_q(
    h: &DMatrix<f64>,
    a: &DMatrix<f64>,
    beta: f64,
    p: usize,
    method: &ExpectationMethod,
) -> Result<DMatrix<f64>> {
    let (n, _) = check_dims(h, a, beta)?;
    let s = s_matrix(h, a, beta);
    let mut sum = DMatrix::zeros(n, n);
    let mut count = 0usize;
    match method {
        ExpectationMethod::Exact => {
            for_each_ordered_composition(n, p, |sigma| {
                sum += inverse_of_triangle(h, a, beta, &s, sigma)?;
                count += 1;
                Ok(())
            })?;
        }
        ExpectationMethod::MonteCarlo { samples, seed } => {
            require_equal_blocks(n, p)?;
            if *samples == 0 {
                return Err(Error::InvalidArgument("sample count must be positive".into()));
            }
            let mut rng = ChaCha12Rng::seed_from_u64(*seed);
            for _ in 0..*samples {
                let sigma = random_partition(n, p, &mut rng, None)?;
                sum += inverse_of_triangle(h, a, beta, &s, &sigma)?;
                count += 1;
            }
        }
    }
    Ok(sum / count as f64)
}

/// Q_υ = E(L_σ⁻¹ | υ): average over the p! update orders of one fixed
/// partition. Always exact; p! must stay within the enumeration cap.
pub fn partition_q(
    h: &DMatrix<f64>,
    a: &DMatrix<f64>,
    beta: f64,
    partition: &BlockPartition,
) -> Result<DMatrix<f64>> {
    let (n, _) = check_dims(h, a, beta)?;
    if !partition.is_partition_of(n) {
        return Err(Error::InvalidArgument(
            "groups must partition the variable indices exactly".into(),
        ));
    }
    let p = partition.p();
    let orders: u128 = (1..=p as u128).product();
    if orders > ENUMERATION_CAP {
        return Err(Error::CapExceeded(format!(
            "{} update orders exceed the enumeration cap of {}",
            orders, ENUMERATION_CAP
        )));
    }
    let s = s_matrix(h, a, beta);
    let mut sum = DMatrix::zeros(n, n);
    for ord in permutations(p) {
        let sigma = partition.reordered(&UpdateOrder(ord));
        sum += inverse_of_triangle(h, a, beta, &s, &sigma)?;
    }
    Ok(sum / orders as f64)
}

/// Closed form of the expected map from Q and S:
/// [[I − QS, QA'], [β(AQS − A), I − βAQA']].
pub fn expected_map_from_q(
    q: &DMatrix<f64>,
    s: &DMatrix<f64>,
    a: &DMatrix<f64>,
    beta: f64,
) -> DMatrix<f64> {
    let n = q.nrows();
    let m = a.nrows();
    let qs = q * s;
    let qat = q * a.transpose();
    let mut out = DMatrix::zeros(n + m, n + m);
    out.view_mut((0, 0), (n, n))
        .copy_from(&(DMatrix::identity(n, n) - &qs));
    out.view_mut((0, n), (n, m)).copy_from(&qat);
    out.view_mut((n, 0), (m, n))
        .copy_from(&(beta * (a * &qs - a)));
    out.view_mut((n, n), (m, m))
        .copy_from(&(DMatrix::identity(m, m) - beta * a * &qat));
    out
}

/// Expected sweep map for a mode: closed form over the mode's Q.
pub fn expected_map(
    h: &DMatrix<f64>,
    a: &DMatrix<f64>,
    beta: f64,
    mode: &SweepMode,
    method: &ExpectationMethod,
) -> Result<DMatrix<f64>> {
    let q = match mode {
        SweepMode::Rac { p } => expected_q(h, a, beta, *p, method)?,
        SweepMode::Rp { partition } => partition_q(h, a, beta, partition)?,
    };
    Ok(expected_map_from_q(&q, &s_matrix(h, a, beta), a, beta))
}

/// Eigenvalue range of QS, computed on the symmetric similarity
/// Q^½ S Q^½ so the genuinely real spectrum stays free of complex noise.
/// Errors when Q is not positive definite.
pub fn eig_qs_range(q: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<(f64, f64)> {
    let root = symmetric_sqrt(&(0.5 * (q + q.transpose())))?;
    let w = &root * s * &root;
    let sym = 0.5 * (&w + w.transpose());
    let vals = symmetric_eigenvalues(&sym)?;
    Ok((vals[0], vals[vals.len() - 1]))
}

/// T = E(M_σ ⊗ M_σ) for the mode's sweep distribution.
pub fn second_moment_matrix(
    h: &DMatrix<f64>,
    a: &DMatrix<f64>,
    beta: f64,
    mode: &SweepMode,
    method: &ExpectationMethod,
) -> Result<DMatrix<f64>> {
    let (n, m) = check_dims(h, a, beta)?;
    let dim = (n + m) * (n + m);
    if dim > KRONECKER_DIM_CAP {
        return Err(Error::CapExceeded(format!(
            "(n+m)^2 = {} exceeds the second-moment size cap of {}",
            dim, KRONECKER_DIM_CAP
        )));
    }
    let mut sum = DMatrix::zeros(dim, dim);
    let mut count = 0usize;
    let mut add = |sigma: &BlockPartition| -> Result<()> {
        let ms = MappingSet::build(h, a, beta, sigma)?;
        sum += ms.map.kronecker(&ms.map);
        count += 1;
        Ok(())
    };
    match (mode, method) {
        (SweepMode::Rac { p }, ExpectationMethod::Exact) => {
            for_each_ordered_composition(n, *p, add)?;
        }
        (SweepMode::Rac { p }, ExpectationMethod::MonteCarlo { samples, seed }) => {
            require_equal_blocks(n, *p)?;
            if *samples == 0 {
                return Err(Error::InvalidArgument("sample count must be positive".into()));
            }
            let mut rng = ChaCha12Rng::seed_from_u64(*seed);
            for _ in 0..*samples {
                add(&random_partition(n, *p, &mut rng, None)?)?;
            }
        }
        (SweepMode::Rp { partition }, _) => {
            // p! orders are always enumerated exactly.
            let p = partition.p();
            let orders: u128 = (1..=p as u128).product();
            if orders > ENUMERATION_CAP {
                return Err(Error::CapExceeded(format!(
                    "{} update orders exceed the enumeration cap of {}",
                    orders, ENUMERATION_CAP
                )));
            }
            for ord in permutations(p) {
                add(&partition.reordered(&UpdateOrder(ord)))?;
            }
        }
    }
    Ok(sum / count as f64)
}

/// ρ(E(M_σ ⊗ M_σ)): below one, the squared distance to the fixed point is a
/// contraction in expectation and the sweeps converge almost surely.
pub fn second_moment_rho(
    h: &DMatrix<f64>,
    a: &DMatrix<f64>,
    beta: f64,
    mode: &SweepMode,
    method: &ExpectationMethod,
) -> Result<f64> {
    let t = second_moment_matrix(h, a, beta, mode, method)?;
    Ok(eigenvalues(&t)?.spectral_radius)
}

/// Side-by-side expected-map radii: random assembly versus every fixed
/// partition of the same block count.
#[derive(Debug, Clone, Serialize)]
pub struct RacRpComparison {
    pub rho_rac: f64,
    /// One radius per partition, aligned with `partitions`.
    pub rho_rp: Vec<f64>,
    pub partitions: Vec<Vec<Vec<usize>>>,
    /// Whether some fixed partition is no better than random assembly.
    pub some_partition_no_better: bool,
}

/// Compare the expected-map radius of random assembly against every fixed
/// partition with p blocks (exact enumeration only).
pub fn compare_rac_rp(
    h: &DMatrix<f64>,
    a: &DMatrix<f64>,
    beta: f64,
    p: usize,
) -> Result<RacRpComparison> {
    let (n, _) = check_dims(h, a, beta)?;
    require_equal_blocks(n, p)?;
    let s = s_matrix(h, a, beta);
    let q_rac = expected_q(h, a, beta, p, &ExpectationMethod::Exact)?;
    let rho_rac = eigenvalues(&expected_map_from_q(&q_rac, &s, a, beta))?.spectral_radius;
    let mut rho_rp = Vec::new();
    let mut partitions = Vec::new();
    for part in enumerate_partitions(n, p)? {
        let q = partition_q(h, a, beta, &part)?;
        rho_rp.push(eigenvalues(&expected_map_from_q(&q, &s, a, beta))?.spectral_radius);
        partitions.push(part.groups().to_vec());
    }
    let some_partition_no_better = rho_rp.iter().any(|&r| r >= rho_rac);
    Ok(RacRpComparison {
        rho_rac,
        rho_rp,
        partitions,
        some_partition_no_better,
    })
}

/// Replay the sweep maps on the homogeneous system (c = 0, b = 0), whose
/// KKT pair is the origin. Starting points are drawn from N(0, 5I); one
/// fresh σ is sampled per step. Returns one ‖z_k‖₂ trace per trial,
/// including the starting norm (length steps + 1).
pub fn simulate_iterates(
    h: &DMatrix<f64>,
    a: &DMatrix<f64>,
    beta: f64,
    mode: &SweepMode,
    steps: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let (n, m) = check_dims(h, a, beta)?;
    if let SweepMode::Rac { p } = mode {
        require_equal_blocks(n, *p)?;
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let gauss = Normal::new(0.0, 5.0f64.sqrt()).expect("fixed standard deviation");
    let mut traces = Vec::with_capacity(trials);
    for _ in 0..trials {
        let mut z = DVector::from_fn(n + m, |_, _| gauss.sample(&mut rng));
        let mut trace = Vec::with_capacity(steps + 1);
        trace.push(z.norm());
        for _ in 0..steps {
            let sigma = match mode {
                SweepMode::Rac { p } => random_partition(n, *p, &mut rng, None)?,
                SweepMode::Rp { partition } => {
                    partition.reordered(&UpdateOrder::random(partition.p(), &mut rng))
                }
            };
            let ms = MappingSet::build(h, a, beta, &sigma)?;
            z = &ms.map * z;
            trace.push(z.norm());
        }
        traces.push(trace);
    }
    Ok(traces)
}

/// The 6×6 constraint matrix (parameterized by γ, symmetric, entries 1 or
/// 1+γ in an anti-triangular pattern) whose homogeneous system makes the
/// randomly assembled sweep oscillate almost surely even though its
/// expected map is a strong contraction. Fixed partitions converge.
pub fn divergence_fixture(gamma: f64) -> DMatrix<f64> {
    DMatrix::from_fn(6, 6, |i, j| if i + j > 5 { 1.0 + gamma } else { 1.0 })
}

/// Everything the certification computes for one mode, JSON-serializable.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    /// "rac" for random assembly, "rp" for a fixed partition.
    pub mode: String,
    /// The fixed partition's groups (fixed-partition mode only).
    pub partition: Option<Vec<Vec<usize>>>,
    /// Whether expectations were enumerated exactly.
    pub exact: bool,
    /// Monte Carlo sample count when not exact.
    pub samples: Option<usize>,
    /// Every per-block quadratic was verified positive definite.
    pub assumption_ok: bool,
    /// ρ(E(M_σ)).
    pub rho_expected_map: f64,
    /// ρ(E(M_σ ⊗ M_σ)); None when (n+m)² exceeds the size cap.
    pub rho_second_moment: Option<f64>,
    pub eig_qs_min: f64,
    pub eig_qs_max: f64,
    /// Expected-map radius per fixed partition (exact random-assembly runs
    /// only), aligned with enumeration order.
    pub rho_fixed_partitions: Option<Vec<f64>>,
    pub expected_convergent: bool,
    pub almost_sure_convergent: Option<bool>,
}

/// Extract the dense (H, A) pair this analysis understands from a problem.
/// Inequality rows and finite bounds are outside the linear-map model.
pub fn dense_pair_from_problem(problem: &Lcqp) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if problem.a_ineq.nrows() > 0 {
        return Err(Error::Unsupported(
            "spectral certification covers equality-constrained problems; \
             inequality rows present"
                .into(),
        ));
    }
    if problem
        .lb
        .iter()
        .chain(problem.ub.iter())
        .any(|v| v.is_finite())
    {
        return Err(Error::Unsupported(
            "spectral certification covers equality-constrained problems; \
             finite variable bounds present"
                .into(),
        ));
    }
    Ok((problem.h.to_dense(), problem.a_eq.to_dense()))
}

/// Run the full certification for one mode: expected-map radius, QS
/// eigenvalue range, second-moment radius, and (for exact random assembly)
/// the per-partition radii. Errors when a sampled block violates per-block
/// positive definiteness.
pub fn certify(
    h: &DMatrix<f64>,
    a: &DMatrix<f64>,
    beta: f64,
    mode: &SweepMode,
    method: &ExpectationMethod,
) -> Result<SpectralReport> {
    let (n, m) = check_dims(h, a, beta)?;
    let s = s_matrix(h, a, beta);

    let (p, mode_name, partition_field) = match mode {
        SweepMode::Rac { p } => (*p, "rac".to_string(), None),
        SweepMode::Rp { partition } => {
            if !partition.is_partition_of(n) {
                return Err(Error::InvalidArgument(
                    "groups must partition the variable indices exactly".into(),
                ));
            }
            (
                partition.p(),
                "rp".to_string(),
                Some(partition.groups().to_vec()),
            )
        }
    };

    // Verify per-block definiteness across the compositions the mode can
    // sample; any failure is fatal for the analysis and reported by block.
    let mut assumption_ok = true;
    match mode {
        SweepMode::Rp { partition } => {
            for (k, ok) in block_pd_flags(h, a, beta, partition)?.iter().enumerate() {
                if !ok {
                    return Err(Error::NotPositiveDefinite { block: Some(k) });
                }
                assumption_ok &= ok;
            }
        }
        SweepMode::Rac { p } => {
            require_equal_blocks(n, *p)?;
            match method {
                ExpectationMethod::Exact => {
                    for part in enumerate_partitions(n, *p)? {
                        for (k, ok) in block_pd_flags(h, a, beta, &part)?.iter().enumerate() {
                            if !ok {
                                return Err(Error::NotPositiveDefinite { block: Some(k) });
                            }
                            assumption_ok &= ok;
                        }
                    }
                }
                ExpectationMethod::MonteCarlo { samples, seed } => {
                    // Sampled spot-check mirroring the estimation draw.
                    let mut rng = ChaCha12Rng::seed_from_u64(seed.wrapping_add(1));
                    let spot = (*samples).min(64);
                    for _ in 0..spot {
                        let part = random_partition(n, *p, &mut rng, None)?;
                        for (k, ok) in block_pd_flags(h, a, beta, &part)?.iter().enumerate() {
                            if !ok {
                                return Err(Error::NotPositiveDefinite { block: Some(k) });
                            }
                            assumption_ok &= ok;
                        }
                    }
                }
            }
        }
    }

    let q = match mode {
        SweepMode::Rac { p } => expected_q(h, a, beta, *p, method)?,
        SweepMode::Rp { partition } => partition_q(h, a, beta, partition)?,
    };
    let map = expected_map_from_q(&q, &s, a, beta);
    let rho_expected_map = eigenvalues(&map)?.spectral_radius;
    let (eig_qs_min, eig_qs_max) = eig_qs_range(&q, &s)?;

    let rho_second_moment = match second_moment_rho(h, a, beta, mode, method) {
        Ok(rho) => Some(rho),
        Err(Error::CapExceeded(_)) => None,
        Err(e) => return Err(e),
    };

    let rho_fixed_partitions = match (mode, method) {
        (SweepMode::Rac { p }, ExpectationMethod::Exact) => {
            let mut radii = Vec::new();
            for part in enumerate_partitions(n, *p)? {
                let qp = partition_q(h, a, beta, &part)?;
                radii.push(eigenvalues(&expected_map_from_q(&qp, &s, a, beta))?.spectral_radius);
            }
            Some(radii)
        }
        _ => None,
    };

    let (exact, samples) = match method {
        ExpectationMethod::Exact => (true, None),
        ExpectationMethod::MonteCarlo { samples, .. } => (false, Some(*samples)),
    };

    Ok(SpectralReport {
        n,
        m,
        p,
        mode: mode_name,
        partition: partition_field,
        exact,
        samples,
        assumption_ok,
        rho_expected_map,
        rho_second_moment,
        eig_qs_min,
        eig_qs_max,
        rho_fixed_partitions,
        expected_convergent: rho_expected_map < 1.0,
        almost_sure_convergent: rho_second_moment.map(|r| r < 1.0),
    })
}

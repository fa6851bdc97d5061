//! `rac gen` — write benchmark problem manifests from generator specs.
//!
//! Families: `random` (seeded LCQP with controlled spectrum and constraint
//! density), `markowitz` (portfolio model from return observations, with
//! optional cardinality/binary and low-rank variants), `qap` (relaxed or
//! binary assignment from flow/distance matrices), `maxcut` /
//! `maxbisection` (edge-list graphs), `svm` (kernelized classifier dual from
//! a CSV whose last column is the ±1 label).

use std::fs;
use std::path::PathBuf;

use clap::{Args, Subcommand};
use nalgebra::DMatrix;
use rac_admm::generators::{
    gen_markowitz, gen_maxbisection, gen_maxcut, gen_qap, gen_random_lcqp, gen_svm_dual,
    parse_dense_csv, parse_edge_list, MarkowitzData, MarkowitzSpec, QapSpec, RandomQpSpec, SvmSpec,
};
use rac_admm::problem::{save_problem, Lcqp};
use rac_admm::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;
use serde_json::json;

use crate::report;

#[derive(Args, Debug)]
pub struct GenArgs {
    #[command(subcommand)]
    pub family: Family,
}

#[derive(Args, Debug, Clone)]
pub struct OutArgs {
    /// Directory the manifest and its matrix files are written into.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Base name of the manifest.
    #[arg(long)]
    pub name: String,
}

#[derive(Subcommand, Debug)]
pub enum Family {
    /// Random LCQP with controlled condition number and orientation bias.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        m_eq: usize,
        #[arg(long, default_value_t = 0)]
        m_ineq: usize,
        /// Fraction of nonzeros in the quadratic coupling and constraints.
        #[arg(long, default_value_t = 1.0)]
        density: f64,
        /// Orientation-bias weight of the shared random subspace.
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
        /// Rank-one e e' admixture.
        #[arg(long, default_value_t = 0.0)]
        zeta: f64,
        /// Target condition number of the diagonal core.
        #[arg(long, default_value_t = 100.0)]
        condition: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Portfolio selection from return observations.
    Markowitz {
        /// Number of assets.
        #[arg(long)]
        n: usize,
        /// Return observations to synthesize when no CSV is given.
        #[arg(long)]
        observations: Option<usize>,
        /// CSV of return observations (one row per period) instead of
        /// synthetic data.
        #[arg(long)]
        returns_csv: Option<PathBuf>,
        /// Risk tolerance multiplying the mean-return term.
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        /// Ridge regularizer.
        #[arg(long, default_value_t = 1e-5)]
        kappa: f64,
        /// Pick exactly this many assets (binary variant).
        #[arg(long)]
        cardinality: Option<usize>,
        /// Keep the factored form with a diagonal quadratic term.
        #[arg(long)]
        low_rank: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Assignment problem from flow and distance matrices.
    Qap {
        /// CSV of the flow matrix.
        #[arg(long, conflicts_with = "random")]
        flow_csv: Option<PathBuf>,
        /// CSV of the distance matrix.
        #[arg(long, conflicts_with = "random")]
        distance_csv: Option<PathBuf>,
        /// Generate random symmetric flow/distance matrices of this size.
        #[arg(long)]
        random: Option<usize>,
        /// Diagonal-dominance slack of the convexified quadratic term.
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        /// Continuous relaxation instead of binary variables.
        #[arg(long)]
        relaxed: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Max-cut as unconstrained binary QP from an edge list.
    Maxcut {
        /// Edge list file: `u v [weight]` per line, `#` comments.
        #[arg(long)]
        edges: PathBuf,
        /// Vertex count override (otherwise inferred from the edges).
        #[arg(long)]
        vertices: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Max-bisection: max-cut plus a balanced-partition row.
    Maxbisection {
        #[arg(long)]
        edges: PathBuf,
        #[arg(long)]
        vertices: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Kernelized classifier dual from a CSV (last column: ±1 label).
    Svm {
        #[arg(long)]
        data_csv: PathBuf,
        /// Box bound of the dual.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// Gaussian kernel width.
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Serialize)]
struct GenConfig {
    family: String,
    detail: serde_json::Value,
    out_dir: String,
    name: String,
}

fn finish(
    problem: &Lcqp,
    out: &OutArgs,
    seed: u64,
    family: &str,
    detail: serde_json::Value,
) -> Result<u8> {
    let manifest = save_problem(problem, &out.out_dir, &out.name)?;
    let cfg = GenConfig {
        family: family.into(),
        detail,
        out_dir: out.out_dir.display().to_string(),
        name: out.name.clone(),
    };
    let payload = json!({
        "manifest": manifest.display().to_string(),
        "variables": problem.n(),
        "equalities": problem.m_eq(),
        "inequalities": problem.m_ineq(),
    });
    report::write_json(&None, &report::envelope(seed, &cfg, payload)?)?;
    Ok(0)
}

pub fn run(args: &GenArgs) -> Result<u8> {
    match &args.family {
        Family::Random {
            n,
            m_eq,
            m_ineq,
            density,
            eta,
            zeta,
            condition,
            seed,
            out,
        } => {
            let spec = RandomQpSpec {
                n: *n,
                m_eq: *m_eq,
                m_ineq: *m_ineq,
                density: *density,
                eta: *eta,
                zeta: *zeta,
                condition: *condition,
                seed: *seed,
            };
            let problem = gen_random_lcqp(&spec)?;
            finish(
                &problem,
                out,
                *seed,
                "random",
                json!({
                    "n": n, "m_eq": m_eq, "m_ineq": m_ineq, "density": density,
                    "eta": eta, "zeta": zeta, "condition": condition,
                }),
            )
        }
        Family::Markowitz {
            n,
            observations,
            returns_csv,
            tau,
            kappa,
            cardinality,
            low_rank,
            seed,
            out,
        } => {
            let returns = match returns_csv {
                Some(path) => {
                    let text = fs::read_to_string(path)?;
                    let m = parse_dense_csv(&text)?;
                    if m.ncols() != *n {
                        return Err(Error::Dimension(format!(
                            "returns CSV has {} columns but --n is {n}",
                            m.ncols()
                        )));
                    }
                    m
                }
                None => synthetic_returns(*n, observations.unwrap_or(2 * n), *seed),
            };
            let spec = MarkowitzSpec {
                data: MarkowitzData::Returns(returns),
                tau: *tau,
                kappa: *kappa,
                cardinality: *cardinality,
                low_rank: *low_rank,
            };
            let problem = gen_markowitz(&spec)?;
            finish(
                &problem,
                out,
                *seed,
                "markowitz",
                json!({
                    "n": n, "observations": observations, "returns_csv": returns_csv,
                    "tau": tau, "kappa": kappa, "cardinality": cardinality,
                    "low_rank": low_rank,
                }),
            )
        }
        Family::Qap {
            flow_csv,
            distance_csv,
            random,
            delta,
            relaxed,
            seed,
            out,
        } => {
            let (flow, distance) = match (flow_csv, distance_csv, random) {
                (Some(f), Some(d), None) => {
                    let flow = parse_dense_csv(&fs::read_to_string(f)?)?;
                    let distance = parse_dense_csv(&fs::read_to_string(d)?)?;
                    (flow, distance)
                }
                (None, None, Some(r)) => {
                    let mut rng = ChaCha12Rng::seed_from_u64(*seed);
                    (random_symmetric(*r, &mut rng), random_symmetric(*r, &mut rng))
                }
                _ => {
                    return Err(Error::InvalidArgument(
                        "pass either --flow-csv with --distance-csv, or --random SIZE".into(),
                    ))
                }
            };
            let spec = QapSpec {
                flow,
                distance,
                delta: *delta,
                relaxed: *relaxed,
            };
            let problem = gen_qap(&spec)?;
            finish(
                &problem,
                out,
                *seed,
                "qap",
                json!({
                    "flow_csv": flow_csv, "distance_csv": distance_csv,
                    "random": random, "delta": delta, "relaxed": relaxed,
                }),
            )
        }
        Family::Maxcut {
            edges,
            vertices,
            out,
        } => {
            let spec = parse_edge_list(&fs::read_to_string(edges)?, *vertices)?;
            let problem = gen_maxcut(&spec)?;
            finish(
                &problem,
                out,
                0,
                "maxcut",
                json!({"edges": edges, "vertices": vertices}),
            )
        }
        Family::Maxbisection {
            edges,
            vertices,
            out,
        } => {
            let spec = parse_edge_list(&fs::read_to_string(edges)?, *vertices)?;
            let problem = gen_maxbisection(&spec)?;
            finish(
                &problem,
                out,
                0,
                "maxbisection",
                json!({"edges": edges, "vertices": vertices}),
            )
        }
        Family::Svm {
            data_csv,
            c,
            sigma,
            out,
        } => {
            let table = parse_dense_csv(&fs::read_to_string(data_csv)?)?;
            if table.ncols() < 2 {
                return Err(Error::InvalidArgument(
                    "the data CSV needs at least one feature column and the label column".into(),
                ));
            }
            let r = table.ncols() - 1;
            let features = DMatrix::from_fn(table.nrows(), r, |i, j| table[(i, j)]);
            let labels: Vec<f64> = (0..table.nrows()).map(|i| table[(i, r)]).collect();
            let spec = SvmSpec {
                features,
                labels,
                c: *c,
                sigma: *sigma,
            };
            let (problem, _kernel) = gen_svm_dual(&spec)?;
            finish(
                &problem,
                out,
                0,
                "svm",
                json!({"data_csv": data_csv, "c": c, "sigma": sigma}),
            )
        }
    }
}

/// Seeded synthetic return observations with a mild common factor so the
/// covariance is dense and well-posed.
fn synthetic_returns(n: usize, k: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let loadings: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
    DMatrix::from_fn(k, n, |_, j| {
        // One market-factor draw per cell plus idiosyncratic noise.
        loadings[j] * rng.random_range(-1.0..1.0) + 0.5 * rng.random_range(-1.0..1.0)
    })
}

fn random_symmetric(r: usize, rng: &mut ChaCha12Rng) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(r, r);
    for i in 0..r {
        for j in (i + 1)..r {
            let v: f64 = rng.random_range(0.0..10.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

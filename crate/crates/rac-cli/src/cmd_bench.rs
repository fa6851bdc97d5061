//! `rac bench` — sweep solver settings over a problem and emit a CSV.
//!
//! The grid is the cross product of `--modes`, `--blocks`, `--betas`, and
//! `--eps-list`, visited in that nesting order, one CSV row per cell:
//!
//! ```text
//! mode,p,beta,eps,status,iterations,seconds,r_prim,r_dual,objective
//! ```
//!
//! Wall-clock time wraps only the solve call. Rows appear in a deterministic
//! order, and with a fixed `--seed` the whole table is reproducible.

use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use rac_admm::admm::{solve, SolverOptions};
use rac_admm::problem::load_problem;
use rac_admm::Result;
use serde::Serialize;
use serde_json::json;

use crate::cmd_solve::parse_mode;
use crate::report;

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Problem manifest to sweep over.
    #[arg(long)]
    pub problem: PathBuf,
    /// Update orders to compare (rac, rp, cyclic, distributed, single).
    #[arg(long, value_delimiter = ',', default_value = "rac")]
    pub modes: Vec<String>,
    /// Block counts to sweep.
    #[arg(long, value_delimiter = ',', required = true)]
    pub blocks: Vec<usize>,
    /// Penalty values to sweep.
    #[arg(long, value_delimiter = ',', default_value = "1.0")]
    pub betas: Vec<f64>,
    /// Stopping tolerances to sweep.
    #[arg(long = "eps-list", value_delimiter = ',', default_value = "1e-5")]
    pub eps_list: Vec<f64>,
    /// Iteration cap per cell.
    #[arg(long, default_value_t = 4000)]
    pub max_iter: usize,
    /// Wall-clock cap per cell, in seconds.
    #[arg(long)]
    pub max_time_secs: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV output path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct BenchConfig {
    problem: String,
    modes: Vec<String>,
    blocks: Vec<usize>,
    betas: Vec<f64>,
    eps_list: Vec<f64>,
    max_iter: usize,
    max_time_secs: Option<f64>,
    out: String,
}

pub const CSV_HEADER: &str = "mode,p,beta,eps,status,iterations,seconds,r_prim,r_dual,objective";

pub fn run(args: &BenchArgs) -> Result<u8> {
    let problem = load_problem(&args.problem)?;
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    let mut rows = 0usize;

    for mode_name in &args.modes {
        let mode = parse_mode(mode_name)?;
        for &p in &args.blocks {
            for &beta in &args.betas {
                for &eps in &args.eps_list {
                    let options = SolverOptions {
                        mode,
                        p,
                        beta,
                        eps,
                        max_iter: args.max_iter,
                        max_time: args
                            .max_time_secs
                            .map(std::time::Duration::from_secs_f64),
                        seed: args.seed,
                        ..SolverOptions::default()
                    };
                    let clock = Instant::now();
                    let result = solve(&problem, &options)?;
                    let seconds = clock.elapsed().as_secs_f64();
                    csv.push_str(&format!(
                        "{},{},{},{},{},{},{:.6},{:.6e},{:.6e},{:.10e}\n",
                        mode_name,
                        p,
                        beta,
                        eps,
                        report::status_str(result.status),
                        result.iterations,
                        seconds,
                        result.residuals.r_prim,
                        result.residuals.r_dual,
                        result.objective,
                    ));
                    rows += 1;
                }
            }
        }
    }

    report::write_text(&args.out, &csv)?;
    let cfg = BenchConfig {
        problem: args.problem.display().to_string(),
        modes: args.modes.clone(),
        blocks: args.blocks.clone(),
        betas: args.betas.clone(),
        eps_list: args.eps_list.clone(),
        max_iter: args.max_iter,
        max_time_secs: args.max_time_secs,
        out: args.out.display().to_string(),
    };
    let payload = json!({
        "rows": rows,
        "csv": args.out.display().to_string(),
    });
    report::write_json(&None, &report::envelope(args.seed, &cfg, payload)?)?;
    Ok(0)
}

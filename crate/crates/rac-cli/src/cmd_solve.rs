//! `rac solve` — run the continuous multi-block solver on a manifest.

use std::path::PathBuf;
use std::time::Duration;

use clap::Args;
use rac_admm::admm::{solve, Grouping, Mode, PartialLagrangian, SolverOptions};
use rac_admm::problem::load_problem;
use rac_admm::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::report;

#[derive(Args, Debug)]
pub struct SolveArgs {
    /// Problem manifest (JSON).
    #[arg(long)]
    pub problem: Option<PathBuf>,
    /// JSON config file; explicit flags win over file values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Sweep mode: rac, rp, cyclic, distributed, single.
    #[arg(long)]
    pub mode: Option<String>,
    /// Number of blocks.
    #[arg(long)]
    pub blocks: Option<usize>,
    /// Augmented Lagrangian penalty.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Relative residual tolerance.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    pub max_time_secs: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Variable grouping: none or auto (constraint-structure detection).
    #[arg(long)]
    pub grouping: Option<String>,
    /// Enforce variable bounds inside block sub-problems instead of through
    /// the split copy.
    #[arg(long)]
    pub bounds_local: bool,
    /// Result JSON path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Residual trace CSV path.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

/// File-config mirror of the flags; unknown keys are rejected.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct FileConfig {
    problem: Option<String>,
    mode: Option<String>,
    blocks: Option<usize>,
    beta: Option<f64>,
    eps: Option<f64>,
    max_iter: Option<usize>,
    max_time_secs: Option<f64>,
    seed: Option<u64>,
    grouping: Option<String>,
    bounds_local: Option<bool>,
    /// Equality rows enforced exactly inside blocks (partial Lagrangian).
    local_eq: Option<Vec<usize>>,
    /// Inequality rows enforced exactly inside blocks.
    local_ineq: Option<Vec<usize>>,
}

/// The effective configuration echoed into the output.
#[derive(Serialize, Clone)]
pub struct EffectiveConfig {
    pub problem: String,
    pub mode: String,
    pub blocks: usize,
    pub beta: f64,
    pub eps: f64,
    pub max_iter: usize,
    pub max_time_secs: Option<f64>,
    pub seed: u64,
    pub grouping: String,
    pub bounds_local: bool,
    pub local_eq: Vec<usize>,
    pub local_ineq: Vec<usize>,
}

pub fn parse_mode(name: &str) -> Result<Mode> {
    match name {
        "rac" => Ok(Mode::Rac),
        "rp" => Ok(Mode::Rp),
        "cyclic" => Ok(Mode::Cyclic),
        "distributed" => Ok(Mode::Distributed),
        "single" => Ok(Mode::SingleBlock),
        other => Err(Error::InvalidArgument(format!(
            "unknown mode '{other}' (expected rac, rp, cyclic, distributed, or single)"
        ))),
    }
}

fn parse_grouping(name: &str) -> Result<Grouping> {
    match name {
        "none" => Ok(Grouping::None),
        "auto" => Ok(Grouping::Auto),
        other => Err(Error::InvalidArgument(format!(
            "unknown grouping '{other}' (expected none or auto)"
        ))),
    }
}

pub fn merge(args: &SolveArgs) -> Result<EffectiveConfig> {
    let file: FileConfig = report::load_config(&args.config)?;
    let problem = args
        .problem
        .as_ref()
        .map(|p| p.display().to_string())
        .or(file.problem)
        .ok_or_else(|| {
            Error::InvalidArgument("no problem given: pass --problem or set it in --config".into())
        })?;
    Ok(EffectiveConfig {
        problem,
        mode: args.mode.clone().or(file.mode).unwrap_or_else(|| "rac".into()),
        blocks: args.blocks.or(file.blocks).unwrap_or(1),
        beta: args.beta.or(file.beta).unwrap_or(1.0),
        eps: args.eps.or(file.eps).unwrap_or(1e-5),
        max_iter: args.max_iter.or(file.max_iter).unwrap_or(4000),
        max_time_secs: args.max_time_secs.or(file.max_time_secs),
        seed: args.seed.or(file.seed).unwrap_or(0),
        grouping: args
            .grouping
            .clone()
            .or(file.grouping)
            .unwrap_or_else(|| "none".into()),
        bounds_local: args.bounds_local || file.bounds_local.unwrap_or(false),
        local_eq: file.local_eq.unwrap_or_default(),
        local_ineq: file.local_ineq.unwrap_or_default(),
    })
}

pub fn solver_options(cfg: &EffectiveConfig) -> Result<SolverOptions> {
    let partial = if cfg.bounds_local || !cfg.local_eq.is_empty() || !cfg.local_ineq.is_empty() {
        Some(PartialLagrangian {
            local_eq: cfg.local_eq.clone(),
            local_ineq: cfg.local_ineq.clone(),
            bounds_local: cfg.bounds_local,
        })
    } else {
        None
    };
    Ok(SolverOptions {
        mode: parse_mode(&cfg.mode)?,
        p: cfg.blocks,
        beta: cfg.beta,
        eps: cfg.eps,
        max_iter: cfg.max_iter,
        max_time: cfg.max_time_secs.map(Duration::from_secs_f64),
        seed: cfg.seed,
        grouping: parse_grouping(&cfg.grouping)?,
        partial,
        initial_x: None,
    })
}

pub fn run(args: &SolveArgs) -> Result<u8> {
    let cfg = merge(args)?;
    let problem = load_problem(&cfg.problem)?;
    let options = solver_options(&cfg)?;
    let result = solve(&problem, &options)?;

    if let Some(path) = &args.trace {
        report::write_text(path, &result.trace_csv())?;
    }
    let viol = report::violation(&problem, &result.x);
    let payload = json!({
        "status": report::status_str(result.status),
        "iterations": result.iterations,
        "objective": result.objective,
        "x": result.x,
        "residuals": report::residuals_json(&result.residuals),
        "violation": viol,
        "notes": result.notes,
    });
    report::write_json(&args.out, &report::envelope(cfg.seed, &cfg, payload)?)?;
    Ok(report::exit_for(result.status))
}

//! `rac analyze` — spectral certification of sweep convergence for
//! equality-constrained problems, plus the built-in oscillating fixture.

use std::path::PathBuf;

use clap::Args;
use nalgebra::DMatrix;
use rac_admm::blocks::enumerate_partitions;
use rac_admm::problem::load_problem;
use rac_admm::spectral::{
    certify, dense_pair_from_problem, divergence_fixture, simulate_iterates, ExpectationMethod,
    SweepMode,
};
use rac_admm::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::report;

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Equality-constrained problem manifest (JSON).
    #[arg(long, conflicts_with = "fixture")]
    pub problem: Option<PathBuf>,
    /// Built-in fixture name; `example2` is the 6-variable oscillating
    /// system whose random assembly diverges almost surely.
    #[arg(long)]
    pub fixture: Option<String>,
    /// Fixture parameter (entries are 1 or 1+gamma).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Augmented Lagrangian penalty entering S = H + beta A'A.
    #[arg(long)]
    pub beta: Option<f64>,
    /// JSON config file; explicit flags win over file values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Sweep distribution to certify: rac or rp.
    #[arg(long)]
    pub mode: Option<String>,
    /// Number of blocks (must divide the variable count).
    #[arg(long)]
    pub blocks: Option<usize>,
    /// Index into the canonical partition enumeration (rp mode; 0 is the
    /// consecutive-chunks partition).
    #[arg(long)]
    pub partition: Option<usize>,
    /// Estimate expectations from this many sampled sweeps instead of exact
    /// enumeration.
    #[arg(long)]
    pub mc_samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also replay this many sweep steps on the homogeneous system.
    #[arg(long)]
    pub simulate_steps: Option<usize>,
    /// Trajectories to replay.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Report JSON path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct FileConfig {
    problem: Option<String>,
    fixture: Option<String>,
    gamma: Option<f64>,
    beta: Option<f64>,
    mode: Option<String>,
    blocks: Option<usize>,
    partition: Option<usize>,
    mc_samples: Option<usize>,
    seed: Option<u64>,
    simulate_steps: Option<usize>,
    trials: Option<usize>,
}

#[derive(Serialize, Clone)]
struct EffectiveConfig {
    source: String,
    gamma: Option<f64>,
    beta: f64,
    mode: String,
    blocks: usize,
    partition: Option<usize>,
    mc_samples: Option<usize>,
    seed: u64,
    simulate_steps: usize,
    trials: usize,
}

pub fn run(args: &AnalyzeArgs) -> Result<u8> {
    let file: FileConfig = report::load_config(&args.config)?;

    let fixture = args.fixture.clone().or(file.fixture);
    let problem_path = args
        .problem
        .as_ref()
        .map(|p| p.display().to_string())
        .or(file.problem);
    let mode_name = args
        .mode
        .clone()
        .or(file.mode)
        .unwrap_or_else(|| "rac".into());
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let beta = args.beta.or(file.beta).unwrap_or(1.0);

    // Assemble the dense (H, A) pair this analysis runs on.
    let (h, a, source, gamma) = match (&fixture, &problem_path) {
        (Some(name), None) => {
            if name != "example2" {
                return Err(Error::InvalidArgument(format!(
                    "unknown fixture '{name}' (available: example2)"
                )));
            }
            let g = args.gamma.or(file.gamma).unwrap_or(1.0);
            let a = divergence_fixture(g);
            let h = DMatrix::zeros(6, 6);
            (h, a, format!("fixture:{name}"), Some(g))
        }
        (None, Some(path)) => {
            let problem = load_problem(path)?;
            let (h, a) = dense_pair_from_problem(&problem)?;
            (h, a, path.clone(), None)
        }
        (None, None) => {
            return Err(Error::InvalidArgument(
                "nothing to analyze: pass --problem or --fixture example2".into(),
            ))
        }
        (Some(_), Some(_)) => {
            return Err(Error::InvalidArgument(
                "--problem and --fixture are mutually exclusive".into(),
            ))
        }
    };

    let n = h.nrows();
    let default_blocks = if fixture.is_some() { 3 } else { 1 };
    let blocks = args.blocks.or(file.blocks).unwrap_or(default_blocks);
    let partition_idx = args.partition.or(file.partition);
    let mode = match mode_name.as_str() {
        "rac" => SweepMode::Rac { p: blocks },
        "rp" => {
            let idx = partition_idx.unwrap_or(0);
            let all = enumerate_partitions(n, blocks)?;
            let part = all.get(idx).cloned().ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "partition index {idx} out of range: {} partitions of {n} into {blocks}",
                    all.len()
                ))
            })?;
            SweepMode::Rp { partition: part }
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown mode '{other}' (expected rac or rp)"
            )))
        }
    };
    let mc_samples = args.mc_samples.or(file.mc_samples);
    let method = match mc_samples {
        Some(samples) => ExpectationMethod::MonteCarlo { samples, seed },
        None => ExpectationMethod::Exact,
    };

    let cfg = EffectiveConfig {
        source,
        gamma,
        beta,
        mode: mode_name,
        blocks,
        partition: partition_idx,
        mc_samples,
        seed,
        simulate_steps: args.simulate_steps.or(file.simulate_steps).unwrap_or(0),
        trials: args.trials.or(file.trials).unwrap_or(10),
    };

    let rep = certify(&h, &a, beta, &mode, &method)?;
    let mut payload = serde_json::to_value(&rep)?;

    if cfg.simulate_steps > 0 {
        let traces = simulate_iterates(&h, &a, beta, &mode, cfg.simulate_steps, cfg.trials, seed)?;
        let final_norms: Vec<f64> = traces.iter().map(|t| *t.last().unwrap()).collect();
        let mut sorted = final_norms.clone();
        sorted.sort_by(|x, y| x.total_cmp(y));
        let median = sorted[sorted.len() / 2];
        payload["simulation"] = json!({
            "steps": cfg.simulate_steps,
            "trials": cfg.trials,
            "final_norms": final_norms,
            "median_final_norm": median,
        });
    }

    report::write_json(&args.out, &report::envelope(seed, &cfg, payload)?)?;
    Ok(0)
}

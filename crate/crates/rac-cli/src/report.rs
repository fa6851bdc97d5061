//! Shared output plumbing: the JSON envelope, status/exit-code mapping, and
//! absolute constraint-violation recomputation.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rac_admm::admm::{Residuals, Status};
use rac_admm::problem::Lcqp;
use rac_admm::Result;
use serde::Serialize;
use serde_json::{json, Value};

pub fn status_str(s: Status) -> &'static str {
    match s {
        Status::Optimal => "optimal",
        Status::IterLimit => "iter_limit",
        Status::TimeLimit => "time_limit",
        Status::Diverged => "diverged",
    }
}

/// 0 for a certified optimum, 2 for every limit-style stop.
pub fn exit_for(s: Status) -> u8 {
    if s == Status::Optimal {
        0
    } else {
        2
    }
}

pub fn residuals_json(r: &Residuals) -> Value {
    json!({
        "r_prim": r.r_prim,
        "r_dual": r.r_dual,
        "r_eq": r.r_eq,
        "r_ineq": r.r_ineq,
        "r_bounds": r.r_bounds,
    })
}

/// Absolute (unscaled, unnormalized) constraint violations recomputed at x,
/// independent of whatever the solver tracked internally.
#[derive(Serialize)]
pub struct Violation {
    pub eq: f64,
    pub ineq: f64,
    pub bounds: f64,
    pub max: f64,
}

pub fn violation(problem: &Lcqp, x: &[f64]) -> Violation {
    let ax_eq = problem.a_eq.matvec(x);
    let eq = ax_eq
        .iter()
        .zip(&problem.b_eq)
        .fold(0.0f64, |m, (&a, &b)| m.max((a - b).abs()));
    let ax_ineq = problem.a_ineq.matvec(x);
    let ineq = ax_ineq
        .iter()
        .zip(&problem.b_ineq)
        .fold(0.0f64, |m, (&a, &b)| m.max(a - b));
    let ineq = ineq.max(0.0);
    let mut bounds = 0.0f64;
    for i in 0..problem.n() {
        bounds = bounds
            .max(problem.lb[i] - x[i])
            .max(x[i] - problem.ub[i]);
    }
    let bounds = bounds.max(0.0);
    Violation {
        eq,
        ineq,
        bounds,
        max: eq.max(ineq).max(bounds),
    }
}

/// Wrap a payload in the standard envelope. The timestamp lives in its own
/// field so that reruns are byte-identical everywhere else.
pub fn envelope<C: Serialize>(seed: u64, config: &C, result: Value) -> Result<Value> {
    let config = serde_json::to_value(config)?;
    let ts = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0);
    Ok(json!({
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "timestamp_ms": ts,
        "config": config,
        "result": result,
    }))
}

/// Pretty-print JSON to the given path, or to stdout when absent.
pub fn write_json(out: &Option<PathBuf>, value: &Value) -> Result<()> {
    let text = format!("{:#}\n", value);
    match out {
        Some(path) => {
            fs::write(path, text)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

/// Load a JSON config file into the given (deny_unknown_fields) shape.
pub fn load_config<T: serde::de::DeserializeOwned + Default>(path: &Option<PathBuf>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p)?;
            Ok(serde_json::from_str(&text)?)
        }
    }
}

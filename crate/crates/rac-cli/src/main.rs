//! `rac` — command-line front end for the multi-block randomized ADMM solver.
//!
//! Subcommands: `solve` (continuous QP), `mip` (binary/mixed driver),
//! `analyze` (spectral convergence certification), `gen` (benchmark problem
//! generators), `bench` (parameter-grid sweeps emitting CSV tables).
//!
//! Exit codes: 0 = success/optimal, 1 = error, 2 = solver stopped at a limit
//! (iteration/time cap or divergence guard) without certifying optimality.
//! Every JSON output embeds the effective configuration, the seed, and the
//! artifact version; reruns with identical inputs produce identical bytes
//! except for the `timestamp_ms` field.

mod cmd_analyze;
mod cmd_bench;
mod cmd_gen;
mod cmd_mip;
mod cmd_solve;
mod report;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "rac",
    version,
    about = "Multi-block randomized ADMM solver for linearly constrained convex QP"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a continuous QP from a problem manifest.
    Solve(cmd_solve::SolveArgs),
    /// Run the solve-perturb-resolve driver on a binary or mixed manifest.
    Mip(cmd_mip::MipArgs),
    /// Certify sweep convergence on an equality-constrained problem.
    Analyze(cmd_analyze::AnalyzeArgs),
    /// Generate benchmark problem manifests.
    Gen(cmd_gen::GenArgs),
    /// Sweep (mode, blocks, beta, eps) grids and emit a CSV table.
    Bench(cmd_bench::BenchArgs),
}

fn main() -> std::process::ExitCode {
    // Map usage errors to exit 1 (the code reserved for errors), keeping
    // clap's rendered message. --help/--version exit 0.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.exit_code() == 0 { 0 } else { 1 };
            let _ = e.print();
            return std::process::ExitCode::from(code as u8);
        }
    };
    let outcome = match cli.command {
        Command::Solve(args) => cmd_solve::run(&args),
        Command::Mip(args) => cmd_mip::run(&args),
        Command::Analyze(args) => cmd_analyze::run(&args),
        Command::Gen(args) => cmd_gen::run(&args),
        Command::Bench(args) => cmd_bench::run(&args),
    };
    match outcome {
        Ok(code) => std::process::ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::ExitCode::from(1)
        }
    }
}

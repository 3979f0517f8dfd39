//! `rhmc`: sample polytope densities with RHMC, run the diagnostic checks,
//! and benchmark the integrators.

mod bench;
mod check;
mod input;
mod sample;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rhmc_core::IntegratorKind;

#[derive(Parser, Debug)]
#[command(name = "rhmc", version, about = "Riemannian HMC on polytopes {x : Ax ≥ b}")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a chain and write samples (CSV) and statistics (JSON).
    Sample(sample::SampleArgs),
    /// Run the diagnostic checks and write a JSON report.
    Check(check::CheckArgs),
    /// Sweep the step size and tabulate one-step errors and cost.
    Bench(bench::BenchArgs),
}

/// Where the polytope comes from.
#[derive(Args, Debug, Clone)]
pub struct PolytopeSource {
    /// `hypercube:n:lo:hi`, `simplex:n` or `random:n:m:seed`
    #[arg(long, conflicts_with = "polytope")]
    pub builtin: Option<String>,
    /// Text file: header `m n`, then m rows `a_1 … a_n b`
    #[arg(long)]
    pub polytope: Option<PathBuf>,
}

/// Fixed-point and reference-flow settings shared by every command.
#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1e-10)]
    pub fp_tol: f64,
    #[arg(long, default_value_t = 50)]
    pub fp_max_iters: usize,
    #[arg(long, default_value_t = 256)]
    pub reference_substeps: usize,
}

impl SolverArgs {
    pub fn config(&self, kind: IntegratorKind, h: f64) -> rhmc_core::IntegratorConfig {
        rhmc_core::IntegratorConfig::new(kind, h)
            .with_fp_tolerance(self.fp_tol)
            .with_fp_max_iters(self.fp_max_iters)
            .with_reference_substeps(self.reference_substeps)
    }
}

/// A failure mapped to its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Self {
            code: 4,
            message: format!("{}: {err}", path.display()),
        }
    }
}

impl From<rhmc_core::Error> for Failure {
    fn from(err: rhmc_core::Error) -> Self {
        let code = match err {
            rhmc_core::Error::NotInterior { .. } => 3,
            _ => 2,
        };
        Self {
            code,
            message: err.to_string(),
        }
    }
}

/// Worker pool sized by `RHMC_THREADS` when set.
pub fn thread_pool() -> Result<rayon::ThreadPool, Failure> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("RHMC_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Failure::usage(format!("RHMC_THREADS must be a positive integer, got {v:?}")))?;
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Failure::usage(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sample(args) => sample::run(&args),
        Command::Check(args) => check::run(&args),
        Command::Bench(args) => bench::run(&args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

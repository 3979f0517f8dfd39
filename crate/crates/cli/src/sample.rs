use std::path::{Path, PathBuf};

use clap::Args;
use rhmc_core::diagnostics::{ess, MIN_SAMPLES};
use rhmc_core::{run_chain, ChainConfig, ChainStats, IntegratorKind, TargetDensity};
use serde::Serialize;

use crate::{input, Failure, PolytopeSource, SolverArgs};

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[command(flatten)]
    pub source: PolytopeSource,
    /// Linear potential α, inline (`1,2,3`) or a file; uniform when omitted
    #[arg(long)]
    pub alpha: Option<String>,
    /// Starting point; defaults to the polytope's interior point
    #[arg(long)]
    pub x0: Option<String>,
    /// imm, leapfrog or reference
    #[arg(long, default_value = "imm")]
    pub integrator: IntegratorKind,
    /// Step size
    #[arg(long)]
    pub h: f64,
    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Hold with probability ½ before each proposal
    #[arg(long)]
    pub lazy: bool,
    /// Skip the Metropolis filter (reference integrator only)
    #[arg(long)]
    pub no_filter: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value = "samples.csv")]
    pub out: PathBuf,
    /// Statistics JSON; defaults to the CSV path with `.stats.json`
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

#[derive(Serialize)]
struct StatsFile<'a> {
    #[serde(flatten)]
    stats: &'a ChainStats,
    acceptance_rate: f64,
    samples: usize,
    /// `null` when fewer than the minimum number of samples were kept.
    ess_per_coordinate: Option<Vec<f64>>,
    integrator: IntegratorKind,
    h: f64,
    steps: usize,
    burn_in: usize,
    thin: usize,
    seed: u64,
}

fn stats_path(out: &Path) -> PathBuf {
    out.with_extension("stats.json")
}

pub fn run(args: &SampleArgs) -> Result<u8, Failure> {
    let (_, p) = input::load(&args.source)?
        .ok_or_else(|| Failure::usage("one of --builtin or --polytope is required"))?;
    let target = match &args.alpha {
        Some(a) => TargetDensity::new(input::vector(a, "alpha")?)?,
        None => TargetDensity::uniform(p.n()),
    };
    let x0 = match &args.x0 {
        Some(x) => input::vector(x, "x0")?,
        None => p.interior_point().to_vec(),
    };
    if x0.len() != p.n() {
        return Err(Failure::usage(format!("x0 has length {}, polytope dimension is {}", x0.len(), p.n())));
    }
    if !(args.h > 0.0 && args.h.is_finite()) {
        return Err(Failure::usage("--h must be a positive finite number"));
    }
    let mut cfg = ChainConfig::new(args.solver.config(args.integrator, args.h), args.steps, args.seed)
        .with_burn_in(args.burn_in)
        .with_thin(args.thin);
    cfg.lazy = args.lazy;
    cfg.use_filter = !args.no_filter;

    let out = run_chain(&p, &target, &x0, &cfg)?;
    let ess_values = if out.samples.nrows() >= MIN_SAMPLES {
        Some(ess(&out.samples)?.into_iter().map(|e| e.ess).collect::<Vec<_>>())
    } else {
        None
    };

    input::write(&args.out, &input::csv(&out.samples))?;
    let stats = StatsFile {
        stats: &out.stats,
        acceptance_rate: out.stats.acceptance_rate(),
        samples: out.samples.nrows(),
        ess_per_coordinate: ess_values.clone(),
        integrator: args.integrator,
        h: args.h,
        steps: args.steps,
        burn_in: args.burn_in,
        thin: args.thin,
        seed: args.seed,
    };
    let stats_path = args.stats.clone().unwrap_or_else(|| stats_path(&args.out));
    let json = serde_json::to_string_pretty(&stats).expect("stats serialize") + "\n";
    input::write(&stats_path, &json)?;

    println!("acceptance rate: {:.4}", out.stats.acceptance_rate());
    match ess_values {
        Some(e) => {
            let list: Vec<String> = e.iter().map(|v| format!("{v:.1}")).collect();
            println!("ess per coordinate: [{}]", list.join(", "));
        }
        None => println!("ess per coordinate: n/a (fewer than {MIN_SAMPLES} samples)"),
    }
    if out.stats.solver_failure_flag {
        eprintln!(
            "warning: solver failure rate {:.2e} exceeds {:.0e}",
            out.stats.solver_failure_rate(),
            rhmc_core::sampler::SOLVER_FAILURE_FLAG_RATE
        );
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_path_replaces_extension() {
        assert_eq!(stats_path(Path::new("dir/s.csv")), PathBuf::from("dir/s.stats.json"));
        assert_eq!(stats_path(Path::new("s")), PathBuf::from("s.stats.json"));
    }
}

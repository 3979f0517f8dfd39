use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rhmc_core::diagnostics::{ess, random_phase_state, step_errors, MIN_SAMPLES};
use rhmc_core::{run_chain, ChainConfig, IntegratorKind, PhaseState, Polytope, TargetDensity};

use crate::{input, thread_pool, Failure, PolytopeSource, SolverArgs};

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Defaults to `--builtin hypercube:5:-1:1`
    #[command(flatten)]
    pub source: PolytopeSource,
    #[arg(long)]
    pub alpha: Option<String>,
    /// Comma-separated step sizes
    #[arg(long, default_value = "0.05,0.025,0.0125")]
    pub h_grid: String,
    /// Comma-separated integrators to sweep
    #[arg(long, value_delimiter = ',', default_value = "imm,leapfrog")]
    pub integrator: Vec<IntegratorKind>,
    /// Random (x, v) pairs whose errors are averaged per row
    #[arg(long, default_value_t = 5)]
    pub draws: usize,
    /// Also run a chain of this many steps per row and report ESS per second
    #[arg(long)]
    pub ess_steps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value = "bench.csv")]
    pub out: PathBuf,
}

struct Row {
    kind: IntegratorKind,
    h: f64,
    position: f64,
    energy: f64,
    fp_iters: f64,
    wall: f64,
    ess: Option<(f64, f64)>,
}

fn bench_row(
    p: &Polytope,
    target: &TargetDensity,
    starts: &[PhaseState],
    kind: IntegratorKind,
    h: f64,
    args: &BenchArgs,
) -> Result<Row, Failure> {
    let cfg = args.solver.config(kind, h);
    let start = Instant::now();
    let (mut position, mut energy, mut iters) = (0.0, 0.0, 0.0);
    for s in starts {
        let e = step_errors(p, target, s, h, &cfg)?;
        position += e.position;
        energy += e.energy;
        iters += e.fp_iters as f64;
    }
    let wall = start.elapsed().as_secs_f64();
    let k = starts.len() as f64;
    let ess = match args.ess_steps {
        Some(steps) => {
            let chain_cfg = ChainConfig::new(cfg, steps, args.seed);
            let t0 = Instant::now();
            let out = run_chain(p, target, p.interior_point(), &chain_cfg)?;
            let secs = t0.elapsed().as_secs_f64();
            let min_ess = if out.samples.nrows() >= MIN_SAMPLES {
                ess(&out.samples)?.iter().fold(f64::INFINITY, |a, e| a.min(e.ess))
            } else {
                f64::NAN
            };
            Some((min_ess, min_ess / secs))
        }
        None => None,
    };
    Ok(Row {
        kind,
        h,
        position: position / k,
        energy: energy / k,
        fp_iters: iters / k,
        wall,
        ess,
    })
}

pub fn run(args: &BenchArgs) -> Result<u8, Failure> {
    let p = match input::load(&args.source)? {
        Some((_, p)) => p,
        None => input::builtin("hypercube:5:-1:1")?,
    };
    let target = match &args.alpha {
        Some(a) => TargetDensity::new(input::vector(a, "alpha")?)?,
        None => TargetDensity::uniform(p.n()),
    };
    if target.dim() != p.n() {
        return Err(Failure::usage(format!("alpha has length {}, polytope dimension is {}", target.dim(), p.n())));
    }
    let grid = input::vector(&args.h_grid, "h-grid")?;
    if grid.is_empty() || grid.iter().any(|&h| h <= 0.0) {
        return Err(Failure::usage("h-grid must list positive step sizes"));
    }
    if args.draws == 0 {
        return Err(Failure::usage("--draws must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let starts = (0..args.draws)
        .map(|_| random_phase_state(&p, &mut rng))
        .collect::<Result<Vec<_>, _>>()?;

    let jobs: Vec<(IntegratorKind, f64)> = args
        .integrator
        .iter()
        .flat_map(|&k| grid.iter().map(move |&h| (k, h)))
        .collect();
    let pool = thread_pool()?;
    let rows = pool.install(|| {
        jobs.par_iter()
            .map(|&(k, h)| bench_row(&p, &target, &starts, k, h, args))
            .collect::<Result<Vec<_>, _>>()
    })?;

    let mut csv = String::from("integrator,h,position_error,energy_error,fp_iters,wall_time_s");
    if args.ess_steps.is_some() {
        csv.push_str(",min_ess,ess_per_s");
    }
    csv.push('\n');
    for r in &rows {
        write!(
            csv,
            "{},{:.16e},{:.16e},{:.16e},{:.4},{:.6e}",
            r.kind, r.h, r.position, r.energy, r.fp_iters, r.wall
        )
        .expect("writing to a String");
        if let Some((e, rate)) = r.ess {
            write!(csv, ",{e:.4e},{rate:.4e}").expect("writing to a String");
        }
        csv.push('\n');
    }
    input::write(&args.out, &csv)?;
    for r in &rows {
        println!("{:>9} h={:<8} position error {:.3e}  energy error {:.3e}", r.kind.to_string(), r.h, r.position, r.energy);
    }
    Ok(0)
}

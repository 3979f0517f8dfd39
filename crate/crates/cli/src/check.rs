use std::path::PathBuf;

use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rhmc_core::diagnostics::{
    good_region_check, jacobian_sensitivity, log_log_slope, moment_test_box, phase_jacobian_det,
    random_phase_state, reversibility_residual, self_concordance_battery, step_errors, CheckReport,
};
use rhmc_core::hamiltonian::hamiltonian;
use rhmc_core::integrators::{reference_flow, richardson_gap};
use rhmc_core::{
    run_chain, ChainConfig, IntegratorConfig, IntegratorKind, MetricState, PhaseState, Polytope, TargetDensity,
};
use serde::Serialize;

use crate::{input, thread_pool, Failure, PolytopeSource};

pub const CHECKS: [&str; 9] = [
    "reversibility",
    "order",
    "measure",
    "sensitivity",
    "self_concordance",
    "good_region",
    "moments",
    "oracle",
    "acceptance",
];

const BOTH: [IntegratorKind; 2] = [IntegratorKind::ImplicitMidpoint, IntegratorKind::GeneralizedLeapfrog];

#[derive(Args, Debug)]
pub struct CheckArgs {
    /// Run only the named check (repeatable)
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(CHECKS))]
    pub only: Vec<String>,
    /// Run the polytope-based checks on this polytope instead of the fixtures
    #[command(flatten)]
    pub source: PolytopeSource,
    #[arg(long, default_value = "check_report.json")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Serialize)]
struct Report {
    all_pass: bool,
    checks: Vec<CheckReport>,
}

/// The polytopes a check runs on, with their labels.
struct Fixtures {
    custom: Option<(String, Polytope)>,
}

impl Fixtures {
    fn pick(&self, defaults: &[&str], max_n: usize) -> Result<Vec<(String, Polytope)>, Failure> {
        match &self.custom {
            Some((text, p)) if p.n() <= max_n => Ok(vec![(text.clone(), p.clone())]),
            Some(_) => Ok(Vec::new()),
            None => defaults
                .iter()
                .map(|s| Ok((s.to_string(), input::builtin(s)?)))
                .collect(),
        }
    }
}

fn states(p: &Polytope, count: usize, seed: u64) -> Result<Vec<PhaseState>, rhmc_core::Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_phase_state(p, &mut rng)).collect()
}

fn ones(p: &Polytope) -> TargetDensity {
    TargetDensity::new(vec![1.0; p.n()]).expect("finite α")
}

fn labels(polys: &[(String, Polytope)]) -> String {
    polys.iter().map(|(l, _)| l.as_str()).collect::<Vec<_>>().join("|")
}

type CheckResult = Result<Option<CheckReport>, Failure>;

fn reversibility(fx: &Fixtures, seed: u64) -> CheckResult {
    let polys = fx.pick(&["hypercube:5:-1:1", "simplex:5"], usize::MAX)?;
    let mut worst = 0.0f64;
    for (_, p) in &polys {
        for s in states(p, 20, seed)? {
            for kind in BOTH {
                let cfg = IntegratorConfig::new(kind, 0.02).with_fp_tolerance(1e-12);
                let (rx, rv) = reversibility_residual(p, &ones(p), &s, &cfg)?;
                worst = worst.max(rx).max(rv);
            }
        }
    }
    let inputs = format!("reversibility {} h=0.02 tol=1e-12 draws=20 seed={seed}", labels(&polys));
    Ok(Some(CheckReport::new("reversibility", &inputs, [("max_residual", worst)], 1e-10, worst <= 1e-10)))
}

fn order(fx: &Fixtures, seed: u64) -> CheckResult {
    let polys = fx.pick(&["hypercube:5:-1:1"], usize::MAX)?;
    let hs = [0.05, 0.025, 0.0125];
    let mut min_slope = f64::INFINITY;
    for (_, p) in &polys {
        for s in states(p, 5, seed)? {
            for kind in BOTH {
                let cfg = IntegratorConfig::new(kind, hs[0]).with_fp_tolerance(1e-13);
                let errs = hs
                    .iter()
                    .map(|&h| step_errors(p, &ones(p), &s, h, &cfg).map(|e| e.position))
                    .collect::<Result<Vec<_>, _>>()?;
                min_slope = min_slope.min(log_log_slope(&hs, &errs).unwrap_or(f64::NEG_INFINITY));
            }
        }
    }
    let inputs = format!("order {} h={hs:?} draws=5 seed={seed}", labels(&polys));
    Ok(Some(CheckReport::new("order", &inputs, [("min_slope", min_slope)], 1.9, min_slope >= 1.9)))
}

fn measure(fx: &Fixtures, seed: u64) -> CheckResult {
    let polys = fx.pick(&["hypercube:2:-1:1", "random:3:6:7"], 4)?;
    if polys.is_empty() {
        return Ok(None);
    }
    let mut worst = 0.0f64;
    for (_, p) in &polys {
        for s in states(p, 5, seed)? {
            for kind in BOTH {
                let cfg = IntegratorConfig::new(kind, 0.01).with_fp_tolerance(1e-14);
                worst = worst.max((phase_jacobian_det(p, &ones(p), &s, &cfg, 1e-6)? - 1.0).abs());
            }
        }
    }
    let inputs = format!("measure {} h=0.01 draws=5 seed={seed}", labels(&polys));
    Ok(Some(CheckReport::new("measure", &inputs, [("max_abs_det_minus_one", worst)], 1e-3, worst <= 1e-3)))
}

fn sensitivity(fx: &Fixtures, seed: u64) -> CheckResult {
    let polys = fx.pick(&["hypercube:2:-1:1"], 4)?;
    if polys.is_empty() {
        return Ok(None);
    }
    let mut min_ratio = f64::INFINITY;
    for (_, p) in &polys {
        for s in states(p, 5, seed)? {
            for kind in BOTH {
                for h in [0.01, 0.001] {
                    let cfg = IntegratorConfig::new(kind, h).with_fp_tolerance(1e-14);
                    min_ratio = min_ratio.min(jacobian_sensitivity(p, &ones(p), &s, &cfg, None)?.ratio);
                }
            }
        }
    }
    let inputs = format!("sensitivity {} h=[0.01, 0.001] draws=5 seed={seed}", labels(&polys));
    Ok(Some(CheckReport::new("sensitivity", &inputs, [("min_ratio", min_ratio)], 0.9, min_ratio >= 0.9)))
}

fn self_concordance(seed: u64) -> CheckResult {
    let s = self_concordance_battery(1000, seed, 1e-9)?;
    let inputs = format!("self_concordance draws=1000 slack=1e-9 seed={seed}");
    Ok(Some(CheckReport::new(
        "self_concordance",
        &inputs,
        [("violations", s.violations as f64), ("worst_slack", s.worst_slack)],
        -1e-9,
        s.violations == 0,
    )))
}

const TILTED: [f64; 3] = [1.0, 2.0, 3.0];

fn unit_box_chain(steps: usize, seed: u64) -> Result<(Polytope, rhmc_core::ChainOutput), Failure> {
    let p = Polytope::hypercube(3, 0.0, 1.0)?;
    let cfg = ChainConfig::new(IntegratorConfig::new(IntegratorKind::ImplicitMidpoint, 0.15), steps, seed)
        .with_burn_in(steps / 10);
    let out = run_chain(&p, &TargetDensity::new(TILTED.to_vec())?, p.interior_point(), &cfg)?;
    Ok((p, out))
}

fn good_region(seed: u64) -> CheckResult {
    let (p, out) = unit_box_chain(20_000, seed)?;
    let mut inside = 0usize;
    for row in out.samples.rows_iter() {
        let m = MetricState::new(&p, row)?;
        if good_region_check(&m, &TILTED, 3, 0.01)?.1 {
            inside += 1;
        }
    }
    let frac = inside as f64 / out.samples.nrows() as f64;
    let inputs = format!("good_region hypercube:3:0:1 alpha={TILTED:?} h=0.15 steps=20000 rho=0.01 seed={seed}");
    Ok(Some(CheckReport::new("good_region", &inputs, [("fraction_inside", frac)], 0.99, frac >= 0.99)))
}

fn moments(seed: u64) -> CheckResult {
    let (_, out) = unit_box_chain(100_000, seed)?;
    let r = moment_test_box(&out.samples, &TILTED, 0.0, 1.0)?;
    let min_ess = r.coordinates.iter().fold(f64::INFINITY, |a, c| a.min(c.ess));
    let z = r.max_abs_z();
    let inputs = format!("moments hypercube:3:0:1 alpha={TILTED:?} h=0.15 steps=100000 seed={seed}");
    Ok(Some(CheckReport::new(
        "moments",
        &inputs,
        [("max_abs_z", z), ("min_ess", min_ess)],
        3.0,
        z <= 3.0,
    )))
}

fn oracle(fx: &Fixtures, seed: u64) -> CheckResult {
    let polys = fx.pick(
        &["hypercube:5:-1:1", "simplex:5", "hypercube:2:-1:1", "random:3:6:7", "hypercube:3:0:1"],
        usize::MAX,
    )?;
    let (mut energy, mut gap) = (0.0f64, 0.0f64);
    for (_, p) in &polys {
        let target = TargetDensity::new((1..=p.n()).map(|i| i as f64).collect())?;
        for s in states(p, 3, seed)? {
            let cfg = IntegratorConfig::new(IntegratorKind::Reference, 0.02);
            gap = gap.max(richardson_gap(p, &target, &s, &cfg)?);
            let end = reference_flow(p, &target, &s, &cfg)?;
            let h0 = hamiltonian(&MetricState::new(p, &s.x)?, &target, &s.v);
            let h1 = hamiltonian(&MetricState::new(p, &end.x)?, &target, &end.v);
            energy = energy.max((h1 - h0).abs());
        }
    }
    let inputs = format!("oracle {} h=0.02 draws=3 seed={seed}", labels(&polys));
    Ok(Some(CheckReport::new(
        "oracle",
        &inputs,
        [("max_abs_energy_error", energy), ("max_richardson_gap", gap)],
        1e-8,
        energy <= 1e-8 && gap <= 1e-9,
    )))
}

fn acceptance(fx: &Fixtures, seed: u64) -> CheckResult {
    let polys = fx.pick(&["hypercube:5:-1:1"], usize::MAX)?;
    let mut min_acc = f64::INFINITY;
    let mut max_fail = 0.0f64;
    for (_, p) in &polys {
        let h = 0.1 * (p.n() as f64).powf(-1.5);
        for (i, kind) in BOTH.into_iter().enumerate() {
            let cfg = ChainConfig::new(IntegratorConfig::new(kind, h), 10_000, seed.wrapping_add(i as u64));
            let out = run_chain(p, &ones(p), p.interior_point(), &cfg)?;
            min_acc = min_acc.min(out.stats.filter_acceptance_rate());
            max_fail = max_fail.max(out.stats.solver_failure_rate());
        }
    }
    let inputs = format!("acceptance {} h=0.1n^-1.5 steps=10000 seed={seed}", labels(&polys));
    Ok(Some(CheckReport::new(
        "acceptance",
        &inputs,
        [("min_filter_acceptance", min_acc), ("max_solver_failure_rate", max_fail)],
        0.99,
        min_acc >= 0.99 && max_fail <= 1e-3,
    )))
}

fn run_one(name: &str, fx: &Fixtures, seed: u64) -> CheckResult {
    match name {
        "reversibility" => reversibility(fx, seed),
        "order" => order(fx, seed),
        "measure" => measure(fx, seed),
        "sensitivity" => sensitivity(fx, seed),
        "self_concordance" => self_concordance(seed),
        "good_region" => good_region(seed),
        "moments" => moments(seed),
        "oracle" => oracle(fx, seed),
        "acceptance" => acceptance(fx, seed),
        other => Err(Failure::usage(format!("unknown check {other:?}"))),
    }
}

pub fn run(args: &CheckArgs) -> Result<u8, Failure> {
    let fx = Fixtures {
        custom: input::load(&args.source)?,
    };
    let names: Vec<&str> = if args.only.is_empty() {
        CHECKS.to_vec()
    } else {
        CHECKS.iter().copied().filter(|c| args.only.iter().any(|o| o == c)).collect()
    };
    let pool = thread_pool()?;
    let results: Vec<(&str, CheckResult)> =
        pool.install(|| names.par_iter().map(|&n| (n, run_one(n, &fx, args.seed))).collect());

    let mut checks = Vec::new();
    for (name, result) in results {
        match result {
            Ok(Some(report)) => checks.push(report),
            Ok(None) => eprintln!("{name}: skipped (polytope dimension exceeds 4)"),
            Err(f) => {
                eprintln!("{name}: {}", f.message);
                let inputs = format!("{name} seed={}", args.seed);
                checks.push(CheckReport::new(name, &inputs, std::iter::empty(), f64::NAN, false));
            }
        }
    }
    let all_pass = checks.iter().all(|c| c.pass);
    for c in &checks {
        let values: Vec<String> = c.values.iter().map(|(k, v)| format!("{k}={v:.4e}")).collect();
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.check_name, values.join(" "));
    }
    let report = Report { all_pass, checks };
    let json = serde_json::to_string_pretty(&report).expect("report serialize") + "\n";
    input::write(&args.out, &json)?;
    Ok(if all_pass { 0 } else { 1 })
}

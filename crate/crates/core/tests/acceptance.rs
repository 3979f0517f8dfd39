//! Acceptance suite. Runs every criterion at its stated tolerance, prints one
//! PASS/FAIL line per criterion and exits non-zero if any fails.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rhmc_core::diagnostics::{
    good_region_check, jacobian_sensitivity, log_log_slope, moment_test_box, phase_jacobian_det,
    random_phase_state,
    reversibility_residual, self_concordance_battery, step_errors,
};
use rhmc_core::hamiltonian::hamiltonian;
use rhmc_core::integrators::{reference_flow, richardson_gap};
use rhmc_core::{
    run_chain, ChainConfig, ChainOutput, IntegratorConfig, IntegratorKind, MetricState, PhaseState, Polytope,
    TargetDensity,
};

const BOTH: [IntegratorKind; 2] = [IntegratorKind::ImplicitMidpoint, IntegratorKind::GeneralizedLeapfrog];

fn random_state(p: &Polytope, rng: &mut ChaCha8Rng) -> PhaseState {
    random_phase_state(p, rng).expect("random interior state")
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn reversibility() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for p in [Polytope::hypercube(5, -1.0, 1.0).unwrap(), Polytope::simplex(5).unwrap()] {
        let target = TargetDensity::new(vec![1.0; 5]).unwrap();
        for _ in 0..100 {
            let s = random_state(&p, &mut rng);
            for kind in BOTH {
                let cfg = IntegratorConfig::new(kind, 0.02).with_fp_tolerance(1e-12);
                match reversibility_residual(&p, &target, &s, &cfg) {
                    Ok((rx, rv)) => worst = worst.max(rx).max(rv),
                    Err(e) => return outcome(false, format!("{kind} step failed: {e}")),
                }
            }
        }
    }
    outcome(worst <= 1e-10, format!("max residual {worst:.3e} (≤ 1e-10)"))
}

fn second_order() -> Outcome {
    let p = Polytope::hypercube(5, -1.0, 1.0).unwrap();
    let target = TargetDensity::new(vec![1.0; 5]).unwrap();
    let hs = [0.05, 0.025, 0.0125];
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut min_slope = f64::INFINITY;
    for _ in 0..20 {
        let s = random_state(&p, &mut rng);
        for kind in BOTH {
            let cfg = IntegratorConfig::new(kind, 0.05).with_fp_tolerance(1e-13);
            let mut errs = Vec::new();
            for &h in &hs {
                match step_errors(&p, &target, &s, h, &cfg) {
                    Ok(e) => errs.push(e.position),
                    Err(e) => return outcome(false, format!("{kind} at h={h}: {e}")),
                }
            }
            match log_log_slope(&hs, &errs) {
                Some(slope) => min_slope = min_slope.min(slope),
                None => return outcome(false, format!("{kind}: zero position error {errs:?}")),
            }
        }
    }
    outcome(min_slope >= 1.9, format!("min slope {min_slope:.3} (≥ 1.9)"))
}

fn measure_preservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst = 0.0f64;
    for p in [Polytope::hypercube(2, -1.0, 1.0).unwrap(), Polytope::random(3, 6, 7).unwrap()] {
        let target = TargetDensity::new(vec![1.0; p.n()]).unwrap();
        for _ in 0..10 {
            let s = random_state(&p, &mut rng);
            for kind in BOTH {
                let cfg = IntegratorConfig::new(kind, 0.01).with_fp_tolerance(1e-14);
                match phase_jacobian_det(&p, &target, &s, &cfg, 1e-6) {
                    Ok(det) => worst = worst.max((det - 1.0).abs()),
                    Err(e) => return outcome(false, format!("{kind}: {e}")),
                }
            }
        }
    }
    outcome(worst <= 1e-3, format!("max |det − 1| {worst:.3e} (≤ 1e-3)"))
}

fn sensitivity() -> Outcome {
    let p = Polytope::hypercube(2, -1.0, 1.0).unwrap();
    let target = TargetDensity::new(vec![1.0, 1.0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut min_ratio = f64::INFINITY;
    for _ in 0..10 {
        let s = random_state(&p, &mut rng);
        for kind in BOTH {
            for h in [0.01, 0.001] {
                let cfg = IntegratorConfig::new(kind, h).with_fp_tolerance(1e-14);
                match jacobian_sensitivity(&p, &target, &s, &cfg, None) {
                    Ok(r) => min_ratio = min_ratio.min(r.ratio),
                    Err(e) => return outcome(false, format!("{kind} h={h}: {e}")),
                }
            }
        }
    }
    outcome(min_ratio >= 0.9, format!("min det ratio {min_ratio:.4} (≥ 0.9)"))
}

fn acceptance_rate() -> Outcome {
    let p = Polytope::hypercube(5, -1.0, 1.0).unwrap();
    let h = 0.1 * 5f64.powf(-1.5);
    let mut lines = Vec::new();
    let mut pass = true;
    for (label, alpha) in [("α=0", vec![0.0; 5]), ("α=1", vec![1.0; 5])] {
        let target = TargetDensity::new(alpha).unwrap();
        for (i, kind) in BOTH.into_iter().enumerate() {
            let cfg = ChainConfig::new(IntegratorConfig::new(kind, h), 10_000, 500 + i as u64);
            let out = match run_chain(&p, &target, p.interior_point(), &cfg) {
                Ok(o) => o,
                Err(e) => return outcome(false, format!("{label} {kind}: {e}")),
            };
            let acc = out.stats.filter_acceptance_rate();
            let fail = out.stats.solver_failure_rate();
            pass &= acc >= 0.99 && fail <= 1e-3;
            lines.push(format!("{label} {kind}: acc {acc:.4} fail {fail:.1e}"));
        }
    }
    outcome(pass, format!("{} (acc ≥ 0.99, fail ≤ 1e-3)", lines.join("; ")))
}

const STATIONARITY_H: f64 = 0.15;

fn stationarity_chain(alpha: Vec<f64>, seed: u64) -> rhmc_core::Result<ChainOutput> {
    let p = Polytope::hypercube(3, 0.0, 1.0).unwrap();
    let target = TargetDensity::new(alpha)?;
    let cfg = ChainConfig::new(
        IntegratorConfig::new(IntegratorKind::ImplicitMidpoint, STATIONARITY_H),
        100_000,
        seed,
    )
    .with_burn_in(10_000);
    run_chain(&p, &target, p.interior_point(), &cfg)
}

fn stationarity(tilted: &ChainOutput, uniform: &ChainOutput) -> Outcome {
    let tilted_report = match moment_test_box(&tilted.samples, &[1.0, 2.0, 3.0], 0.0, 1.0) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let uniform_report = match moment_test_box(&uniform.samples, &[0.0; 3], 0.0, 1.0) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let z = tilted_report.max_abs_z();
    let var = uniform_report.max_variance_rel_error();
    let ess = |r: &rhmc_core::diagnostics::MomentReport| -> String {
        let v: Vec<String> = r.coordinates.iter().map(|c| format!("{:.0}", c.ess)).collect();
        v.join(", ")
    };
    outcome(
        z <= 3.0 && var <= 0.05,
        format!(
            "max |z| {z:.2} (≤ 3), uniform max var rel err {var:.4} (≤ 0.05), ESS tilted [{}] uniform [{}], acc {:.3}",
            ess(&tilted_report),
            ess(&uniform_report),
            tilted.stats.acceptance_rate()
        ),
    )
}

fn self_concordance() -> Outcome {
    match self_concordance_battery(1000, 707, 1e-9) {
        Ok(s) => outcome(
            s.violations == 0,
            format!("{} violations in {} draws, worst slack {:.3e}", s.violations, s.draws, s.worst_slack),
        ),
        Err(e) => outcome(false, e.to_string()),
    }
}

fn good_region(chain: &ChainOutput) -> Outcome {
    let p = Polytope::hypercube(3, 0.0, 1.0).unwrap();
    let alpha = [1.0, 2.0, 3.0];
    let k = chain.samples.nrows();
    let mut inside = 0usize;
    for row in chain.samples.rows_iter() {
        let m = match MetricState::new(&p, row) {
            Ok(m) => m,
            Err(_) => continue,
        };
        if good_region_check(&m, &alpha, 3, 0.01).map(|(_, ok)| ok).unwrap_or(false) {
            inside += 1;
        }
    }
    let frac = inside as f64 / k as f64;
    outcome(frac >= 0.99, format!("fraction in M_ρ {frac:.5} over {k} samples (≥ 0.99)"))
}

fn oracle_integrity() -> Outcome {
    let fixtures: Vec<(&str, Polytope)> = vec![
        ("hypercube(5)", Polytope::hypercube(5, -1.0, 1.0).unwrap()),
        ("simplex(5)", Polytope::simplex(5).unwrap()),
        ("hypercube(2)", Polytope::hypercube(2, -1.0, 1.0).unwrap()),
        ("random(3,6)", Polytope::random(3, 6, 7).unwrap()),
        ("[0,1]^3", Polytope::hypercube(3, 0.0, 1.0).unwrap()),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let (mut worst_energy, mut worst_gap) = (0.0f64, 0.0f64);
    for (name, p) in &fixtures {
        let target = TargetDensity::new((1..=p.n()).map(|i| i as f64).collect()).unwrap();
        for _ in 0..5 {
            let s = random_state(p, &mut rng);
            for h in [0.0125, 0.02, 0.05] {
                let cfg = IntegratorConfig::new(IntegratorKind::Reference, h);
                let gap = match richardson_gap(p, &target, &s, &cfg) {
                    Ok(g) => g,
                    Err(e) => return outcome(false, format!("{name}: {e}")),
                };
                let end = match reference_flow(p, &target, &s, &cfg) {
                    Ok(e) => e,
                    Err(e) => return outcome(false, format!("{name}: {e}")),
                };
                let m0 = MetricState::new(p, &s.x).unwrap();
                let m1 = MetricState::new(p, &end.x).unwrap();
                let de = (hamiltonian(&m1, &target, &end.v) - hamiltonian(&m0, &target, &s.v)).abs();
                worst_energy = worst_energy.max(de);
                worst_gap = worst_gap.max(gap);
            }
        }
    }
    outcome(
        worst_energy <= 1e-8 && worst_gap <= 1e-9,
        format!("max |ΔH| {worst_energy:.3e} (≤ 1e-8), max Richardson gap {worst_gap:.3e} (≤ 1e-9)"),
    )
}

fn report(id: usize, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = f();
    let took = start.elapsed();
    let in_time = took <= budget;
    let pass = o.pass && in_time;
    println!(
        "{} [{id}] {name}: {} [{:.2}s, budget {}s{}]",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        took.as_secs_f64(),
        budget.as_secs(),
        if in_time { "" } else { ", over budget" }
    );
    pass
}

fn main() {
    let secs = Duration::from_secs;
    let mut all = true;
    all &= report(1, "reversibility", secs(10), reversibility);
    all &= report(2, "second-order accuracy", secs(30), second_order);
    all &= report(3, "measure preservation", secs(10), measure_preservation);
    all &= report(4, "sensitivity", secs(5), sensitivity);
    all &= report(5, "acceptance rate", secs(60), acceptance_rate);

    let mut chains = None;
    all &= report(6, "stationarity", secs(120), || {
        let run = stationarity_chain(vec![1.0, 2.0, 3.0], 606)
            .and_then(|t| Ok((t, stationarity_chain(vec![0.0; 3], 607)?)));
        match run {
            Ok(c) => {
                let (tilted, uniform) = chains.insert(c);
                stationarity(tilted, uniform)
            }
            Err(e) => outcome(false, format!("chain failed: {e}")),
        }
    });
    all &= report(7, "self-concordance battery", secs(10), self_concordance);
    match &chains {
        Some((tilted, _)) => all &= report(8, "good-region mass", secs(5), || good_region(tilted)),
        None => {
            println!("FAIL [8] good-region mass: no chain from criterion 6");
            all = false;
        }
    }
    all &= report(9, "oracle integrity", secs(5), oracle_integrity);
    if !all {
        std::process::exit(1);
    }
}

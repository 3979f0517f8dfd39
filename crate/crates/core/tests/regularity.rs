use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rhmc_core::diagnostics::{default_m1, random_phase_state, regularity, TrajectoryRecord};
use rhmc_core::{IntegratorConfig, IntegratorKind, MetricState, Polytope, TargetDensity};

#[test]
fn regularity_tail_on_box() {
    let n = 5;
    let p = Polytope::hypercube(n, -1.0, 1.0).unwrap();
    let target = TargetDensity::uniform(n);
    let h = 0.1 * (n as f64).powf(-1.5);
    let cfg = IntegratorConfig::new(IntegratorKind::Reference, h).with_reference_substeps(32);
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let draws = 1000;
    let mut above = 0;
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let s = random_phase_state(&p, &mut rng).unwrap();
        let m1 = default_m1(&MetricState::new(&p, &s.x).unwrap(), target.alpha());
        let traj = TrajectoryRecord::from_reference(&p, &target, &s, &cfg).unwrap();
        let l = regularity(&p, &traj, m1).unwrap();
        worst = worst.max(l);
        if l > 64.0 {
            above += 1;
        }
    }
    assert!(above as f64 <= 0.01 * draws as f64, "{above} of {draws} above 64 (max {worst})");
}

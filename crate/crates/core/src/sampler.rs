//! The discretized RHMC Markov chain: refresh `v ~ N(0, g(x))`, take one
//! integrator step, and accept with probability `min(1, exp(−ΔH))`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{hamiltonian, sample_velocity, PhaseState, TargetDensity};
use crate::integrators::{step, IntegratorConfig, IntegratorKind};
use crate::linalg::Matrix;
use crate::metric::MetricState;
use crate::polytope::Polytope;
use crate::scalar::Real;

/// Solver-failure rate above which a run is flagged: a nonzero rate can bias
/// the stationary distribution when failures are not symmetric.
pub const SOLVER_FAILURE_FLAG_RATE: f64 = 1e-4;

/// Step-size rules of the form `h = c / (n^p · log^q(Λ/ε))`.
///
/// `Imm` and `Leapfrog` use `p = 3/2, q = 1`; `Ideal` uses `p = 7/12, q = 1/2`.
/// The constant `c` is user-supplied because the provable constants are far
/// too small to be useful in practice.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum StepPreset {
    Imm { c: f64, log_ratio: f64 },
    Leapfrog { c: f64, log_ratio: f64 },
    Ideal { c: f64, log_ratio: f64 },
}

impl StepPreset {
    pub fn step_size(&self, n: usize) -> Result<f64> {
        let n = n as f64;
        let (c, lr, h) = match *self {
            Self::Imm { c, log_ratio } | Self::Leapfrog { c, log_ratio } => {
                (c, log_ratio, c / (n.powf(1.5) * log_ratio))
            }
            Self::Ideal { c, log_ratio } => (c, log_ratio, c / (n.powf(7.0 / 12.0) * log_ratio.sqrt())),
        };
        if !(c > 0.0) || !(lr > 0.0) || !h.is_finite() {
            return Err(Error::InvalidConfig(
                "step preset needs c > 0 and log(Λ/ε) > 0".into(),
            ));
        }
        Ok(h)
    }
}

#[derive(Clone, Debug)]
pub struct ChainConfig<T: Real = f64> {
    pub integrator: IntegratorConfig<T>,
    pub steps: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Hold with probability ½ before each proposal.
    pub lazy: bool,
    /// Metropolis filter; may only be disabled with the reference integrator.
    pub use_filter: bool,
    /// Overrides `integrator.step_size` when set.
    pub step_preset: Option<StepPreset>,
    /// Keep a per-step `(ΔH, outcome, fp iterations)` log in the stats.
    pub record_steps: bool,
}

impl<T: Real> ChainConfig<T> {
    pub fn new(integrator: IntegratorConfig<T>, steps: usize, seed: u64) -> Self {
        Self {
            integrator,
            steps,
            burn_in: 0,
            thin: 1,
            seed,
            lazy: false,
            use_filter: true,
            step_preset: None,
            record_steps: false,
        }
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn with_thin(mut self, thin: usize) -> Self {
        self.thin = thin;
        self
    }

    /// Applies the step preset (if any) for dimension `n` and validates.
    pub fn resolved(&self, n: usize) -> Result<Self> {
        let mut cfg = self.clone();
        if let Some(preset) = cfg.step_preset {
            cfg.integrator.step_size = T::cst(preset.step_size(n)?);
        }
        cfg.integrator.validate()?;
        if !(cfg.integrator.step_size > T::zero()) {
            return Err(Error::InvalidConfig("step size must be > 0".into()));
        }
        if cfg.thin < 1 {
            return Err(Error::InvalidConfig("thin must be ≥ 1".into()));
        }
        if !cfg.use_filter && cfg.integrator.kind != IntegratorKind::Reference {
            return Err(Error::InvalidConfig(
                "the Metropolis filter may only be disabled with the reference integrator".into(),
            ));
        }
        Ok(cfg)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepOutcome {
    Accepted,
    RejectedFilter,
    RejectedSolver,
    LazyHold,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub outcome: StepOutcome,
    /// `H(x̄, v̄) − H(x, v)`; `None` when no proposal was computed.
    pub delta_h: Option<f64>,
    pub fp_iters: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ChainStats {
    pub accepted: usize,
    pub rejected_filter: usize,
    pub rejected_solver: usize,
    pub lazy_holds: usize,
    /// Mean `|ΔH|` over proposals the integrator produced.
    pub mean_abs_energy_error: f64,
    pub max_abs_energy_error: f64,
    pub max_fp_iters: usize,
    /// Set when `rejected_solver / proposals` exceeds [`SOLVER_FAILURE_FLAG_RATE`].
    pub solver_failure_flag: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_step_log: Option<Vec<StepRecord>>,
}

impl ChainStats {
    pub fn total(&self) -> usize {
        self.accepted + self.rejected_filter + self.rejected_solver + self.lazy_holds
    }

    /// Proposals that reached the integrator (everything except lazy holds).
    pub fn proposals(&self) -> usize {
        self.accepted + self.rejected_filter + self.rejected_solver
    }

    pub fn acceptance_rate(&self) -> f64 {
        ratio(self.accepted, self.proposals())
    }

    /// Accepted fraction among proposals that passed the solver.
    pub fn filter_acceptance_rate(&self) -> f64 {
        ratio(self.accepted, self.accepted + self.rejected_filter)
    }

    pub fn solver_failure_rate(&self) -> f64 {
        ratio(self.rejected_solver, self.proposals())
    }

    fn record(&mut self, rec: &StepRecord, energy_sum: &mut f64, energy_count: &mut usize) {
        match rec.outcome {
            StepOutcome::Accepted => self.accepted += 1,
            StepOutcome::RejectedFilter => self.rejected_filter += 1,
            StepOutcome::RejectedSolver => self.rejected_solver += 1,
            StepOutcome::LazyHold => self.lazy_holds += 1,
        }
        if let Some(dh) = rec.delta_h {
            *energy_sum += dh.abs();
            *energy_count += 1;
            self.max_abs_energy_error = self.max_abs_energy_error.max(dh.abs());
        }
        self.max_fp_iters = self.max_fp_iters.max(rec.fp_iters);
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Metropolis decision in the log domain: accept iff `log u < −ΔH`.
pub fn metropolis_accept<R: Rng + ?Sized>(delta_h: f64, rng: &mut R) -> bool {
    if delta_h.is_nan() {
        return false;
    }
    let u: f64 = rng.random();
    u.ln() < -delta_h
}

/// One RHMC transition from `x`. Integrator failures become rejections.
///
/// `cfg` is used as given; call [`ChainConfig::resolved`] first to apply
/// presets and validate.
pub fn rhmc_step<T: Real, R: Rng + ?Sized>(
    p: &Polytope<T>,
    target: &TargetDensity<T>,
    x: &[T],
    cfg: &ChainConfig<T>,
    rng: &mut R,
) -> Result<(Vec<T>, StepRecord)> {
    let m0 = MetricState::new(p, x)?;
    if cfg.lazy && rng.random::<bool>() {
        return Ok((
            x.to_vec(),
            StepRecord {
                outcome: StepOutcome::LazyHold,
                delta_h: None,
                fp_iters: 0,
            },
        ));
    }
    let v = sample_velocity(&m0, rng);
    let h0 = hamiltonian(&m0, target, &v);
    let state = PhaseState::new(x.to_vec(), v);

    let rejected_solver = |fp_iters| StepRecord {
        outcome: StepOutcome::RejectedSolver,
        delta_h: None,
        fp_iters,
    };
    let (proposal, info) = match step(p, target, &state, &cfg.integrator) {
        Ok(r) => r,
        Err(Error::FixedPointDivergence { iters, .. }) => return Ok((x.to_vec(), rejected_solver(iters))),
        Err(Error::NotInterior { .. }) | Err(Error::OracleNotConverged { .. }) | Err(Error::FactorizationFailure) => {
            return Ok((x.to_vec(), rejected_solver(0)))
        }
        Err(e) => return Err(e),
    };
    let m1 = match MetricState::new(p, &proposal.x) {
        Ok(m) => m,
        Err(_) => return Ok((x.to_vec(), rejected_solver(info.fp_iters_used))),
    };
    let delta_h = (hamiltonian(&m1, target, &proposal.v) - h0).as_f64();
    let accept = !cfg.use_filter || metropolis_accept(delta_h, rng);
    let outcome = if accept {
        StepOutcome::Accepted
    } else {
        StepOutcome::RejectedFilter
    };
    let next = if accept { proposal.x } else { x.to_vec() };
    Ok((
        next,
        StepRecord {
            outcome,
            delta_h: Some(delta_h),
            fp_iters: info.fp_iters_used,
        },
    ))
}

/// Output of [`run_chain`]: recorded positions (one row each) and statistics.
#[derive(Clone, Debug)]
pub struct ChainOutput<T: Real = f64> {
    pub samples: Matrix<T>,
    pub stats: ChainStats,
}

/// Runs `burn_in + steps` transitions from `x0` with a ChaCha8 stream seeded
/// by `cfg.seed`, recording every `thin`-th post-burn-in position.
pub fn run_chain<T: Real>(
    p: &Polytope<T>,
    target: &TargetDensity<T>,
    x0: &[T],
    cfg: &ChainConfig<T>,
) -> Result<ChainOutput<T>> {
    if target.dim() != p.n() {
        return Err(Error::InvalidDimension(format!(
            "alpha has length {}, polytope dimension is {}",
            target.dim(),
            p.n()
        )));
    }
    if !p.contains_strictly(x0, T::zero()) {
        let min_slack = p.slacks(x0).iter().fold(f64::INFINITY, |a, s| a.min(s.as_f64()));
        return Err(Error::NotInterior { min_slack });
    }
    let cfg = cfg.resolved(p.n())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut stats = ChainStats {
        per_step_log: cfg.record_steps.then(Vec::new),
        ..Default::default()
    };
    let kept = cfg.steps / cfg.thin;
    let mut data = Vec::with_capacity(kept * p.n());
    let mut x = x0.to_vec();
    let (mut energy_sum, mut energy_count) = (0.0, 0usize);

    for i in 0..cfg.burn_in + cfg.steps {
        let (next, rec) = rhmc_step(p, target, &x, &cfg, &mut rng)?;
        stats.record(&rec, &mut energy_sum, &mut energy_count);
        if let Some(log) = stats.per_step_log.as_mut() {
            log.push(rec);
        }
        x = next;
        if i >= cfg.burn_in && (i - cfg.burn_in) % cfg.thin == cfg.thin - 1 {
            data.extend_from_slice(&x);
        }
    }
    stats.mean_abs_energy_error = if energy_count > 0 {
        energy_sum / energy_count as f64
    } else {
        0.0
    };
    stats.solver_failure_flag = stats.solver_failure_rate() > SOLVER_FAILURE_FLAG_RATE;
    let rows = data.len() / p.n();
    let samples = Matrix::from_row_slice(rows, p.n(), &data).expect("row-major sample buffer");
    Ok(ChainOutput { samples, stats })
}

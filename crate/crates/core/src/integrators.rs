//! One-step maps approximating the Hamiltonian flow over time `h`.
//!
//! * [`imm_step`]: implicit midpoint on `H₂` wrapped in explicit `H₁` half kicks.
//! * [`leapfrog_step`]: generalized (Störmer-Verlet) leapfrog on the full `H`.
//! * [`reference_flow`]: classical RK4 with a Richardson self-check, used as an
//!   independent oracle for the exact flow.
//!
//! Implicit stages use plain fixed-point iteration. Convergence is measured in
//! the local norms at the step's starting point, and any iterate that leaves
//! the strict interior aborts the step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{dh1_dx, dh2_dx, dh_dx, PhaseState, TargetDensity};
use crate::linalg::{add_scaled, midpoint, sub};
use crate::metric::MetricState;
use crate::polytope::Polytope;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorKind {
    ImplicitMidpoint,
    GeneralizedLeapfrog,
    Reference,
}

impl IntegratorKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::ImplicitMidpoint => "imm",
            Self::GeneralizedLeapfrog => "leapfrog",
            Self::Reference => "reference",
        }
    }
}

impl std::str::FromStr for IntegratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "imm" | "implicit_midpoint" | "midpoint" => Ok(Self::ImplicitMidpoint),
            "lm" | "leapfrog" | "generalized_leapfrog" => Ok(Self::GeneralizedLeapfrog),
            "reference" | "ref" | "rk4" => Ok(Self::Reference),
            other => Err(Error::InvalidConfig(format!("unknown integrator `{other}`"))),
        }
    }
}

impl std::fmt::Display for IntegratorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorConfig<T: Real = f64> {
    pub kind: IntegratorKind,
    pub step_size: T,
    /// Fixed-point stopping threshold, in local norms at the start point.
    pub fp_tolerance: T,
    pub fp_max_iters: usize,
    /// RK4 substeps for the reference flow (the self-check also runs twice as many).
    pub reference_substeps: usize,
    /// Largest endpoint change tolerated when the substep count is doubled.
    pub reference_tolerance: T,
}

impl<T: Real> IntegratorConfig<T> {
    pub fn new(kind: IntegratorKind, step_size: T) -> Self {
        Self {
            kind,
            step_size,
            fp_tolerance: T::cst(T::DEFAULT_FP_TOLERANCE),
            fp_max_iters: 50,
            reference_substeps: 256,
            reference_tolerance: T::cst(T::DEFAULT_REFERENCE_TOLERANCE),
        }
    }

    pub fn with_step_size(&self, h: T) -> Self {
        Self {
            step_size: h,
            ..self.clone()
        }
    }

    pub fn with_kind(&self, kind: IntegratorKind) -> Self {
        Self {
            kind,
            ..self.clone()
        }
    }

    pub fn with_fp_tolerance(mut self, tol: T) -> Self {
        self.fp_tolerance = tol;
        self
    }

    pub fn with_fp_max_iters(mut self, iters: usize) -> Self {
        self.fp_max_iters = iters;
        self
    }

    pub fn with_reference_substeps(mut self, substeps: usize) -> Self {
        self.reference_substeps = substeps;
        self
    }

    /// Checks the parameter ranges. `h = 0` is allowed here (every map is then
    /// the identity); the sampler separately requires `h > 0`.
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size >= T::zero()) || !self.step_size.is_finite() {
            return Err(Error::InvalidConfig("step size must be finite and ≥ 0".into()));
        }
        if !(self.fp_tolerance > T::zero()) {
            return Err(Error::InvalidConfig("fp_tolerance must be > 0".into()));
        }
        if self.fp_max_iters < 1 {
            return Err(Error::InvalidConfig("fp_max_iters must be ≥ 1".into()));
        }
        if self.reference_substeps < 16 {
            return Err(Error::InvalidConfig("reference_substeps must be ≥ 16".into()));
        }
        if !(self.reference_tolerance > T::zero()) {
            return Err(Error::InvalidConfig("reference_tolerance must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepInfo<T: Real = f64> {
    /// Total fixed-point sweeps over all implicit stages.
    pub fp_iters_used: usize,
    pub converged: bool,
    /// Points visited between the input and output states.
    pub intermediate_points: Vec<PhaseState<T>>,
}

/// Advances `state` by one step of the configured integrator.
pub fn step<T: Real>(
    p: &Polytope<T>,
    target: &TargetDensity<T>,
    state: &PhaseState<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<(PhaseState<T>, StepInfo<T>)> {
    match cfg.kind {
        IntegratorKind::ImplicitMidpoint => imm_step(p, target, state, cfg),
        IntegratorKind::GeneralizedLeapfrog => leapfrog_step(p, target, state, cfg),
        IntegratorKind::Reference => {
            let nodes = reference_nodes(p, target, state, cfg)?;
            let end = nodes.last().map(|(_, s)| s.clone()).unwrap_or_else(|| state.clone());
            let intermediate = if nodes.len() > 2 {
                nodes[1..nodes.len() - 1].iter().map(|(_, s)| s.clone()).collect()
            } else {
                Vec::new()
            };
            Ok((
                end,
                StepInfo {
                    fp_iters_used: 0,
                    converged: true,
                    intermediate_points: intermediate,
                },
            ))
        }
    }
}

fn metric_or_diverge<T: Real>(p: &Polytope<T>, x: &[T], iters: usize) -> Result<MetricState<T>> {
    MetricState::new(p, x).map_err(|e| Error::FixedPointDivergence {
        iters,
        reason: format!("iterate left the interior: {e}"),
    })
}

fn check_finite<T: Real>(v: &[T], iters: usize) -> Result<()> {
    if v.iter().all(|a| a.is_finite()) {
        Ok(())
    } else {
        Err(Error::FixedPointDivergence {
            iters,
            reason: "non-finite iterate".into(),
        })
    }
}

fn not_converged(iters: usize) -> Error {
    Error::FixedPointDivergence {
        iters,
        reason: "no convergence within the iteration budget".into(),
    }
}

/// Implicit midpoint method on the split Hamiltonian:
///
/// 1. `v⅓ = v − (h/2) ∂H₁/∂x(x)`
/// 2. solve `x⅔ = x + h g(x̂)⁻¹v̂`, `v⅔ = v⅓ + (h/2) Dg(x̂)[g(x̂)⁻¹v̂, g(x̂)⁻¹v̂]`
///    with midpoints `x̂ = (x + x⅔)/2`, `v̂ = (v⅓ + v⅔)/2`
/// 3. `v₁ = v⅔ − (h/2) ∂H₁/∂x(x⅔)`
pub fn imm_step<T: Real>(
    p: &Polytope<T>,
    target: &TargetDensity<T>,
    state: &PhaseState<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<(PhaseState<T>, StepInfo<T>)> {
    cfg.validate()?;
    let h = cfg.step_size;
    let half_h = h * T::cst(0.5);
    let m0 = MetricState::new(p, &state.x)?;

    let x13 = state.x.clone();
    let v13 = add_scaled(&state.v, -half_h, &dh1_dx(&m0, target));

    let mut x23 = x13.clone();
    let mut v23 = v13.clone();
    let mut iters = 0;
    let mut converged = false;
    while iters < cfg.fp_max_iters {
        iters += 1;
        let xm = midpoint(&x13, &x23);
        let vm = midpoint(&v13, &v23);
        let mm = metric_or_diverge(p, &xm, iters)?;
        let u = mm.solve(&vm);
        let x_new = add_scaled(&x13, h, &u);
        let v_new = add_scaled(&v13, half_h, &mm.dg_bilinear(&u));
        check_finite(&x_new, iters)?;
        check_finite(&v_new, iters)?;
        if !p.contains_strictly(&x_new, T::zero()) {
            return Err(Error::FixedPointDivergence {
                iters,
                reason: "position iterate left the polytope".into(),
            });
        }
        let dx = m0.local_norm_u(&sub(&x_new, &x23));
        let dv = m0.local_norm_v(&sub(&v_new, &v23));
        x23 = x_new;
        v23 = v_new;
        if dx <= cfg.fp_tolerance && dv <= cfg.fp_tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(not_converged(iters));
    }

    let m23 = metric_or_diverge(p, &x23, iters)?;
    let v1 = add_scaled(&v23, -half_h, &dh1_dx(&m23, target));
    let info = StepInfo {
        fp_iters_used: iters,
        converged,
        intermediate_points: vec![PhaseState::new(x13, v13), PhaseState::new(x23.clone(), v23)],
    };
    Ok((PhaseState::new(x23, v1), info))
}

/// Generalized leapfrog:
///
/// 1. solve `v½ = v − (h/2) ∂H/∂x(x, v½)`
/// 2. solve `x₁ = x + (h/2)(g(x)⁻¹ + g(x₁)⁻¹) v½`
/// 3. `v₁ = v½ − (h/2) ∂H/∂x(x₁, v½)`
pub fn leapfrog_step<T: Real>(
    p: &Polytope<T>,
    target: &TargetDensity<T>,
    state: &PhaseState<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<(PhaseState<T>, StepInfo<T>)> {
    cfg.validate()?;
    let h = cfg.step_size;
    let half_h = h * T::cst(0.5);
    let m0 = MetricState::new(p, &state.x)?;
    let grad1 = dh1_dx(&m0, target);

    // stage 1: velocity half step, implicit through ∂H₂/∂x
    let mut v_half = state.v.clone();
    let mut iters = 0;
    let mut converged = false;
    let mut stage_iters = 0;
    while stage_iters < cfg.fp_max_iters {
        stage_iters += 1;
        iters += 1;
        let force: Vec<T> = grad1
            .iter()
            .zip(dh2_dx(&m0, &v_half))
            .map(|(&a, b)| a + b)
            .collect();
        let v_new = add_scaled(&state.v, -half_h, &force);
        check_finite(&v_new, iters)?;
        let dv = m0.local_norm_v(&sub(&v_new, &v_half));
        v_half = v_new;
        if dv <= cfg.fp_tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(not_converged(iters));
    }

    // stage 2: position update, implicit through g(x₁)⁻¹
    let u0 = m0.solve(&v_half);
    let mut x1 = add_scaled(&state.x, h, &u0);
    if !p.contains_strictly(&x1, T::zero()) {
        return Err(Error::FixedPointDivergence {
            iters,
            reason: "initial position guess left the polytope".into(),
        });
    }
    converged = false;
    stage_iters = 0;
    let mut m1 = metric_or_diverge(p, &x1, iters)?;
    while stage_iters < cfg.fp_max_iters {
        stage_iters += 1;
        iters += 1;
        let u1 = m1.solve(&v_half);
        let drift: Vec<T> = u0.iter().zip(&u1).map(|(&a, &b)| a + b).collect();
        let x_new = add_scaled(&state.x, half_h, &drift);
        check_finite(&x_new, iters)?;
        if !p.contains_strictly(&x_new, T::zero()) {
            return Err(Error::FixedPointDivergence {
                iters,
                reason: "position iterate left the polytope".into(),
            });
        }
        let dx = m0.local_norm_u(&sub(&x_new, &x1));
        x1 = x_new;
        m1 = metric_or_diverge(p, &x1, iters)?;
        if dx <= cfg.fp_tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(not_converged(iters));
    }

    // stage 3: explicit velocity half step at the new position
    let v1 = add_scaled(&v_half, -half_h, &dh_dx(&m1, target, &v_half));
    let info = StepInfo {
        fp_iters_used: iters,
        converged,
        intermediate_points: vec![
            PhaseState::new(state.x.clone(), v_half.clone()),
            PhaseState::new(x1.clone(), v_half),
        ],
    };
    Ok((PhaseState::new(x1, v1), info))
}

/// Time derivative of the phase state: `(g⁻¹v, −∂H/∂x)`.
fn vector_field<T: Real>(
    p: &Polytope<T>,
    target: &TargetDensity<T>,
    x: &[T],
    v: &[T],
) -> Result<(Vec<T>, Vec<T>)> {
    let m = MetricState::new(p, x)?;
    let dx = m.solve(v);
    let dv = dh_dx(&m, target, v).into_iter().map(|d| -d).collect();
    Ok((dx, dv))
}

fn rk4<T: Real>(
    p: &Polytope<T>,
    target: &TargetDensity<T>,
    state: &PhaseState<T>,
    h: T,
    substeps: usize,
) -> Result<Vec<(T, PhaseState<T>)>> {
    let dt = h / T::cst(substeps as f64);
    let half = T::cst(0.5);
    let sixth = dt / T::cst(6.0);
    let two = T::cst(2.0);
    let mut nodes = Vec::with_capacity(substeps + 1);
    let (mut x, mut v) = (state.x.clone(), state.v.clone());
    nodes.push((T::zero(), state.clone()));
    for k in 0..substeps {
        let (k1x, k1v) = vector_field(p, target, &x, &v)?;
        let (k2x, k2v) = vector_field(
            p,
            target,
            &add_scaled(&x, half * dt, &k1x),
            &add_scaled(&v, half * dt, &k1v),
        )?;
        let (k3x, k3v) = vector_field(
            p,
            target,
            &add_scaled(&x, half * dt, &k2x),
            &add_scaled(&v, half * dt, &k2v),
        )?;
        let (k4x, k4v) = vector_field(p, target, &add_scaled(&x, dt, &k3x), &add_scaled(&v, dt, &k3v))?;
        for i in 0..x.len() {
            x[i] += sixth * (k1x[i] + two * k2x[i] + two * k3x[i] + k4x[i]);
            v[i] += sixth * (k1v[i] + two * k2v[i] + two * k3v[i] + k4v[i]);
        }
        if !p.contains_strictly(&x, T::zero()) {
            return Err(Error::NotInterior {
                min_slack: p.slacks(&x).iter().fold(f64::INFINITY, |a, s| a.min(s.as_f64())),
            });
        }
        nodes.push((dt * T::cst((k + 1) as f64), PhaseState::new(x.clone(), v.clone())));
    }
    Ok(nodes)
}

/// RK4 nodes `(t, state)` of the reference trajectory at `2·reference_substeps`
/// equal substeps, after checking that halving the substep count changes the
/// endpoint by at most `reference_tolerance` in local norms at the start.
pub fn reference_nodes<T: Real>(
    p: &Polytope<T>,
    target: &TargetDensity<T>,
    state: &PhaseState<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<Vec<(T, PhaseState<T>)>> {
    let (fine, diff) = reference_run(p, target, state, cfg)?;
    if !(diff <= cfg.reference_tolerance) {
        return Err(Error::OracleNotConverged {
            diff: diff.as_f64(),
            tol: cfg.reference_tolerance.as_f64(),
        });
    }
    Ok(fine)
}

/// Endpoint difference between the `reference_substeps` and
/// `2·reference_substeps` RK4 runs, in local norms at the start.
pub fn richardson_gap<T: Real>(
    p: &Polytope<T>,
    target: &TargetDensity<T>,
    state: &PhaseState<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<T> {
    Ok(reference_run(p, target, state, cfg)?.1)
}

type Nodes<T> = Vec<(T, PhaseState<T>)>;

fn reference_run<T: Real>(
    p: &Polytope<T>,
    target: &TargetDensity<T>,
    state: &PhaseState<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<(Nodes<T>, T)> {
    cfg.validate()?;
    let m0 = MetricState::new(p, &state.x)?;
    if cfg.step_size == T::zero() {
        return Ok((vec![(T::zero(), state.clone())], T::zero()));
    }
    let coarse = rk4(p, target, state, cfg.step_size, cfg.reference_substeps)?;
    let fine = rk4(p, target, state, cfg.step_size, 2 * cfg.reference_substeps)?;
    let (_, c) = coarse.last().expect("at least one node");
    let (_, f) = fine.last().expect("at least one node");
    let diff = m0
        .local_norm_u(&sub(&c.x, &f.x))
        .max(m0.local_norm_v(&sub(&c.v, &f.v)));
    Ok((fine, diff))
}

/// Endpoint of the reference flow over time `cfg.step_size`.
pub fn reference_flow<T: Real>(
    p: &Polytope<T>,
    target: &TargetDensity<T>,
    state: &PhaseState<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<PhaseState<T>> {
    let nodes = reference_nodes(p, target, state, cfg)?;
    Ok(nodes.last().map(|(_, s)| s.clone()).expect("at least one node"))
}

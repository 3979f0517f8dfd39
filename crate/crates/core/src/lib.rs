//! Riemannian Hamiltonian Monte Carlo on polytopes `{x : Ax ≥ b}` with the
//! log-barrier Hessian metric.
//!
//! Targets densities proportional to `exp(−αᵀx)` (uniform when `α = 0`). Two
//! symplectic, time-reversible one-step integrators drive the chain: the
//! implicit midpoint method on the split Hamiltonian and the generalized
//! leapfrog. A Runge-Kutta reference flow serves as the exact-flow oracle in
//! the diagnostics.
//!
//! Everything is generic over the scalar type (`f32` or `f64`); the `*64`
//! aliases below fix it to `f64`.

// NaN-rejecting checks are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod diagnostics;
pub mod error;
pub mod hamiltonian;
pub mod integrators;
pub mod linalg;
pub mod metric;
pub mod polytope;
pub mod sampler;
pub mod scalar;

pub use error::{Error, Result};
pub use hamiltonian::{PhaseState, TargetDensity};
pub use integrators::{IntegratorConfig, IntegratorKind, StepInfo};
pub use linalg::Matrix;
pub use metric::MetricState;
pub use polytope::Polytope;
pub use sampler::{run_chain, rhmc_step, ChainConfig, ChainOutput, ChainStats, StepPreset};
pub use scalar::Real;

pub type Polytope64 = Polytope<f64>;
pub type Polytope32 = Polytope<f32>;
pub type MetricState64 = MetricState<f64>;
pub type PhaseState64 = PhaseState<f64>;
pub type TargetDensity64 = TargetDensity<f64>;
pub type IntegratorConfig64 = IntegratorConfig<f64>;

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating-point scalar the sampler is generic over: `f32` or `f64`.
///
/// The defaults below are the precision-dependent knobs; everything else in
/// the crate derives its constants from `Real::cst`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Fixed-point convergence threshold used when none is configured.
    const DEFAULT_FP_TOLERANCE: f64;
    /// Richardson doubling threshold for the Runge-Kutta reference flow.
    const DEFAULT_REFERENCE_TOLERANCE: f64;

    /// Converts an `f64` constant into this scalar type.
    #[inline]
    fn cst(x: f64) -> Self {
        Self::from_f64(x).expect("constant representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    const DEFAULT_FP_TOLERANCE: f64 = 1e-10;
    const DEFAULT_REFERENCE_TOLERANCE: f64 = 1e-9;
}

impl Real for f32 {
    const DEFAULT_FP_TOLERANCE: f64 = 1e-5;
    const DEFAULT_REFERENCE_TOLERANCE: f64 = 1e-3;
}

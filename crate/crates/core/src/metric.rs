//! Log-barrier Hessian metric `g(x) = ∇²φ(x) = A_xᵀA_x` with `A_x = S_x⁻¹A`,
//! its derivative tensors, and local norms.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf, Cholesky, Matrix};
use crate::polytope::Polytope;
use crate::scalar::Real;

/// Everything needed to evaluate the metric at one strictly interior point.
///
/// Built once per point and never updated; trajectory code creates a fresh
/// state at every node it visits.
#[derive(Clone, Debug)]
pub struct MetricState<T: Real = f64> {
    x: Vec<T>,
    s: Vec<T>,
    scaled_a: Matrix<T>,
    chol: Cholesky<T>,
    logdet: T,
}

impl<T: Real> MetricState<T> {
    /// Evaluates slacks, `A_x`, and a Cholesky factor of `g(x)`.
    ///
    /// Points whose smallest slack is below `1e-12·(1 + ‖x‖∞)` are rejected
    /// as `NotInterior` rather than producing a hopelessly conditioned metric.
    pub fn new(p: &Polytope<T>, x: &[T]) -> Result<Self> {
        if x.len() != p.n() {
            return Err(Error::InvalidDimension(format!(
                "point has length {}, expected {}",
                x.len(),
                p.n()
            )));
        }
        let s = p.slacks(x);
        let min_slack = s.iter().fold(T::infinity(), |acc, &v| acc.min(v));
        let floor = T::cst(1e-12) * (T::one() + norm_inf(x));
        if !(min_slack > floor) {
            return Err(Error::NotInterior {
                min_slack: min_slack.as_f64(),
            });
        }
        let mut scaled_a = p.a().clone();
        for (i, &si) in s.iter().enumerate() {
            let inv = T::one() / si;
            for v in scaled_a.row_mut(i) {
                *v *= inv;
            }
        }
        let g = scaled_a.gram();
        let chol = Cholesky::new(&g).ok_or(Error::FactorizationFailure)?;
        let logdet = chol.log_det();
        Ok(Self {
            x: x.to_vec(),
            s,
            scaled_a,
            chol,
            logdet,
        })
    }

    pub fn x(&self) -> &[T] {
        &self.x
    }

    pub fn slacks(&self) -> &[T] {
        &self.s
    }

    /// `A_x = S_x⁻¹A`
    pub fn scaled_a(&self) -> &Matrix<T> {
        &self.scaled_a
    }

    pub fn cholesky(&self) -> &Cholesky<T> {
        &self.chol
    }

    /// `log det g(x)`
    pub fn logdet(&self) -> T {
        self.logdet
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Dense `g(x)`, rebuilt from `A_x`.
    pub fn metric_matrix(&self) -> Matrix<T> {
        self.scaled_a.gram()
    }

    /// `g(x)·u = A_xᵀ(A_x u)`
    pub fn apply(&self, u: &[T]) -> Vec<T> {
        self.scaled_a.tr_mul_vec(&self.scaled_a.mul_vec(u))
    }

    /// `g(x)⁻¹·w` by two triangular solves.
    pub fn solve(&self, w: &[T]) -> Vec<T> {
        self.chol.solve(w)
    }

    /// Leverage scores `σᵢ = (A_x g⁻¹ A_xᵀ)ᵢᵢ`. They lie in `[0, 1]` and sum to `n`.
    pub fn leverage_scores(&self) -> Vec<T> {
        // with L Lᵀ = g, σᵢ = ‖L⁻¹ A_xᵢ‖²
        self.scaled_a
            .rows_iter()
            .map(|r| {
                let y = self.chol.solve_lower(r);
                dot(&y, &y)
            })
            .collect()
    }

    /// `∇ log det g(x)`, whose k-th entry is `tr(g⁻¹ ∂g/∂x_k) = −2 (A_xᵀσ)_k`.
    pub fn grad_log_det(&self) -> Vec<T> {
        let sigma = self.leverage_scores();
        let two = T::cst(2.0);
        self.scaled_a
            .tr_mul_vec(&sigma)
            .into_iter()
            .map(|v| -two * v)
            .collect()
    }

    /// `Dg(x)[u, u]`, the vector with k-th entry `uᵀ (∂g/∂x_k) u`, which for
    /// the log barrier is `−2 A_xᵀ((A_x u)∘(A_x u))`.
    pub fn dg_bilinear(&self, u: &[T]) -> Vec<T> {
        let two = T::cst(2.0);
        let su: Vec<T> = self.scaled_a.mul_vec(u).iter().map(|&z| z * z).collect();
        self.scaled_a
            .tr_mul_vec(&su)
            .into_iter()
            .map(|v| -two * v)
            .collect()
    }

    /// `Dg(x)[u, w]`, the symmetric bilinear form behind [`Self::dg_bilinear`].
    pub fn dg_polar(&self, u: &[T], w: &[T]) -> Vec<T> {
        let two = T::cst(2.0);
        let au = self.scaled_a.mul_vec(u);
        let aw = self.scaled_a.mul_vec(w);
        let prod: Vec<T> = au.iter().zip(&aw).map(|(&p, &q)| p * q).collect();
        self.scaled_a
            .tr_mul_vec(&prod)
            .into_iter()
            .map(|v| -two * v)
            .collect()
    }

    /// Velocity norm `‖v‖_{g⁻¹} = √(vᵀg⁻¹v)`.
    pub fn local_norm_v(&self, v: &[T]) -> T {
        let y = self.chol.solve_lower(v);
        dot(&y, &y).sqrt()
    }

    /// Position norm `‖u‖_g = √(uᵀg u) = ‖A_x u‖₂`.
    pub fn local_norm_u(&self, u: &[T]) -> T {
        let au = self.scaled_a.mul_vec(u);
        dot(&au, &au).sqrt()
    }

    /// `s_v = A_x u` for a position-like direction `u`.
    pub fn slack_velocity(&self, u: &[T]) -> Vec<T> {
        self.scaled_a.mul_vec(u)
    }
}

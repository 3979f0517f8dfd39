//! The Riemannian Hamiltonian `H(x, v) = αᵀx + ½vᵀg(x)⁻¹v + ½ log det g(x)`,
//! split as `H₁ = αᵀx + ½ log det g` and `H₂ = ½vᵀg⁻¹v`.
//!
//! Velocities are kept in Euclidean coordinates throughout, so the velocity
//! refresh draws `v ~ N(0, g(x))` and `dx/dt = g(x)⁻¹v`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::metric::MetricState;
use crate::scalar::Real;

/// Density proportional to `exp(−αᵀx)` on the polytope; `α = 0` is uniform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetDensity<T: Real = f64> {
    alpha: Vec<T>,
}

impl<T: Real> TargetDensity<T> {
    pub fn new(alpha: Vec<T>) -> Result<Self> {
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::DomainError("alpha must be finite".into()));
        }
        Ok(Self { alpha })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            alpha: vec![T::zero(); n],
        }
    }

    pub fn alpha(&self) -> &[T] {
        &self.alpha
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_uniform(&self) -> bool {
        self.alpha.iter().all(|a| a.is_zero())
    }

    /// `f(x) = αᵀx`
    pub fn potential(&self, x: &[T]) -> T {
        dot(&self.alpha, x)
    }
}

/// A position-velocity pair in Euclidean coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseState<T: Real = f64> {
    pub x: Vec<T>,
    pub v: Vec<T>,
}

impl<T: Real> PhaseState<T> {
    pub fn new(x: Vec<T>, v: Vec<T>) -> Self {
        Self { x, v }
    }

    /// The same point with velocity negated.
    pub fn flipped(&self) -> Self {
        Self {
            x: self.x.clone(),
            v: self.v.iter().map(|&vi| -vi).collect(),
        }
    }
}

pub fn hamiltonian<T: Real>(m: &MetricState<T>, target: &TargetDensity<T>, v: &[T]) -> T {
    let half = T::cst(0.5);
    let kinetic = m.local_norm_v(v);
    target.potential(m.x()) + half * kinetic * kinetic + half * m.logdet()
}

/// `H₁(x) = αᵀx + ½ log det g(x)`
pub fn h1<T: Real>(m: &MetricState<T>, target: &TargetDensity<T>) -> T {
    target.potential(m.x()) + T::cst(0.5) * m.logdet()
}

/// `∂H₁/∂x = α + ½ ∇ log det g(x)`
pub fn dh1_dx<T: Real>(m: &MetricState<T>, target: &TargetDensity<T>) -> Vec<T> {
    let half = T::cst(0.5);
    target
        .alpha()
        .iter()
        .zip(m.grad_log_det())
        .map(|(&a, d)| a + half * d)
        .collect()
}

/// `∂H₂/∂x = −½ Dg(x)[g⁻¹v, g⁻¹v]`
pub fn dh2_dx<T: Real>(m: &MetricState<T>, v: &[T]) -> Vec<T> {
    let half = T::cst(0.5);
    let u = m.solve(v);
    m.dg_bilinear(&u).into_iter().map(|d| -half * d).collect()
}

/// `∂H/∂x = ∂H₁/∂x + ∂H₂/∂x`
pub fn dh_dx<T: Real>(m: &MetricState<T>, target: &TargetDensity<T>, v: &[T]) -> Vec<T> {
    dh1_dx(m, target)
        .into_iter()
        .zip(dh2_dx(m, v))
        .map(|(a, b)| a + b)
        .collect()
}

/// `∂H/∂v = g(x)⁻¹v`
pub fn dh_dv<T: Real>(m: &MetricState<T>, v: &[T]) -> Vec<T> {
    m.solve(v)
}

/// Draws `v = L z` with `z` standard normal (ziggurat, via `rand_distr`), so
/// `Cov(v) = g(x)`.
pub fn sample_velocity<T: Real, R: Rng + ?Sized>(m: &MetricState<T>, rng: &mut R) -> Vec<T> {
    let z: Vec<T> = (0..m.dim())
        .map(|_| T::cst(rng.sample::<f64, _>(StandardNormal)))
        .collect();
    m.cholesky().mul_l(&z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm2;
    use crate::polytope::Polytope;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const G_QUARTER: f64 = 1.0 / 0.0625 + 1.0 / 0.5625;

    fn interior_point(p: &Polytope<f64>, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let c = p.interior_point().to_vec();
        let ms = MetricState::new(p, &c).unwrap();
        loop {
            let d: Vec<f64> = (0..p.n()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let t = rng.random_range(0.0..0.85) / ms.local_norm_u(&d);
            let x: Vec<f64> = c.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            if p.contains_strictly(&x, 1e-3) {
                return x;
            }
        }
    }

    fn h_at(p: &Polytope<f64>, t: &TargetDensity<f64>, x: &[f64], v: &[f64]) -> f64 {
        hamiltonian(&MetricState::new(p, x).unwrap(), t, v)
    }

    #[test]
    fn hamiltonian_examples() {
        for n in 1..=4 {
            let p = Polytope::<f64>::hypercube(n, -1.0, 1.0).unwrap();
            let ms = MetricState::new(&p, &vec![0.0; n]).unwrap();
            let h = hamiltonian(&ms, &TargetDensity::uniform(n), &vec![0.0; n]);
            assert_relative_eq!(h, 0.5 * n as f64 * 2f64.ln(), epsilon = 1e-14);
        }
        let p = Polytope::<f64>::hypercube(1, -1.0, 1.0).unwrap();
        let ms = MetricState::new(&p, &[0.0]).unwrap();
        let h = hamiltonian(&ms, &TargetDensity::uniform(1), &[1.0]);
        assert_relative_eq!(h, 0.25 + 0.5 * 2f64.ln(), epsilon = 1e-14);

        let p = Polytope::<f64>::hypercube(1, 0.0, 1.0).unwrap();
        let ms = MetricState::new(&p, &[0.25]).unwrap();
        let t = TargetDensity::new(vec![3.0]).unwrap();
        let expected = 0.75 + 4.0 / (2.0 * G_QUARTER) + 0.5 * G_QUARTER.ln();
        assert_relative_eq!(hamiltonian(&ms, &t, &[2.0]), expected, epsilon = 1e-13);
    }

    #[test]
    fn partials_at_box_center() {
        let p = Polytope::<f64>::hypercube(3, -1.0, 1.0).unwrap();
        let ms = MetricState::new(&p, &[0.0; 3]).unwrap();
        let t = TargetDensity::new(vec![0.3, -1.0, 2.0]).unwrap();
        assert_eq!(dh1_dx(&ms, &t), vec![0.3, -1.0, 2.0]);
        assert_eq!(dh1_dx(&ms, &TargetDensity::uniform(3)), vec![0.0; 3]);
        assert!(dh2_dx(&ms, &[1.0, -2.0, 0.5]).iter().all(|&v| v == 0.0));
        for (a, b) in dh_dv(&ms, &[1.0, 2.0, 4.0]).iter().zip([0.5, 1.0, 2.0]) {
            assert_relative_eq!(*a, b, epsilon = 1e-15);
        }
        let off = MetricState::new(&p, &[0.2, -0.4, 0.1]).unwrap();
        assert!(dh2_dx(&off, &[0.0; 3]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn partials_match_finite_differences() {
        let eps = 1e-5;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for seed in 0..8 {
            let p = Polytope::<f64>::random(3, 8, 40 + seed).unwrap();
            let t = TargetDensity::new(vec![0.5, -1.0, 2.0]).unwrap();
            let x = interior_point(&p, &mut rng);
            let v: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let ms = MetricState::new(&p, &x).unwrap();
            let d1 = dh1_dx(&ms, &t);
            let d2 = dh2_dx(&ms, &v);
            let dv = dh_dv(&ms, &v);
            let h1_at = |y: &[f64]| h1(&MetricState::new(&p, y).unwrap(), &t);
            let h2_at = |y: &[f64], w: &[f64]| {
                let k = MetricState::new(&p, y).unwrap().local_norm_v(w);
                0.5 * k * k
            };
            let (n1, n2, nv) = (norm2(&d1).max(1e-3), norm2(&d2).max(1e-3), norm2(&dv).max(1e-3));
            for k in 0..3 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[k] += eps;
                xm[k] -= eps;
                let fd1 = (h1_at(&xp) - h1_at(&xm)) / (2.0 * eps);
                assert!((fd1 - d1[k]).abs() <= 1e-4 * n1);
                let fd2 = (h2_at(&xp, &v) - h2_at(&xm, &v)) / (2.0 * eps);
                assert!((fd2 - d2[k]).abs() <= 1e-4 * n2);
                let mut vp = v.clone();
                let mut vm = v.clone();
                vp[k] += eps;
                vm[k] -= eps;
                let fdv = (h2_at(&x, &vp) - h2_at(&x, &vm)) / (2.0 * eps);
                assert!((fdv - dv[k]).abs() <= 1e-4 * nv);
                // full H against the summed partial
                let fdh = (h_at(&p, &t, &xp, &v) - h_at(&p, &t, &xm, &v)) / (2.0 * eps);
                assert!((fdh - d1[k] - d2[k]).abs() <= 1e-4 * (n1 + n2));
            }
        }
    }

    #[test]
    fn velocity_covariance_matches_metric() {
        let n = 3;
        let p = Polytope::<f64>::hypercube(n, -1.0, 1.0).unwrap();
        let ms = MetricState::new(&p, &vec![0.0; n]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let draws = 100_000;
        let mut cov = vec![vec![0.0; n]; n];
        let mut sq_norm = 0.0;
        for _ in 0..draws {
            let v = sample_velocity(&ms, &mut rng);
            for j in 0..n {
                for k in 0..n {
                    cov[j][k] += v[j] * v[k];
                }
            }
            let q = ms.local_norm_v(&v);
            sq_norm += q * q;
        }
        for j in 0..n {
            for k in 0..n {
                let c = cov[j][k] / draws as f64;
                let target = if j == k { 2.0 } else { 0.0 };
                // 5% of the diagonal scale
                assert!((c - target).abs() <= 0.05 * 2.0, "cov[{j}][{k}] = {c}");
            }
        }
        let mean = sq_norm / draws as f64;
        let band = 3.0 * (2.0 * n as f64 / draws as f64).sqrt();
        assert!((mean - n as f64).abs() <= band, "E‖v‖² = {mean}");
    }

    #[test]
    fn velocity_draws_are_deterministic() {
        let p = Polytope::<f64>::simplex(4).unwrap();
        let ms = MetricState::new(&p, p.interior_point()).unwrap();
        let a = sample_velocity(&ms, &mut ChaCha8Rng::seed_from_u64(77));
        let b = sample_velocity(&ms, &mut ChaCha8Rng::seed_from_u64(77));
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_non_finite_alpha() {
        assert!(TargetDensity::new(vec![1.0, f64::NAN]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn even_in_velocity(seed in 0u64..500, v in proptest::collection::vec(-5.0f64..5.0, 3)) {
            let p = Polytope::<f64>::random(3, 7, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = interior_point(&p, &mut rng);
            let ms = MetricState::new(&p, &x).unwrap();
            let t = TargetDensity::new(vec![1.0, 0.0, -2.0]).unwrap();
            let neg: Vec<f64> = v.iter().map(|a| -a).collect();
            prop_assert_eq!(hamiltonian(&ms, &t, &v), hamiltonian(&ms, &t, &neg));
        }

        #[test]
        fn partial_derivative_bounds(seed in 0u64..500,
                                     v in proptest::collection::vec(-5.0f64..5.0, 4),
                                     alpha in proptest::collection::vec(-3.0f64..3.0, 4)) {
            let p = Polytope::<f64>::random(4, 10, seed).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
            let x = interior_point(&p, &mut rng);
            let ms = MetricState::new(&p, &x).unwrap();
            let t = TargetDensity::new(alpha.clone()).unwrap();
            let vn = ms.local_norm_v(&v);
            prop_assert!(ms.local_norm_v(&dh1_dx(&ms, &t)) <= ms.local_norm_v(&alpha) + 4.0 + 1e-9);
            prop_assert!(ms.local_norm_u(&dh_dv(&ms, &v)) <= vn + 1e-9);
            prop_assert!(ms.local_norm_v(&dh2_dx(&ms, &v)) <= vn * vn + 1e-9);
        }
    }
}

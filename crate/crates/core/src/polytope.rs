//! Polytopes `{x : Ax ≥ b}`: construction, text format, fixtures, and interior points.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, numerical_rank, Cholesky, Matrix};
use crate::metric::MetricState;
use crate::scalar::Real;

/// A full-dimensional polytope `{x ∈ Rⁿ : Ax ≥ b}` with a stored strictly
/// interior point. Immutable after construction.
#[derive(Clone, Debug)]
pub struct Polytope<T: Real = f64> {
    a: Matrix<T>,
    b: Vec<T>,
    interior: Vec<T>,
}

impl<T: Real> Polytope<T> {
    /// Validates `A`, `b` and searches for a strictly interior point. The stored
    /// witness is the analytic center when the barrier has a minimizer, and the
    /// phase-I point otherwise.
    pub fn new(a: Matrix<T>, b: Vec<T>) -> Result<Self> {
        validate(&a, &b)?;
        let feasible = phase_one(&a, &b)?;
        let mut p = Self {
            a,
            b,
            interior: feasible,
        };
        if let Ok(center) = p.analytic_center() {
            p.interior = center;
        }
        Ok(p)
    }

    /// Like [`Polytope::new`] but with a caller-supplied interior witness.
    pub fn with_interior_point(a: Matrix<T>, b: Vec<T>, witness: Vec<T>) -> Result<Self> {
        validate(&a, &b)?;
        if witness.len() != a.ncols() {
            return Err(Error::InvalidDimension(format!(
                "witness has length {}, expected {}",
                witness.len(),
                a.ncols()
            )));
        }
        let p = Self {
            a,
            b,
            interior: witness,
        };
        if !p.contains_strictly(&p.interior, T::zero()) {
            return Err(Error::InfeasibleInterior);
        }
        Ok(p)
    }

    /// Parses the whitespace-separated text format: a header `m n` followed by
    /// `m` lines of `a_i1 … a_in b_i`. Lines starting with `#` are comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: "empty input".into(),
        })?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                line: hline,
                msg: format!("bad header: {e}"),
            })?;
        let (mut m, mut n) = match dims.as_slice() {
            [m, n] => (*m, *n),
            _ => {
                return Err(Error::Parse {
                    line: hline,
                    msg: "header must be `m n`".into(),
                })
            }
        };
        // m < n is never valid, so a header written as `n m` is unambiguous
        if m < n {
            std::mem::swap(&mut m, &mut n);
        }
        if n == 0 {
            return Err(Error::Parse {
                line: hline,
                msg: "dimension must be at least 1".into(),
            });
        }

        let mut rows = Vec::with_capacity(m);
        let mut b = Vec::with_capacity(m);
        for _ in 0..m {
            let (ln, line) = lines.next().ok_or(Error::Parse {
                line: hline,
                msg: format!("expected {m} constraint rows, found {}", rows.len()),
            })?;
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(str::parse::<f64>)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse {
                    line: ln,
                    msg: format!("bad number: {e}"),
                })?;
            if vals.len() != n + 1 {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("expected {} values, found {}", n + 1, vals.len()),
                });
            }
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::Parse {
                    line: ln,
                    msg: "non-finite value".into(),
                });
            }
            if vals[..n].iter().all(|&v| v == 0.0) {
                return Err(Error::Parse {
                    line: ln,
                    msg: "zero constraint row".into(),
                });
            }
            rows.push(vals[..n].iter().map(|&v| T::cst(v)).collect::<Vec<_>>());
            b.push(T::cst(vals[n]));
        }
        if let Some((ln, _)) = lines.next() {
            return Err(Error::Parse {
                line: ln,
                msg: "trailing content after constraint rows".into(),
            });
        }
        let a = Matrix::from_rows(&rows).expect("rows checked to equal length");
        Self::new(a, b)
    }

    /// Serializes to the text format read by [`Polytope::parse`].
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.m(), self.n());
        for (row, bi) in self.a.rows_iter().zip(&self.b) {
            for v in row {
                let _ = write!(s, "{:.17e} ", v.as_f64());
            }
            let _ = writeln!(s, "{:.17e}", bi.as_f64());
        }
        s
    }

    /// The box `[lo, hi]ⁿ` with rows ordered `x_i ≥ lo`, `−x_i ≥ −hi` per coordinate.
    pub fn hypercube(n: usize, lo: T, hi: T) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension("n must be at least 1".into()));
        }
        if !(lo < hi) {
            return Err(Error::InvalidDimension(format!(
                "need lo < hi, got [{lo}, {hi}]"
            )));
        }
        let mut a = Matrix::zeros(2 * n, n);
        let mut b = Vec::with_capacity(2 * n);
        for i in 0..n {
            a[(2 * i, i)] = T::one();
            a[(2 * i + 1, i)] = -T::one();
            b.push(lo);
            b.push(-hi);
        }
        let mid = (lo + hi) * T::cst(0.5);
        Self::with_interior_point(a, b, vec![mid; n])
    }

    /// The standard simplex `{x ≥ 0, Σx ≤ 1}`.
    pub fn simplex(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension("n must be at least 1".into()));
        }
        let mut a = Matrix::zeros(n + 1, n);
        for i in 0..n {
            a[(i, i)] = T::one();
            a[(n, i)] = -T::one();
        }
        let mut b = vec![T::zero(); n + 1];
        b[n] = -T::one();
        let c = T::one() / T::cst((n + 1) as f64);
        Self::with_interior_point(a, b, vec![c; n])
    }

    /// `m` constraints with unit normals drawn uniformly from the sphere and
    /// `b_i = −1`, so the unit ball is inscribed and the origin has slack 1.
    pub fn random(n: usize, m: usize, seed: u64) -> Result<Self> {
        if n == 0 || m < n + 1 {
            return Err(Error::InvalidDimension(format!(
                "random polytope needs n ≥ 1 and m ≥ n + 1, got n={n}, m={m}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::with_capacity(m);
        while rows.len() < m {
            let g: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let r = norm2(&g);
            if r > 1e-12 {
                rows.push(g.iter().map(|&v| T::cst(v / r)).collect::<Vec<T>>());
            }
        }
        let a = Matrix::from_rows(&rows).expect("equal-length rows");
        Self::with_interior_point(a, vec![-T::one(); m], vec![T::zero(); n])
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn a(&self) -> &Matrix<T> {
        &self.a
    }

    pub fn b(&self) -> &[T] {
        &self.b
    }

    /// The strictly interior witness found or supplied at construction.
    pub fn interior_point(&self) -> &[T] {
        &self.interior
    }

    /// `s = Ax − b`. Negative entries are returned as is.
    pub fn slacks(&self, x: &[T]) -> Vec<T> {
        self.a
            .rows_iter()
            .zip(&self.b)
            .map(|(r, &bi)| dot(r, x) - bi)
            .collect()
    }

    pub fn contains_strictly(&self, x: &[T], margin: T) -> bool {
        x.len() == self.n() && self.slacks(x).iter().all(|&s| s > margin)
    }

    /// Log barrier `−Σ log sᵢ`, or `None` outside the interior.
    pub fn barrier(&self, x: &[T]) -> Option<T> {
        let s = self.slacks(x);
        s.iter()
            .all(|&si| si > T::zero())
            .then(|| -s.iter().map(|si| si.ln()).sum::<T>())
    }

    /// Minimizer of the log barrier by damped Newton from the stored witness.
    /// Stops once the Newton decrement `‖∇φ‖_{g⁻¹}` is at most `1e-8`.
    pub fn analytic_center(&self) -> Result<Vec<T>> {
        let tol = T::cst(1e-8).max(T::cst(1e3) * T::epsilon());
        let mut x = self.interior.clone();
        for _ in 0..200 {
            let ms = MetricState::new(self, &x)
                .map_err(|e| Error::NoInteriorPoint(format!("lost interiority: {e}")))?;
            // ∇φ = −A_xᵀ 1
            let grad: Vec<T> = ms.scaled_a().tr_mul_vec(&vec![T::one(); self.m()]);
            let grad: Vec<T> = grad.iter().map(|&g| -g).collect();
            let step = ms.solve(&grad);
            let lambda = dot(&grad, &step).max(T::zero()).sqrt();
            if !lambda.is_finite() {
                break;
            }
            if lambda <= tol {
                return Ok(x);
            }
            let mut t = if lambda > T::cst(0.25) {
                T::one() / (T::one() + lambda)
            } else {
                T::one()
            };
            loop {
                let cand: Vec<T> = x.iter().zip(&step).map(|(&xi, &d)| xi - t * d).collect();
                if self.contains_strictly(&cand, T::zero()) {
                    x = cand;
                    break;
                }
                t *= T::cst(0.5);
                if t < T::cst(1e-12) {
                    return Err(Error::NoInteriorPoint("step collapsed".into()));
                }
            }
        }
        Err(Error::NoInteriorPoint(
            "iteration budget exhausted (polytope may be unbounded)".into(),
        ))
    }
}

fn validate<T: Real>(a: &Matrix<T>, b: &[T]) -> Result<()> {
    let (m, n) = (a.nrows(), a.ncols());
    if n == 0 || m < n {
        return Err(Error::InvalidDimension(format!(
            "need m ≥ n ≥ 1, got m={m}, n={n}"
        )));
    }
    if b.len() != m {
        return Err(Error::InvalidDimension(format!(
            "b has length {}, expected {m}",
            b.len()
        )));
    }
    if a.as_slice().iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::DomainError("non-finite entry in A or b".into()));
    }
    if let Some(i) = a.rows_iter().position(|r| r.iter().all(|&v| v == T::zero())) {
        return Err(Error::DomainError(format!("row {i} of A is zero")));
    }
    let rel_tol = T::cst(1e-10).max(T::cst(10.0 * m as f64) * T::epsilon());
    let rank = numerical_rank(a, rel_tol);
    if rank < n {
        return Err(Error::RankDeficient { rank, n });
    }
    Ok(())
}

/// Finds `x` with `Ax > b` by path-following on the relaxed barrier
/// `κt − Σ log(aᵢᵀx − bᵢ + t)` over `(x, t)`, increasing `κ` until `t < 0`.
fn phase_one<T: Real>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    let (m, n) = (a.nrows(), a.ncols());
    let slack = |x: &[T]| -> Vec<T> { a.rows_iter().zip(b).map(|(r, &bi)| dot(r, x) - bi).collect() };

    let mut x = vec![T::zero(); n];
    let s0 = slack(&x);
    if s0.iter().all(|&s| s > T::zero()) {
        return Ok(x);
    }
    let worst = s0.iter().fold(T::infinity(), |acc, &s| acc.min(s));
    let mut t = T::one() - worst;
    let reg = T::cst(1e-10);
    let mut kappa = T::one() / T::cst(m as f64);

    for _outer in 0..60 {
        for _inner in 0..60 {
            let s = slack(&x);
            let st: Vec<T> = s.iter().map(|&si| si + t).collect();
            // gradient and Hessian in z = (x, t)
            let mut grad = vec![T::zero(); n + 1];
            let mut hess = Matrix::zeros(n + 1, n + 1);
            for (i, row) in a.rows_iter().enumerate() {
                let w = T::one() / st[i];
                let w2 = w * w;
                for j in 0..=n {
                    let wj = if j < n { row[j] } else { T::one() };
                    grad[j] -= w * wj;
                    for k in j..=n {
                        let wk = if k < n { row[k] } else { T::one() };
                        hess[(j, k)] += w2 * wj * wk;
                    }
                }
            }
            grad[n] += kappa;
            for j in 0..n {
                grad[j] += reg * x[j];
                hess[(j, j)] += reg;
            }
            for j in 0..=n {
                for k in 0..j {
                    hess[(j, k)] = hess[(k, j)];
                }
            }
            let chol = Cholesky::new(&hess).ok_or(Error::InfeasibleInterior)?;
            let step = chol.solve(&grad);
            let lambda = dot(&grad, &step).max(T::zero()).sqrt();
            let mut tau = T::one() / (T::one() + lambda);
            loop {
                let xc: Vec<T> = x.iter().zip(&step).map(|(&xi, &d)| xi - tau * d).collect();
                let tc = t - tau * step[n];
                if slack(&xc).iter().all(|&si| si + tc > T::zero()) {
                    x = xc;
                    t = tc;
                    break;
                }
                tau *= T::cst(0.5);
                if tau < T::cst(1e-14) {
                    return Err(Error::InfeasibleInterior);
                }
            }
            if slack(&x).iter().all(|&si| si > T::zero()) {
                return Ok(x);
            }
            if lambda < T::cst(1e-6) {
                break;
            }
        }
        kappa *= T::cst(4.0);
    }
    Err(Error::InfeasibleInterior)
}

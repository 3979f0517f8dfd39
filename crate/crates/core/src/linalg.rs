//! Small dense linear algebra: row-major matrices, Cholesky, pivoted QR rank,
//! and LU determinants. Sizes here are a few hundred at most.

use std::ops::{Index, IndexMut};

use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds a matrix from row-major data. Returns `None` on a length mismatch.
    pub fn from_row_slice(rows: usize, cols: usize, data: &[T]) -> Option<Self> {
        (data.len() == rows * cols).then(|| Self {
            rows,
            cols,
            data: data.to_vec(),
        })
    }

    /// Builds a matrix from equal-length rows. Returns `None` if rows are ragged.
    pub fn from_rows(rows: &[Vec<T>]) -> Option<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return None;
        }
        Some(Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `self · x`
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.cols);
        self.rows_iter().map(|r| dot(r, x)).collect()
    }

    /// `selfᵀ · y`
    pub fn tr_mul_vec(&self, y: &[T]) -> Vec<T> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (r, &yi) in self.rows_iter().zip(y) {
            for (o, &a) in out.iter_mut().zip(r) {
                *o += a * yi;
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// `selfᵀ · self`, symmetric by construction.
    pub fn gram(&self) -> Self {
        let n = self.cols;
        let mut g = Self::zeros(n, n);
        for r in self.rows_iter() {
            for j in 0..n {
                let rj = r[j];
                if rj == T::zero() {
                    continue;
                }
                for k in j..n {
                    g[(j, k)] += rj * r[k];
                }
            }
        }
        for j in 0..n {
            for k in 0..j {
                g[(j, k)] = g[(k, j)];
            }
        }
        g
    }

    pub fn frobenius_norm(&self) -> T {
        norm2(&self.data)
    }

    /// Permutes rows so that row `i` of the result is row `perm[i]` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        let mut out = Self::zeros(self.rows, self.cols);
        for (i, &p) in perm.iter().enumerate() {
            out.row_mut(i).copy_from_slice(self.row(p));
        }
        out
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub fn norm2<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn norm_inf<T: Real>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

/// `a + s·b`
pub fn add_scaled<T: Real>(a: &[T], s: T, b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + s * y).collect()
}

pub fn sub<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn scale<T: Real>(s: T, a: &[T]) -> Vec<T> {
    a.iter().map(|&x| s * x).collect()
}

pub fn midpoint<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    let half = T::cst(0.5);
    a.iter().zip(b).map(|(&x, &y)| half * (x + y)).collect()
}

/// Lower Cholesky factor `L` with `L Lᵀ = A` of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    l: Matrix<T>,
}

impl<T: Real> Cholesky<T> {
    /// Factorizes `a`; only the lower triangle is read. `None` on breakdown.
    pub fn new(a: &Matrix<T>) -> Option<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return None;
        }
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > T::zero()) || !d.is_finite() {
                return None;
            }
            let ljj = d.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Some(Self { l })
    }

    pub fn l(&self) -> &Matrix<T> {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// Solves `L y = b`.
    pub fn solve_lower(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }

    /// Solves `Lᵀ x = y`.
    pub fn solve_upper(&self, y: &[T]) -> Vec<T> {
        let n = self.dim();
        let mut x = y.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * x[k];
            }
            x[i] = s / self.l[(i, i)];
        }
        x
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        self.solve_upper(&self.solve_lower(b))
    }

    /// `L z`
    pub fn mul_l(&self, z: &[T]) -> Vec<T> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..=i).fold(T::zero(), |acc, k| acc + self.l[(i, k)] * z[k]))
            .collect()
    }

    pub fn log_det(&self) -> T {
        let two = T::cst(2.0);
        (0..self.dim()).map(|i| two * self.l[(i, i)].ln()).sum()
    }

    pub fn reconstruct(&self) -> Matrix<T> {
        self.l.mul(&self.l.transpose())
    }
}

/// Numerical rank via Householder QR with column pivoting. Diagonal entries of
/// `R` below `rel_tol · ‖A‖_F` count as zero.
pub fn numerical_rank<T: Real>(a: &Matrix<T>, rel_tol: T) -> usize {
    let (m, n) = (a.nrows(), a.ncols());
    let tol = rel_tol * a.frobenius_norm();
    let mut r = a.clone();
    let mut rank = 0;
    for k in 0..m.min(n) {
        // pick the remaining column with the largest trailing norm
        let (p, best) = (k..n)
            .map(|j| {
                let s: T = (k..m).map(|i| r[(i, j)] * r[(i, j)]).sum();
                (j, s.sqrt())
            })
            .fold((k, -T::one()), |acc, c| if c.1 > acc.1 { c } else { acc });
        if best <= tol {
            break;
        }
        if p != k {
            for i in 0..m {
                let tmp = r[(i, k)];
                r[(i, k)] = r[(i, p)];
                r[(i, p)] = tmp;
            }
        }
        let alpha = if r[(k, k)] > T::zero() { -best } else { best };
        let mut v: Vec<T> = (k..m).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2 = dot(&v, &v);
        if vnorm2 > T::zero() {
            let two = T::cst(2.0);
            for j in k..n {
                let s: T = (k..m).map(|i| v[i - k] * r[(i, j)]).sum();
                let f = two * s / vnorm2;
                for i in k..m {
                    r[(i, j)] -= f * v[i - k];
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Sign and log-absolute-determinant of a square matrix via LU with partial
/// pivoting. A singular matrix yields sign `0` and `-inf`.
pub fn log_abs_det<T: Real>(a: &Matrix<T>) -> (T, T) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "determinant of non-square matrix");
    let mut lu = a.clone();
    let mut sign = T::one();
    let mut log_abs = T::zero();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| {
                lu[(i, k)]
                    .abs()
                    .partial_cmp(&lu[(j, k)].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(k);
        let pivot = lu[(p, k)];
        if pivot == T::zero() || !pivot.is_finite() {
            return (T::zero(), T::neg_infinity());
        }
        if p != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = tmp;
            }
            sign = -sign;
        }
        if pivot < T::zero() {
            sign = -sign;
        }
        log_abs += pivot.abs().ln();
        for i in (k + 1)..n {
            let f = lu[(i, k)] / pivot;
            if f == T::zero() {
                continue;
            }
            for j in k..n {
                let u = lu[(k, j)];
                lu[(i, j)] -= f * u;
            }
        }
    }
    (sign, log_abs)
}

pub fn determinant<T: Real>(a: &Matrix<T>) -> T {
    let (sign, log_abs) = log_abs_det(a);
    sign * log_abs.exp()
}

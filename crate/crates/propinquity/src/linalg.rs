//! Dense complex matrices with a cyclic Jacobi Hermitian eigensolver.

use std::ops::{Index, IndexMut};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Convergence threshold of the Jacobi sweeps, relative to the Frobenius norm.
pub const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CMat<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> CMat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat { rows, cols, data: vec![Complex::new(T::zero(), T::zero()); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMat { rows, cols, data }
    }

    /// Builds a matrix from nested rows; all rows must share one length.
    pub fn from_rows(rows: &[Vec<Complex<T>>]) -> Option<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return None;
        }
        Some(CMat { rows: r, cols: c, data: rows.iter().flatten().copied().collect() })
    }

    pub fn from_real_diag(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = Complex::new(x, T::zero());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<Complex<T>>> {
        (0..self.rows).map(|i| self.data[i * self.cols..(i + 1) * self.cols].to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<Complex<T>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn from_columns(rows: usize, cols: &[Vec<Complex<T>>]) -> Self {
        Self::from_fn(rows, cols.len(), |i, j| cols[j][i])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let row = &self.data[i * self.cols..(i + 1) * self.cols];
                row.iter().zip(v).fold(Complex::new(T::zero(), T::zero()), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        CMat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&a| a * s).collect() }
    }

    pub fn scale_re(&self, s: T) -> Self {
        CMat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&a| a * s).collect() }
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: T, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b * s).collect(),
        }
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.rows.min(self.cols)).fold(Complex::new(T::zero(), T::zero()), |acc, i| acc + self[(i, i)])
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    /// Largest entrywise modulus of `self - self*`.
    pub fn hermitian_defect(&self) -> T {
        if !self.is_square() {
            return T::infinity();
        }
        let mut m = T::zero();
        for i in 0..self.rows {
            for j in 0..self.cols {
                m = m.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        m
    }

    pub fn hermitian_part(&self) -> Self {
        let half = T::lit(0.5);
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + self[(j, i)].conj()) * half)
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self::from_fn(self.rows * other.rows, self.cols * other.cols, |i, j| {
            self[(i / other.rows, j / other.cols)] * other[(i % other.rows, j % other.cols)]
        })
    }

    /// Block diagonal matrix with the given square blocks.
    pub fn block_diag(blocks: &[&Self]) -> Self {
        let n: usize = blocks.iter().map(|b| b.rows).sum();
        let mut out = Self::zeros(n, n);
        let mut off = 0;
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..b.cols {
                    out[(off + i, off + j)] = b[(i, j)];
                }
            }
            off += b.rows;
        }
        out
    }

    /// Square sub-block starting at `(off, off)`.
    pub fn diag_block(&self, off: usize, size: usize) -> Self {
        Self::from_fn(size, size, |i, j| self[(off + i, off + j)])
    }

    /// Hermitian dilation `[[0, X], [X*, 0]]`, whose spectrum is `±σ(X)`.
    pub fn dilation(&self) -> Self {
        let (r, c) = (self.rows, self.cols);
        let mut out = Self::zeros(r + c, r + c);
        for i in 0..r {
            for j in 0..c {
                out[(i, r + j)] = self[(i, j)];
                out[(r + j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    /// Eigen-decomposition of the Hermitian part of a square matrix.
    ///
    /// Returns eigenvalues in ascending order and the unitary whose columns
    /// are the matching eigenvectors.
    pub fn eigh(&self) -> (Vec<T>, Self) {
        assert!(self.is_square(), "eigh needs a square matrix");
        let n = self.rows;
        let mut a = self.hermitian_part();
        let mut v = Self::identity(n);
        let tol = T::tol(JACOBI_TOL);
        let total = a.frobenius();
        if total > T::zero() {
            for _ in 0..JACOBI_MAX_SWEEPS {
                let mut off = T::zero();
                for p in 0..n {
                    for q in 0..n {
                        if p != q {
                            off += a[(p, q)].norm_sqr();
                        }
                    }
                }
                if off.sqrt() <= tol * total {
                    break;
                }
                for p in 0..n {
                    for q in (p + 1)..n {
                        jacobi_rotate(&mut a, &mut v, p, q);
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        let evals: Vec<T> = (0..n).map(|i| a[(i, i)].re).collect();
        order.sort_by(|&i, &j| evals[i].partial_cmp(&evals[j]).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(&j)));
        let sorted: Vec<T> = order.iter().map(|&i| evals[i]).collect();
        let vecs = Self::from_fn(n, n, |i, j| v[(i, order[j])]);
        (sorted, vecs)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigvalsh(&self) -> Vec<T> {
        self.eigh().0
    }

    /// Largest singular value.
    pub fn op_norm(&self) -> T {
        if self.data.is_empty() {
            return T::zero();
        }
        if self.is_square() && self.hermitian_defect() == T::zero() {
            let ev = self.eigvalsh();
            return ev.iter().fold(T::zero(), |m, x| m.max(x.abs()));
        }
        let g = if self.rows >= self.cols { self.adjoint().matmul(self) } else { self.matmul(&self.adjoint()) };
        let ev = g.eigvalsh();
        ev.last().copied().unwrap_or_else(T::zero).max(T::zero()).sqrt()
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<T> {
        let g = if self.rows >= self.cols { self.adjoint().matmul(self) } else { self.matmul(&self.adjoint()) };
        let mut ev: Vec<T> = g.eigvalsh().into_iter().map(|x| x.max(T::zero()).sqrt()).collect();
        ev.reverse();
        ev
    }
}

fn jacobi_rotate<T: Scalar>(a: &mut CMat<T>, v: &mut CMat<T>, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == T::zero() {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    if mag <= T::epsilon() * T::lit(1e-3) * (app.abs() + aqq.abs()) {
        a[(p, q)] = Complex::new(T::zero(), T::zero());
        a[(q, p)] = Complex::new(T::zero(), T::zero());
        return;
    }
    let phase = apq / mag;
    let theta = (aqq - app) / (T::lit(2.0) * mag);
    let t = if theta == T::zero() {
        T::one()
    } else {
        theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt())
    };
    let c = T::one() / (t * t + T::one()).sqrt();
    let s = t * c;
    let cphase = phase.conj();
    let g_pp = Complex::new(c, T::zero());
    let g_pq = Complex::new(s, T::zero());
    let g_qp = cphase * (-s);
    let g_qq = cphase * c;
    let n = a.rows;
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * g_pp + akq * g_qp;
        a[(k, q)] = akp * g_pq + akq * g_qq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
        a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
    }
    a[(p, q)] = Complex::new(T::zero(), T::zero());
    a[(q, p)] = Complex::new(T::zero(), T::zero());
    a[(p, p)] = Complex::new(a[(p, p)].re, T::zero());
    a[(q, q)] = Complex::new(a[(q, q)].re, T::zero());
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * g_pp + vkq * g_qp;
        v[(k, q)] = vkp * g_pq + vkq * g_qq;
    }
}

impl<T> Index<(usize, usize)> for CMat<T> {
    type Output = Complex<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

/// Inner product `<u, v>`, conjugate-linear in `u`.
pub fn inner<T: Scalar>(u: &[Complex<T>], v: &[Complex<T>]) -> Complex<T> {
    u.iter().zip(v).fold(Complex::new(T::zero(), T::zero()), |acc, (&a, &b)| acc + a.conj() * b)
}

pub fn vec_norm<T: Scalar>(v: &[Complex<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}

/// Rank of a real matrix given by rows: pivoted Gram–Schmidt, counting
/// residual norms above `tol · max(1, largest row norm)`.
pub fn real_rank<T: Scalar>(rows: &[Vec<T>], cols: usize, tol: T) -> usize {
    if rows.is_empty() || cols == 0 {
        return 0;
    }
    let norm = |v: &[T]| v.iter().map(|x| *x * *x).sum::<T>().sqrt();
    let mut res: Vec<Vec<T>> = rows.iter().map(|r| r[..cols].to_vec()).collect();
    let scale = res.iter().fold(T::zero(), |m, r| m.max(norm(r)));
    let thr = tol * scale.max(T::one());
    let mut rank = 0;
    while rank < cols {
        let (best, bn) = res.iter().enumerate().map(|(i, r)| (i, norm(r))).fold((0, T::zero()), |a, b| if b.1 > a.1 { b } else { a });
        if bn <= thr {
            break;
        }
        let q: Vec<T> = res[best].iter().map(|&x| x / bn).collect();
        for r in res.iter_mut() {
            for _ in 0..2 {
                let d: T = r.iter().zip(&q).map(|(a, b)| *a * *b).sum();
                for (x, &qj) in r.iter_mut().zip(&q) {
                    *x -= d * qj;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Solves the square real system `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve_real<T: Scalar>(a: &[Vec<T>], b: &[T]) -> Option<Vec<T>> {
    let n = b.len();
    let mut m: Vec<Vec<T>> = a.iter().zip(b).map(|(r, &bi)| {
        let mut row = r.clone();
        row.push(bi);
        row
    }).collect();
    let scale = m.iter().flat_map(|r| r.iter()).fold(T::zero(), |s, x| s.max(x.abs()));
    let tiny = T::epsilon() * T::lit(1e3) * scale.max(T::one());
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())?;
        if m[piv][col].abs() <= tiny {
            return None;
        }
        m.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = m[r][col] / m[col][col];
                if f != T::zero() {
                    for c in col..=n {
                        let v = m[col][c];
                        m[r][c] -= f * v;
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

/// Orthonormal basis of the orthogonal complement of `w` in `R^n`.
pub fn complement_basis<T: Scalar>(w: &[T]) -> Vec<Vec<T>> {
    let n = w.len();
    let wn = w.iter().map(|x| *x * *x).sum::<T>().sqrt();
    let mut basis: Vec<Vec<T>> = Vec::new();
    if wn == T::zero() {
        return (0..n).map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect()).collect();
    }
    let u: Vec<T> = w.iter().map(|&x| x / wn).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| u[i].abs().partial_cmp(&u[j].abs()).unwrap().then(i.cmp(&j)));
    for &i in &order {
        if basis.len() + 1 == n {
            break;
        }
        let mut v: Vec<T> = (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect();
        for _ in 0..2 {
            let d: T = v.iter().zip(&u).map(|(a, b)| *a * *b).sum();
            for j in 0..n {
                v[j] -= d * u[j];
            }
            for b in &basis {
                let d: T = v.iter().zip(b).map(|(a, b)| *a * *b).sum();
                for j in 0..n {
                    v[j] -= d * b[j];
                }
            }
        }
        let vn = v.iter().map(|x| *x * *x).sum::<T>().sqrt();
        if vn > T::lit(1e-8) {
            basis.push(v.into_iter().map(|x| x / vn).collect());
        }
    }
    basis
}

//! Vertex enumeration of bounded polytopes by the double description method.

use thiserror::Error;

use crate::linalg::real_rank;
use crate::scalar::Scalar;

/// Default largest dimension accepted by [`enum_vertices`].
pub const VERTEX_DIM_LIMIT: usize = 7;

/// H-representation `{x : a x ≤ b}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polytope<T> {
    pub dim: usize,
    pub a: Vec<Vec<T>>,
    pub b: Vec<T>,
}

impl<T: Scalar> Polytope<T> {
    pub fn new(dim: usize) -> Self {
        Polytope { dim, a: Vec::new(), b: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<T>, rhs: T) {
        assert_eq!(row.len(), self.dim);
        self.a.push(row);
        self.b.push(rhs);
    }

    /// Adds `|row·x| ≤ rhs` as two inequalities.
    pub fn push_abs(&mut self, row: Vec<T>, rhs: T) {
        let neg = row.iter().map(|&x| -x).collect();
        self.push(row, rhs);
        self.push(neg, rhs);
    }

    pub fn contains(&self, x: &[T], tol: T) -> bool {
        self.a.iter().zip(&self.b).all(|(r, &b)| r.iter().zip(x).map(|(&p, &q)| p * q).sum::<T>() <= b + tol)
    }

    /// Vertices by double description, lexicographically sorted.
    pub fn vertices(&self, limit: usize) -> Result<Vec<Vec<T>>, VertexError> {
        enum_vertices(self, limit)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VertexError {
    #[error("polytope is unbounded")]
    Unbounded,
    #[error("polytope is empty")]
    Empty,
    #[error("dimension {dim} exceeds the enumeration limit {limit}")]
    LimitExceeded { dim: usize, limit: usize },
}

struct Ray<T> {
    v: Vec<T>,
    zeros: Vec<u64>,
}

fn bit_set(bits: &mut [u64], i: usize) {
    bits[i / 64] |= 1 << (i % 64);
}

fn popcount(bits: &[u64]) -> usize {
    bits.iter().map(|w| w.count_ones() as usize).sum()
}

fn subset(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x & !y == 0)
}

fn normalize<T: Scalar>(v: &mut [T]) {
    let m = v.iter().fold(T::zero(), |s, x| s.max(x.abs()));
    if m > T::zero() {
        v.iter_mut().for_each(|x| *x /= m);
    }
}

/// Enumerates the vertices of a bounded polytope.
///
/// The polytope is homogenized into the cone `{(x, t) : b t − a x ≥ 0, t ≥ 0}`
/// whose extreme rays with `t > 0` are the vertices.
pub fn enum_vertices<T: Scalar>(p: &Polytope<T>, limit: usize) -> Result<Vec<Vec<T>>, VertexError> {
    let d = p.dim;
    if d > limit {
        return Err(VertexError::LimitExceeded { dim: d, limit });
    }
    let tol = T::tol(1e-10);
    if d == 0 {
        return if p.b.iter().all(|&b| b >= -tol) { Ok(vec![vec![]]) } else { Err(VertexError::Empty) };
    }
    let mut cons: Vec<Vec<T>> = p
        .a
        .iter()
        .zip(&p.b)
        .map(|(r, &b)| {
            let mut c: Vec<T> = r.iter().map(|&x| -x).collect();
            c.push(b);
            c
        })
        .collect();
    let mut t_row = vec![T::zero(); d + 1];
    t_row[d] = T::one();
    cons.push(t_row);
    let nc = cons.len();
    let words = nc.div_ceil(64);
    let dim = d + 1;
    if real_rank(&cons, dim, T::tol(1e-9)) < dim {
        return Err(VertexError::Unbounded);
    }
    let mut order: Vec<usize> = Vec::new();
    let mut basis_rows: Vec<Vec<T>> = Vec::new();
    let mut idx_order: Vec<usize> = vec![nc - 1];
    idx_order.extend(0..nc - 1);
    for &i in &idx_order {
        let mut trial = basis_rows.clone();
        trial.push(cons[i].clone());
        if real_rank(&trial, dim, T::tol(1e-9)) == trial.len() {
            basis_rows = trial;
            order.push(i);
            if order.len() == dim {
                break;
            }
        }
    }
    let inv = invert(&basis_rows).ok_or(VertexError::Unbounded)?;
    let mut rays: Vec<Ray<T>> = Vec::new();
    for k in 0..dim {
        let mut v: Vec<T> = (0..dim).map(|r| inv[r][k]).collect();
        normalize(&mut v);
        let mut zeros = vec![0u64; words];
        for (kk, &ci) in order.iter().enumerate() {
            if kk != k {
                bit_set(&mut zeros, ci);
            }
        }
        rays.push(Ray { v, zeros });
    }
    let in_initial: Vec<bool> = (0..nc).map(|i| order.contains(&i)).collect();
    for i in 0..nc {
        if in_initial[i] {
            continue;
        }
        let c = &cons[i];
        let cn = c.iter().fold(T::zero(), |s, x| s.max(x.abs())).max(T::one());
        let vals: Vec<T> = rays.iter().map(|r| dot(c, &r.v)).collect();
        let mut plus = Vec::new();
        let mut minus = Vec::new();
        let mut next: Vec<Ray<T>> = Vec::new();
        for (k, &val) in vals.iter().enumerate() {
            if val > tol * cn {
                plus.push(k);
            } else if val < -tol * cn {
                minus.push(k);
            }
        }
        for (k, &val) in vals.iter().enumerate() {
            if val >= -tol * cn {
                let mut r = Ray { v: rays[k].v.clone(), zeros: rays[k].zeros.clone() };
                if val <= tol * cn {
                    bit_set(&mut r.zeros, i);
                }
                next.push(r);
            }
        }
        for &pk in &plus {
            for &mk in &minus {
                let common: Vec<u64> = rays[pk].zeros.iter().zip(&rays[mk].zeros).map(|(a, b)| a & b).collect();
                if popcount(&common) + 2 < dim {
                    continue;
                }
                let adjacent = rays
                    .iter()
                    .enumerate()
                    .all(|(k, r)| k == pk || k == mk || !subset(&common, &r.zeros));
                if !adjacent {
                    continue;
                }
                let vp = vals[pk];
                let vm = vals[mk];
                let mut v: Vec<T> = rays[mk].v.iter().zip(&rays[pk].v).map(|(&a, &b)| vp * a - vm * b).collect();
                normalize(&mut v);
                let mut zeros = common;
                bit_set(&mut zeros, i);
                next.push(Ray { v, zeros });
            }
        }
        rays = next;
        if rays.is_empty() {
            return Err(VertexError::Empty);
        }
    }
    let mut verts: Vec<Vec<T>> = Vec::new();
    for r in &rays {
        let t = r.v[d];
        if t <= tol {
            return Err(VertexError::Unbounded);
        }
        verts.push(r.v[..d].iter().map(|&x| x / t).collect());
    }
    verts.sort_by(|a, b| lex_cmp(a, b));
    verts.dedup_by(|a, b| a.iter().zip(b.iter()).all(|(x, y)| (*x - *y).abs() <= T::tol(1e-9)));
    Ok(verts)
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Lexicographic comparison of real vectors.
pub fn lex_cmp<T: Scalar>(a: &[T], b: &[T]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    a.len().cmp(&b.len())
}

fn invert<T: Scalar>(m: &[Vec<T>]) -> Option<Vec<Vec<T>>> {
    let n = m.len();
    let mut a: Vec<Vec<T>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { T::one() } else { T::zero() }));
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col].abs() <= T::epsilon() {
            return None;
        }
        a.swap(col, piv);
        let p = a[col][col];
        a[col].iter_mut().for_each(|x| *x /= p);
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f != T::zero() {
                    let prow = a[col].clone();
                    for (x, &pv) in a[r].iter_mut().zip(&prow) {
                        *x -= f * pv;
                    }
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn facet_intersection_oracle(p: &Polytope<f64>) -> Vec<Vec<f64>> {
        let d = p.dim;
        let m = p.a.len();
        let mut out: Vec<Vec<f64>> = Vec::new();
        let mut idx: Vec<usize> = (0..d).collect();
        loop {
            let rows: Vec<Vec<f64>> = idx.iter().map(|&i| p.a[i].clone()).collect();
            let rhs: Vec<f64> = idx.iter().map(|&i| p.b[i]).collect();
            if let Some(x) = crate::linalg::solve_real(&rows, &rhs) {
                if p.contains(&x, 1e-9) && !out.iter().any(|v| v.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-9)) {
                    out.push(x);
                }
            }
            let mut k = d;
            loop {
                if k == 0 {
                    out.sort_by(|a, b| lex_cmp(a, b));
                    return out;
                }
                k -= 1;
                if idx[k] < m - d + k {
                    idx[k] += 1;
                    for j in k + 1..d {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    #[test]
    fn unit_square() {
        let mut p = Polytope::new(2);
        p.push(vec![1.0, 0.0], 1.0);
        p.push(vec![-1.0, 0.0], 0.0);
        p.push(vec![0.0, 1.0], 1.0);
        p.push(vec![0.0, -1.0], 0.0);
        let v = p.vertices(VERTEX_DIM_LIMIT).unwrap();
        assert_eq!(v, vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]);
    }

    #[test]
    fn simplex_vertices_are_basis_vectors() {
        let mut p = Polytope::new(3);
        for i in 0..3 {
            let mut r = vec![0.0; 3];
            r[i] = -1.0;
            p.push(r, 0.0);
        }
        p.push(vec![1.0, 1.0, 1.0], 1.0);
        p.push(vec![-1.0, -1.0, -1.0], -1.0);
        let v = p.vertices(VERTEX_DIM_LIMIT).unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(v, facet_intersection_oracle(&p));
    }

    #[test]
    fn hexagon_slice_matches_oracle() {
        // {f2, f3 : |f2| ≤ 1, |f3| ≤ 1, |f2 − f3| ≤ 1}
        let mut p = Polytope::new(2);
        p.push_abs(vec![1.0, 0.0], 1.0);
        p.push_abs(vec![0.0, 1.0], 1.0);
        p.push_abs(vec![1.0, -1.0], 1.0);
        let v = p.vertices(VERTEX_DIM_LIMIT).unwrap();
        assert_eq!(v.len(), 6);
        let o = facet_intersection_oracle(&p);
        assert_eq!(v.len(), o.len());
        for (a, b) in v.iter().zip(&o) {
            assert!(a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-9));
        }
    }

    #[test]
    fn degenerate_cube_corners() {
        // Cube with a redundant facet through a vertex.
        let mut p = Polytope::new(3);
        for i in 0..3 {
            let mut r = vec![0.0; 3];
            r[i] = 1.0;
            p.push_abs(r, 1.0);
        }
        p.push(vec![1.0, 1.0, 1.0], 3.0);
        let v = p.vertices(VERTEX_DIM_LIMIT).unwrap();
        assert_eq!(v.len(), 8);
        assert_eq!(v, facet_intersection_oracle(&p));
    }

    #[test]
    fn unbounded_and_limit_errors() {
        let mut p = Polytope::new(2);
        p.push(vec![1.0, 0.0], 1.0);
        assert_eq!(p.vertices(VERTEX_DIM_LIMIT), Err(VertexError::Unbounded));
        let q = Polytope::<f64>::new(9);
        assert!(matches!(q.vertices(VERTEX_DIM_LIMIT), Err(VertexError::LimitExceeded { .. })));
    }

    #[test]
    fn zero_dimensional_point() {
        let p = Polytope::<f64>::new(0);
        assert_eq!(p.vertices(VERTEX_DIM_LIMIT).unwrap(), vec![Vec::<f64>::new()]);
    }
}

//! Minimisation of the operator norm of an affine matrix family.

use num_complex::Complex;
use thiserror::Error;

use super::cutting_plane::{solve_spectral, AffineHermitian, CuttingPlaneError, CuttingPlaneOptions, SpectralProgram};
use super::lp::{solve_lp, LinearProgram, LpError, LpStatus, Sense};
use super::vertices::Polytope;
use crate::linalg::CMat;
use crate::scalar::Scalar;

/// `t ↦ M₀ + Σ tᵢ Mᵢ`, each matrix given as a list of diagonal blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineFamily<T> {
    pub constant: Vec<CMat<T>>,
    pub coeffs: Vec<Vec<CMat<T>>>,
}

impl<T: Scalar> AffineFamily<T> {
    pub fn new(constant: Vec<CMat<T>>) -> Self {
        AffineFamily { constant, coeffs: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, t: &[T]) -> Vec<CMat<T>> {
        let mut out = self.constant.clone();
        for (m, &ti) in self.coeffs.iter().zip(t) {
            if ti != T::zero() {
                for (o, b) in out.iter_mut().zip(m) {
                    *o = o.axpy(ti, b);
                }
            }
        }
        out
    }

    pub fn norm_at(&self, t: &[T]) -> T {
        self.eval(t).iter().fold(T::zero(), |m, b| m.max(b.op_norm()))
    }

    pub fn is_commutative(&self) -> bool {
        self.constant.iter().all(|b| b.rows() == 1 && b.cols() == 1)
    }

    /// For commutative families whose entries keep a fixed phase per block,
    /// the real rows `(coefficients, constant)` with `|entry| = |row·t + c|`.
    pub fn real_rows(&self) -> Option<Vec<(Vec<T>, T)>> {
        if !self.is_commutative() {
            return None;
        }
        let mut rows = Vec::with_capacity(self.constant.len());
        for z in 0..self.constant.len() {
            let mut vals: Vec<Complex<T>> = vec![self.constant[z][(0, 0)]];
            vals.extend(self.coeffs.iter().map(|m| m[z][(0, 0)]));
            let scale = vals.iter().fold(T::zero(), |m, v| m.max(v.norm()));
            if scale == T::zero() {
                rows.push((vec![T::zero(); self.dim()], T::zero()));
                continue;
            }
            let lead = vals.iter().copied().fold(vals[0], |a, v| if v.norm() > a.norm() { v } else { a });
            let phase = lead.conj() / lead.norm();
            let tol = T::tol(1e-12) * scale;
            let mut real = Vec::with_capacity(vals.len());
            for v in &vals {
                let r = *v * phase;
                if r.im.abs() > tol {
                    return None;
                }
                real.push(r.re);
            }
            rows.push((real[1..].to_vec(), real[0]));
        }
        Some(rows)
    }

    /// The Hermitian map `(t, s) ↦ dil(M(t)) − s·I` for one block.
    fn dilation_lmi(&self, block: usize) -> AffineHermitian<T> {
        let c = self.constant[block].dilation();
        let n = c.rows();
        let mut coeffs: Vec<CMat<T>> = self.coeffs.iter().map(|m| m[block].dilation()).collect();
        coeffs.push(CMat::identity(n).scale_re(-T::one()));
        AffineHermitian { constant: c, coeffs }
    }
}

#[derive(Clone, Debug)]
pub struct OpNormMin<T> {
    pub value: T,
    pub lower: T,
    pub upper: T,
    pub argmin: Vec<T>,
    pub iterations: usize,
    pub exact: bool,
    pub converged: bool,
}

#[derive(Debug, Error)]
pub enum OpNormError {
    #[error("feasible region is empty")]
    Infeasible,
    #[error("coefficient shapes are inconsistent")]
    Shape,
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    CuttingPlane(#[from] CuttingPlaneError),
}

fn check_shapes<T: Scalar>(f: &AffineFamily<T>) -> Result<(), OpNormError> {
    for m in &f.coeffs {
        if m.len() != f.constant.len() || m.iter().zip(&f.constant).any(|(a, b)| a.rows() != b.rows() || a.cols() != b.cols()) {
            return Err(OpNormError::Shape);
        }
    }
    Ok(())
}

/// Exact LP path: `min s` subject to `|rᵢ·t + cᵢ| ≤ s` and the linear rows.
pub fn min_opnorm_lp<T: Scalar>(
    rows: &[(Vec<T>, T)],
    dim: usize,
    le: &[(Vec<T>, T)],
    eq: &[(Vec<T>, T)],
) -> Result<OpNormMin<T>, OpNormError> {
    let mut obj = vec![T::zero(); dim + 1];
    obj[dim] = T::one();
    let mut lp = LinearProgram::free(obj, false);
    lp.set_bounds(dim, Some(T::zero()), None);
    for (r, c) in rows {
        let mut pos = r.clone();
        pos.push(-T::one());
        lp.constrain(pos, Sense::Le, -*c);
        let mut neg: Vec<T> = r.iter().map(|&x| -x).collect();
        neg.push(-T::one());
        lp.constrain(neg, Sense::Le, *c);
    }
    for (r, b) in le {
        let mut row = r.clone();
        row.push(T::zero());
        lp.constrain(row, Sense::Le, *b);
    }
    for (r, b) in eq {
        let mut row = r.clone();
        row.push(T::zero());
        lp.constrain(row, Sense::Eq, *b);
    }
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(OpNormError::Infeasible);
    }
    let t = sol.x[..dim].to_vec();
    let value = rows.iter().fold(T::zero(), |m, (r, c)| m.max((r.iter().zip(&t).map(|(&a, &b)| a * b).sum::<T>() + *c).abs()));
    Ok(OpNormMin {
        value,
        lower: sol.objective.min(value),
        upper: sol.objective.max(value),
        argmin: t,
        iterations: sol.pivots,
        exact: true,
        converged: true,
    })
}

/// Minimises `max_blocks ‖M(t)‖` over a polytope.
///
/// Commutative families with phase-aligned entries are solved exactly as an
/// LP; everything else goes through the cutting-plane solver.
pub fn min_opnorm_affine<T: Scalar>(
    family: &AffineFamily<T>,
    feasible: &Polytope<T>,
    opts: &CuttingPlaneOptions<T>,
) -> Result<OpNormMin<T>, OpNormError> {
    check_shapes(family)?;
    let le: Vec<(Vec<T>, T)> = feasible.a.iter().cloned().zip(feasible.b.iter().copied()).collect();
    if let Some(rows) = family.real_rows() {
        return min_opnorm_lp(&rows, family.dim(), &le, &[]);
    }
    min_opnorm_constrained(family, &le, &[], &[], opts, &|t: &[T]| Some(t.to_vec()))
}

/// Cutting-plane minimisation of `max_blocks ‖M(t)‖` under linear rows and
/// extra matrix inequalities on `t`.
///
/// `repair` maps a relaxed point to a feasible one; the norm at the repaired
/// point is the reported upper bound.
pub fn min_opnorm_constrained<T: Scalar>(
    family: &AffineFamily<T>,
    le: &[(Vec<T>, T)],
    eq: &[(Vec<T>, T)],
    lmis: &[AffineHermitian<T>],
    opts: &CuttingPlaneOptions<T>,
    repair: &dyn Fn(&[T]) -> Option<Vec<T>>,
) -> Result<OpNormMin<T>, OpNormError> {
    check_shapes(family)?;
    let n = family.dim();
    let mut obj = vec![T::zero(); n + 1];
    obj[n] = T::one();
    let mut p = SpectralProgram::new(obj);
    let widen = |r: &Vec<T>| {
        let mut w = r.clone();
        w.push(T::zero());
        w
    };
    p.le = le.iter().map(|(r, b)| (widen(r), *b)).collect();
    let mut nonneg = vec![T::zero(); n + 1];
    nonneg[n] = -T::one();
    p.le.push((nonneg, T::zero()));
    p.eq = eq.iter().map(|(r, b)| (widen(r), *b)).collect();
    for z in 0..family.constant.len() {
        p.lmis.push(family.dilation_lmi(z));
    }
    for l in lmis {
        p.lmis.push(l.clone().widen(n + 1));
    }
    let rep = |x: &[T]| -> Option<(Vec<T>, T)> {
        let t = repair(&x[..n])?;
        let v = family.norm_at(&t);
        let mut out = t;
        out.push(v);
        Some((out, v))
    };
    let r = solve_spectral(&p, opts, &rep)?;
    if !r.upper.is_finite() {
        return Err(OpNormError::Infeasible);
    }
    let argmin = r.x[..n].to_vec();
    Ok(OpNormMin {
        value: r.upper,
        lower: r.lower.max(T::zero()).min(r.upper),
        upper: r.upper,
        argmin,
        iterations: r.iterations,
        exact: false,
        converged: r.converged,
    })
}

//! Outer-approximation (cutting plane) solver for linear objectives under
//! linear matrix inequalities `λ_max(H(x)) ≤ 0`.
//!
//! Every cut `v* H(x) v ≤ 0` is valid for the true feasible set, so the
//! master LP value is a certified lower bound; repaired feasible iterates
//! give the matching upper bound.

use num_complex::Complex;

use super::lp::{solve_lp, LinearProgram, LpError, LpStatus, Sense};
use crate::linalg::CMat;
use crate::scalar::Scalar;

/// Affine Hermitian map `H(x) = H₀ + Σ xᵢ Hᵢ`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineHermitian<T> {
    pub constant: CMat<T>,
    pub coeffs: Vec<CMat<T>>,
}

impl<T: Scalar> AffineHermitian<T> {
    pub fn eval(&self, x: &[T]) -> CMat<T> {
        let mut h = self.constant.clone();
        for (c, &xi) in self.coeffs.iter().zip(x) {
            if xi != T::zero() {
                h = h.axpy(xi, c);
            }
        }
        h
    }

    pub fn size(&self) -> usize {
        self.constant.rows()
    }

    /// Pads the coefficient list with zero matrices up to `dim` variables.
    pub fn widen(mut self, dim: usize) -> Self {
        let n = self.size();
        while self.coeffs.len() < dim {
            self.coeffs.push(CMat::zeros(n, n));
        }
        self
    }

    fn cut(&self, v: &[Complex<T>]) -> (Vec<T>, T) {
        let quad = |m: &CMat<T>| -> T {
            let mv = m.matvec(v);
            v.iter().zip(&mv).map(|(a, b)| (a.conj() * b).re).sum()
        };
        (self.coeffs.iter().map(quad).collect(), -quad(&self.constant))
    }
}

/// `minimize objective·x` over linear rows and matrix inequalities.
#[derive(Clone, Debug)]
pub struct SpectralProgram<T> {
    pub dim: usize,
    pub objective: Vec<T>,
    pub le: Vec<(Vec<T>, T)>,
    pub eq: Vec<(Vec<T>, T)>,
    pub lmis: Vec<AffineHermitian<T>>,
    pub box_radius: Option<T>,
}

impl<T: Scalar> SpectralProgram<T> {
    pub fn new(objective: Vec<T>) -> Self {
        SpectralProgram { dim: objective.len(), objective, le: Vec::new(), eq: Vec::new(), lmis: Vec::new(), box_radius: None }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CuttingPlaneOptions<T> {
    pub gap_tol: T,
    pub max_iter: usize,
    pub cut_tol: T,
}

impl<T: Scalar> Default for CuttingPlaneOptions<T> {
    fn default() -> Self {
        CuttingPlaneOptions { gap_tol: T::lit(1e-4), max_iter: 10_000, cut_tol: T::tol(1e-11) }
    }
}

#[derive(Clone, Debug)]
pub struct CuttingPlaneResult<T> {
    pub lower: T,
    pub upper: T,
    pub x: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CuttingPlaneError {
    #[error("relaxation is unbounded; a box radius is required")]
    Unbounded,
    #[error("problem is infeasible")]
    Infeasible,
    #[error(transparent)]
    Lp(#[from] LpError),
}

fn initial_vectors<T: Scalar>(n: usize) -> Vec<Vec<Complex<T>>> {
    let zero = Complex::new(T::zero(), T::zero());
    let h = T::lit(std::f64::consts::FRAC_1_SQRT_2);
    let mut out = Vec::new();
    for i in 0..n {
        let mut v = vec![zero; n];
        v[i] = Complex::new(T::one(), T::zero());
        out.push(v);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            for (re, im) in [(h, T::zero()), (-h, T::zero()), (T::zero(), h), (T::zero(), -h)] {
                let mut v = vec![zero; n];
                v[i] = Complex::new(h, T::zero());
                v[j] = Complex::new(re, im);
                out.push(v);
            }
        }
    }
    out
}

/// Solves the master LP `min c·x, G x ≤ h, E x = e` through its dual, whose
/// row count is the (small) number of variables.
fn solve_master<T: Scalar>(
    c: &[T],
    g: &[Vec<T>],
    h: &[T],
    eq: &[(Vec<T>, T)],
) -> Result<Option<(Vec<T>, T)>, CuttingPlaneError> {
    let dim = c.len();
    let ny = g.len();
    let nm = eq.len();
    let mut obj = h.to_vec();
    obj.extend(eq.iter().map(|(_, e)| *e));
    let mut lp = LinearProgram::new(obj, false);
    for j in ny..ny + nm {
        lp.lower[j] = None;
    }
    for i in 0..dim {
        let mut row: Vec<T> = g.iter().map(|r| r[i]).collect();
        row.extend(eq.iter().map(|(r, _)| r[i]));
        lp.constrain(row, Sense::Eq, -c[i]);
    }
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(Some((sol.duals.clone(), -sol.objective))),
        LpStatus::Infeasible => Err(CuttingPlaneError::Unbounded),
        LpStatus::Unbounded => Ok(None),
    }
}

/// Kelley cutting-plane method with caller-supplied feasibility repair.
///
/// `repair` maps a relaxed optimum to a feasible point and its objective
/// value, or `None` when it cannot.
pub fn solve_spectral<T: Scalar>(
    p: &SpectralProgram<T>,
    opts: &CuttingPlaneOptions<T>,
    repair: &dyn Fn(&[T]) -> Option<(Vec<T>, T)>,
) -> Result<CuttingPlaneResult<T>, CuttingPlaneError> {
    let dim = p.dim;
    let mut g: Vec<Vec<T>> = Vec::new();
    let mut h: Vec<T> = Vec::new();
    for (r, b) in &p.le {
        g.push(r.clone());
        h.push(*b);
    }
    if let Some(rad) = p.box_radius {
        for i in 0..dim {
            let mut r = vec![T::zero(); dim];
            r[i] = T::one();
            g.push(r.clone());
            h.push(rad);
            r[i] = -T::one();
            g.push(r);
            h.push(rad);
        }
    }
    for lmi in &p.lmis {
        for v in initial_vectors::<T>(lmi.size()) {
            let (row, rhs) = lmi.cut(&v);
            if row.iter().any(|x| *x != T::zero()) {
                g.push(row);
                h.push(rhs);
            }
        }
    }
    let mut lower = T::neg_infinity();
    let mut upper = T::infinity();
    let mut best: Vec<T> = vec![T::zero(); dim];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let Some((x, val)) = solve_master(&p.objective, &g, &h, &p.eq)? else {
            return Err(CuttingPlaneError::Infeasible);
        };
        lower = lower.max(val);
        if let Some((xf, fv)) = repair(&x) {
            if fv < upper {
                upper = fv;
                best = xf;
            }
        }
        if upper - lower <= opts.gap_tol {
            converged = true;
            break;
        }
        let mut added = 0;
        for lmi in &p.lmis {
            let hx = lmi.eval(&x);
            let scale = hx.max_abs().max(T::one());
            let (ev, vecs) = hx.eigh();
            for (k, &lam) in ev.iter().enumerate().rev() {
                if lam <= opts.cut_tol * scale {
                    break;
                }
                let v = vecs.column(k);
                let (row, rhs) = lmi.cut(&v);
                g.push(row);
                h.push(rhs);
                added += 1;
            }
        }
        if added == 0 {
            break;
        }
    }
    if upper < lower {
        upper = lower;
    }
    Ok(CuttingPlaneResult { lower, upper, x: best, iterations, converged })
}

//! Bridges `(D, ω, π_A, π_B)`: the 1-level of the pivot, the bridge
//! seminorm, reach, height and length.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{Algebra, Element, Morphism, State};
use crate::error::{Error, Result};
use crate::quantum_metric::{
    canonical_slice, dot, iterative_options, kernel_check, state_diameter, CertifiedValue, LipNorm, Method, DEFAULT_SEED,
};
use crate::solvers::{min_opnorm_constrained, min_opnorm_lp, solve_spectral, AffineFamily, AffineHermitian, SpectralProgram};
use crate::{CMatrix, C64};

/// Residual allowed for 1-level basis vectors.
pub const ONE_LEVEL_TOL: f64 = 1e-10;
/// Random starts of the lower-bound search over non-polytopal Lip-balls.
pub const OUTER_SAMPLES: usize = 16;
/// Pure states sampled for noncommutative heights.
pub const HEIGHT_SAMPLES: usize = 32;

/// Orthonormal bases, per block, of `V = ker(1 − ω) ∩ ker(1 − ω*)`.
///
/// A state of `D` lies in the 1-level of `ω` iff its density matrices are
/// supported on `V`: by Cauchy–Schwarz `|φ((1−ω)d)|² ≤ φ((1−ω)(1−ω)*) φ(d*d)`,
/// so `φ(ω) = 1` forces `φ((1−ω)*(1−ω)) = 0`, which for a density matrix
/// means its range lies in `ker(1 − ω)`; the adjoint gives `ker(1 − ω*)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneLevelSpace {
    pub basis: Vec<Vec<Vec<C64>>>,
}

impl OneLevelSpace {
    pub fn dim(&self) -> usize {
        self.basis.iter().map(|b| b.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.dim() == 0
    }

    /// Whether `V` is the whole Hilbert space of `D`.
    pub fn is_full(&self, d: &Algebra) -> bool {
        self.basis.iter().zip(d.block_dims()).all(|(b, &n)| b.len() == n)
    }

    /// Isometry onto `V` in one block, or `None` when `V` misses that block.
    pub fn isometry(&self, block: usize) -> Option<CMatrix> {
        let b = &self.basis[block];
        if b.is_empty() {
            return None;
        }
        Some(CMatrix::from_columns(b[0].len(), b))
    }

    /// Whether a state of `D` is supported on `V`.
    pub fn contains(&self, phi: &State, tol: f64) -> bool {
        phi.density().iter().enumerate().all(|(k, rho)| {
            let n = rho.rows();
            let proj = match self.isometry(k) {
                Some(q) => q.matmul(&q.adjoint()),
                None => CMatrix::zeros(n, n),
            };
            let outside = CMatrix::identity(n).sub(&proj);
            outside.matmul(rho).matmul(&outside).max_abs() <= tol
        })
    }
}

pub fn one_level_space(d: &Algebra, omega: &Element) -> OneLevelSpace {
    assert_eq!(omega.algebra(), d, "pivot must lie in D");
    let mut basis = Vec::with_capacity(d.num_blocks());
    for w in omega.blocks() {
        let n = w.rows();
        let i = CMatrix::identity(n);
        let r = i.sub(w);
        let rs = i.sub(&w.adjoint());
        let m = r.adjoint().matmul(&r).add(&rs.adjoint().matmul(&rs));
        let scale = m.max_abs().max(1.0);
        let (ev, vecs) = m.eigh();
        let mut block = Vec::new();
        for (k, &lam) in ev.iter().enumerate() {
            if lam > 1e-12 * scale {
                break;
            }
            let v = vecs.column(k);
            let res1 = crate::linalg::vec_norm(&r.matvec(&v));
            let res2 = crate::linalg::vec_norm(&rs.matvec(&v));
            if res1 <= ONE_LEVEL_TOL && res2 <= ONE_LEVEL_TOL {
                block.push(v);
            }
        }
        basis.push(block);
    }
    OneLevelSpace { basis }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bridge {
    d: Algebra,
    pivot: Element,
    pi_a: Morphism,
    pi_b: Morphism,
    level: OneLevelSpace,
}

impl Bridge {
    pub fn new(d: &Algebra, pivot: Element, pi_a: Morphism, pi_b: Morphism) -> Result<Self> {
        if pivot.algebra() != d {
            return Err(Error::structural("pivot is not an element of D"));
        }
        if pi_a.target() != d || pi_b.target() != d {
            return Err(Error::structural("both morphisms must map into D"));
        }
        if !pi_a.is_injective() || !pi_b.is_injective() {
            return Err(Error::structural("bridge morphisms must be injective"));
        }
        let level = one_level_space(d, &pivot);
        if level.is_empty() {
            return Err(Error::structural("the pivot has an empty 1-level"));
        }
        Ok(Bridge { d: d.clone(), pivot, pi_a, pi_b, level })
    }

    /// [`Bridge::new`] that also demands a self-adjoint pivot.
    pub fn new_self_adjoint(d: &Algebra, pivot: Element, pi_a: Morphism, pi_b: Morphism) -> Result<Self> {
        if !pivot.is_self_adjoint() {
            return Err(Error::structural("pivot is not self-adjoint"));
        }
        Self::new(d, pivot, pi_a, pi_b)
    }

    /// `(A, 1, id, id)`.
    pub fn identity(a: &Algebra) -> Self {
        Self::new(a, a.unit(), Morphism::identity(a), Morphism::identity(a)).expect("identity bridge")
    }

    pub fn d(&self) -> &Algebra {
        &self.d
    }

    pub fn pivot(&self) -> &Element {
        &self.pivot
    }

    pub fn pi_a(&self) -> &Morphism {
        &self.pi_a
    }

    pub fn pi_b(&self) -> &Morphism {
        &self.pi_b
    }

    pub fn domain(&self) -> &Algebra {
        self.pi_a.source()
    }

    pub fn codomain(&self) -> &Algebra {
        self.pi_b.source()
    }

    pub fn one_level(&self) -> &OneLevelSpace {
        &self.level
    }
}

/// `‖π_A(a) ω − ω π_B(b)‖`.
pub fn bridge_seminorm(g: &Bridge, a: &Element, b: &Element) -> Result<f64> {
    let lhs = g.pi_a.apply(a)?.mul(&g.pivot)?;
    let rhs = g.pivot.mul(&g.pi_b.apply(b)?)?;
    Ok(lhs.sub(&rhs)?.op_norm())
}

/// `(D, ω*, π_B, π_A)`.
pub fn inverse_bridge(g: &Bridge) -> Bridge {
    let pivot = g.pivot.adjoint();
    let level = one_level_space(&g.d, &pivot);
    Bridge { d: g.d.clone(), pivot, pi_a: g.pi_b.clone(), pi_b: g.pi_a.clone(), level }
}

fn check_endpoints(g: &Bridge, la: &LipNorm, lb: &LipNorm) -> Result<()> {
    if la.algebra() != g.domain() || lb.algebra() != g.codomain() {
        return Err(Error::structural("Lip-norms do not match the bridge endpoints"));
    }
    for (name, l) in [("L_A", la), ("L_B", lb)] {
        if !kernel_check(l).passes() {
            return Err(Error::domain(format!("{name} fails the kernel condition")));
        }
    }
    Ok(())
}

/// `b ↦ π_A(a) ω − ω π_B(b)` in the coordinates of `sa(B)`.
fn seminorm_family(g: &Bridge, a: &Element) -> Result<AffineFamily<f64>> {
    let constant = g.pi_a.apply(a)?.mul(&g.pivot)?.into_blocks();
    let coeffs = g
        .codomain()
        .sa_basis()
        .iter()
        .map(|e| g.pivot.mul(&g.pi_b.apply(e).unwrap()).unwrap().scale_re(-1.0).into_blocks())
        .collect();
    Ok(AffineFamily { constant, coeffs })
}

/// Keeps the constant part of `b` and pulls the rest into the Lip-ball.
pub(crate) fn shift_preserving_pull(l: &LipNorm, b: &[f64]) -> Vec<f64> {
    let unit = l.algebra().unit_coords();
    let c = b[0];
    let y: Vec<f64> = b.iter().zip(&unit).map(|(x, u)| x - c * u).collect();
    let y = l.ball().pull_inside(&y);
    y.iter().zip(&unit).map(|(x, u)| x + c * u).collect()
}

/// `inf { bn_γ(a, b) : L_B(b) ≤ 1 }` with a minimiser.
pub fn reach_argmin(g: &Bridge, lb: &LipNorm, a: &Element) -> Result<(CertifiedValue, Element)> {
    let family = seminorm_family(g, a)?;
    let rep = lb.ball();
    let mut le = Vec::with_capacity(2 * rep.rows.len());
    for r in &rep.rows {
        le.push((r.clone(), 1.0));
        le.push((r.iter().map(|x| -x).collect(), 1.0));
    }
    if rep.is_polytopal() {
        if let Some(rows) = family.real_rows() {
            let r = min_opnorm_lp(&rows, family.dim(), &le, &[])?;
            let b = lb.algebra().from_sa_coords(&r.argmin)?;
            let value = bridge_seminorm(g, a, &b)?;
            return Ok((CertifiedValue::bounds(r.lower, r.upper, value, Method::ExactLp, r.iterations), b));
        }
    }
    let repair = |b: &[f64]| Some(shift_preserving_pull(lb, b));
    let r = min_opnorm_constrained(&family, &le, &[], &rep.lmis(), &iterative_options(), &repair)?;
    let b = lb.algebra().from_sa_coords(&r.argmin)?;
    let mut v = CertifiedValue::bounds(r.lower, r.upper, r.value, Method::Iterative, r.iterations);
    if !r.converged {
        v = v.with_caveat("inner minimisation stopped at the iteration cap");
    }
    Ok((v, b))
}

/// `sup_{L_A(a) ≤ 1} inf_{L_B(b) ≤ 1} bn_γ(a, b)`.
pub fn directed_reach(g: &Bridge, la: &LipNorm, lb: &LipNorm) -> Result<CertifiedValue> {
    directed_reach_seeded(g, la, lb, DEFAULT_SEED)
}

pub fn directed_reach_seeded(g: &Bridge, la: &LipNorm, lb: &LipNorm, seed: u64) -> Result<CertifiedValue> {
    let a = la.algebra();
    if a.dim() == 1 {
        return Ok(CertifiedValue::zero());
    }
    if let Ok(slice) = canonical_slice(la) {
        let vals: Vec<Result<CertifiedValue>> =
            slice.elements(a).par_iter().map(|x| reach_argmin(g, lb, x).map(|r| r.0)).collect();
        let mut out = CertifiedValue::zero();
        for v in vals {
            out = out.max(&v?);
        }
        return Ok(out);
    }
    // Lower bound by seeded search over the Lip-ball, upper bound by b = t·1.
    let rep = la.ball();
    let inner = |x: &[f64]| -> Result<f64> { Ok(reach_argmin(g, lb, &a.from_sa_coords(x)?)?.0.lower) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit_dir = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let x = a.random_self_adjoint(rng).sa_coords();
        let base = x[0];
        let unit = a.unit_coords();
        let y: Vec<f64> = x.iter().zip(&unit).map(|(v, u)| v - base * u).collect();
        let l = rep.eval(&y);
        y.iter().map(|v| v / l.max(1e-300)).collect()
    };
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for _ in 0..OUTER_SAMPLES {
        let x = unit_dir(&mut rng);
        let v = inner(&x)?;
        if v > best.0 {
            best = (v, x);
        }
    }
    let mut step = 0.5;
    for _ in 0..OUTER_SAMPLES {
        let d = unit_dir(&mut rng);
        let cand: Vec<f64> = best.1.iter().zip(&d).map(|(p, q)| p + step * q).collect();
        let l = rep.eval(&cand);
        let cand: Vec<f64> = cand.iter().map(|v| v / l.max(1e-300)).collect();
        let v = inner(&cand)?;
        if v > best.0 {
            best = (v, cand);
        } else {
            step *= 0.7;
        }
    }
    let diam = state_diameter(la)?;
    let upper = g.pivot.op_norm() * diam.upper / 2.0;
    let lower = best.0.max(0.0).min(upper);
    Ok(CertifiedValue::bounds(lower, upper, lower, Method::Iterative, diam.iterations)
        .with_caveat("outer supremum over a non-polytopal Lip-ball: sampled lower bound, diameter upper bound"))
}

/// Hausdorff distance between `π_A(Lip₁(A)) ω` and `ω π_B(Lip₁(B))`.
pub fn reach(g: &Bridge, la: &LipNorm, lb: &LipNorm) -> Result<CertifiedValue> {
    check_endpoints(g, la, lb)?;
    let forward = directed_reach(g, la, lb)?;
    let backward = directed_reach(&inverse_bridge(g), lb, la)?;
    Ok(forward.max(&backward))
}

/// `sup_φ inf_{ψ ∈ S(A|γ)} mk(φ, ψ)`, the directed height term.
pub fn directed_height(g: &Bridge, la: &LipNorm) -> Result<CertifiedValue> {
    let a = la.algebra();
    if g.level.is_full(&g.d) || a.dim() == 1 {
        return Ok(CertifiedValue::zero());
    }
    let pure: Vec<State> = if a.is_commutative() {
        (0..a.num_blocks()).map(|i| State::dirac(a, i)).collect::<Result<_>>()?
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED ^ 0x4EE1);
        (0..HEIGHT_SAMPLES).map(|_| State::random_pure(a, &mut rng)).collect()
    };
    let vals: Vec<Result<CertifiedValue>> = pure.par_iter().map(|phi| distance_to_level(g, la, phi)).collect();
    let mut out = CertifiedValue::zero();
    for v in vals {
        out = out.max(&v?);
    }
    if !a.is_commutative() {
        let diam = state_diameter(la)?;
        out.upper = out.upper.max(diam.upper);
        out.method = Method::Iterative;
        out = out.with_caveat("supremum over sampled pure states: lower bound only, upper bound is the diameter");
    }
    Ok(out)
}

/// `inf_{ψ ∈ S(A|γ)} mk(φ, ψ) = sup_{L(a) ≤ 1} φ(a) − λ_max(P_V π_A(a) P_V)` by the minimax theorem.
pub fn distance_to_level(g: &Bridge, la: &LipNorm, phi: &State) -> Result<CertifiedValue> {
    let a = la.algebra();
    let w = phi.functional();
    let blocks: Vec<(usize, CMatrix)> = (0..g.d.num_blocks()).filter_map(|k| g.level.isometry(k).map(|q| (k, q))).collect();
    // Compressions `Q* π_A(E_i) Q` of the basis elements.
    let basis = a.sa_basis();
    let images: Vec<Element> = basis.iter().map(|e| g.pi_a.apply(e).unwrap()).collect();
    let compress = |i: usize, k: usize, q: &CMatrix| q.adjoint().matmul(&images[i].blocks()[k]).matmul(q);
    if a.is_commutative() {
        let point = w.iter().position(|&x| x == 1.0);
        if let Some(x) = point {
            let hit = blocks.iter().any(|(k, q)| (0..q.cols()).any(|c| compress(x, *k, q)[(c, c)].re > 1.0 - 1e-12));
            if hit {
                return Ok(CertifiedValue::zero());
            }
        }
    }
    let rep = la.ball();
    let n = rep.dim;
    // Variables (a, m): minimise m − φ(a).
    let mut obj: Vec<f64> = w.iter().map(|x| -x).collect();
    obj.push(1.0);
    let widen = |r: &[f64]| {
        let mut v = r.to_vec();
        v.push(0.0);
        v
    };
    let mut le = Vec::new();
    for r in &rep.rows {
        le.push((widen(r), 1.0));
        le.push((widen(&r.iter().map(|x| -x).collect::<Vec<_>>()), 1.0));
    }
    let mut base = vec![0.0; n + 1];
    base[0] = 1.0;
    let compressed_diag = blocks.iter().all(|(k, q)| {
        (0..n).all(|i| {
            let c = compress(i, *k, q);
            (0..c.rows()).all(|r| (0..c.cols()).all(|s| r == s || c[(r, s)].norm() == 0.0))
        })
    });
    if rep.is_polytopal() && compressed_diag {
        let mut lp = crate::solvers::LinearProgram::free(obj.clone(), false);
        for (r, b) in &le {
            lp.constrain(r.clone(), crate::solvers::Sense::Le, *b);
        }
        lp.constrain(base.clone(), crate::solvers::Sense::Eq, 0.0);
        for (k, q) in &blocks {
            for c in 0..q.cols() {
                let mut row: Vec<f64> = (0..n).map(|i| compress(i, *k, q)[(c, c)].re).collect();
                row.push(-1.0);
                lp.constrain(row, crate::solvers::Sense::Le, 0.0);
            }
        }
        let sol = crate::solvers::solve_lp(&lp)?;
        if sol.status != crate::solvers::LpStatus::Optimal {
            return Err(Error::NonConvergence(format!("height LP is {:?}", sol.status)));
        }
        let v = (-sol.objective).max(0.0);
        let lo = (-sol.objective.max(sol.dual_objective)).max(0.0);
        let hi = (-sol.objective.min(sol.dual_objective)).max(0.0);
        return Ok(CertifiedValue::bounds(lo, hi, v, Method::ExactLp, sol.pivots));
    }
    let mut p = SpectralProgram::new(obj);
    p.le = le;
    p.eq.push((base, 0.0));
    p.lmis = rep.lmis().into_iter().map(|l| l.widen(n + 1)).collect();
    for (k, q) in &blocks {
        let size = q.cols();
        let mut coeffs: Vec<CMatrix> = (0..n).map(|i| compress(i, *k, q)).collect();
        coeffs.push(CMatrix::identity(size).scale_re(-1.0));
        p.lmis.push(AffineHermitian { constant: CMatrix::zeros(size, size), coeffs });
    }
    let top = |x: &[f64]| -> f64 {
        blocks.iter().fold(f64::NEG_INFINITY, |m, (k, q)| {
            let mut c = CMatrix::zeros(q.cols(), q.cols());
            for i in 0..n {
                if x[i] != 0.0 {
                    c = c.axpy(x[i], &compress(i, *k, q));
                }
            }
            m.max(*c.eigvalsh().last().unwrap())
        })
    };
    let repair = |x: &[f64]| {
        let y = rep.pull_inside(&x[..n]);
        let m = top(&y);
        let val = m - dot(&w, &y);
        let mut out = y;
        out.push(m);
        Some((out, val))
    };
    let r = solve_spectral(&p, &iterative_options(), &repair)?;
    let mut v = CertifiedValue::bounds((-r.upper).max(0.0), (-r.lower).max(0.0), (-r.upper).max(0.0), Method::Iterative, r.iterations);
    if !r.converged {
        v = v.with_caveat("height inner problem stopped at the iteration cap");
    }
    Ok(v)
}

/// `max` of the two directed heights.
pub fn height(g: &Bridge, la: &LipNorm, lb: &LipNorm) -> Result<CertifiedValue> {
    check_endpoints(g, la, lb)?;
    let ha = directed_height(g, la)?;
    let hb = directed_height(&inverse_bridge(g), lb)?;
    Ok(ha.max(&hb))
}

/// `max{reach, height}`.
pub fn bridge_length(g: &Bridge, la: &LipNorm, lb: &LipNorm) -> Result<CertifiedValue> {
    Ok(reach(g, la, lb)?.max(&height(g, la, lb)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum_metric::FiniteMetricSpace;

    fn two_point(d: f64) -> LipNorm {
        LipNorm::finite_lipschitz(FiniteMetricSpace::two_point(d).unwrap())
    }

    #[test]
    fn one_level_examples() {
        let m2 = Algebra::full_matrix(2).unwrap();
        let full = one_level_space(&m2, &m2.unit());
        assert!(full.is_full(&m2));
        let p = Element::new(&m2, vec![CMatrix::from_real_diag(&[1.0, 0.0])]).unwrap();
        let v = one_level_space(&m2, &p);
        assert_eq!(v.dim(), 1);
        assert!((v.basis[0][0][0].norm() - 1.0).abs() < 1e-12 && v.basis[0][0][1].norm() < 1e-12);
        let half = Element::new(&m2, vec![CMatrix::from_real_diag(&[0.5, 0.5])]).unwrap();
        assert!(one_level_space(&m2, &half).is_empty());
        assert!(Bridge::new(&m2, half, Morphism::identity(&m2), Morphism::identity(&m2)).is_err());
    }

    #[test]
    fn seminorm_examples() {
        let l = two_point(1.0);
        let a = l.algebra();
        let g = Bridge::identity(a);
        let x = a.function(&[0.3, -2.0]).unwrap();
        assert_eq!(bridge_seminorm(&g, &x, &x).unwrap(), 0.0);
        assert_eq!(bridge_seminorm(&g, &x, &a.zero()).unwrap(), x.op_norm());
        assert!(bridge_seminorm(&g, &a.unit(), &a.zero()).unwrap() >= 1.0);
    }

    #[test]
    fn identity_bridge_has_length_zero() {
        let l = two_point(1.0);
        let g = Bridge::identity(l.algebra());
        let len = bridge_length(&g, &l, &l).unwrap();
        assert!(len.upper.abs() < 1e-9, "{len:?}");
        assert_eq!(height(&g, &l, &l).unwrap().value, 0.0);
    }

    #[test]
    fn halved_lipnorm_reach_matches_grid_oracle() {
        let la = two_point(1.0);
        let lb = two_point(2.0);
        let g = Bridge::identity(la.algebra());
        let r = reach(&g, &la, &lb).unwrap();
        // Grid oracle over both slices and the free constant.
        let mut oracle = 0.0_f64;
        let grid = |n: i32, half: f64| (-n..=n).map(move |k| half * k as f64 / n as f64);
        for (ball, other) in [(1.0, 2.0), (2.0, 1.0)] {
            let mut directed = 0.0_f64;
            for s in grid(8, ball) {
                let mut best = f64::INFINITY;
                for t in grid(64, other) {
                    for c in grid(64, 2.0) {
                        best = best.min((0.0 - (c)).abs().max((s - (c + t)).abs()));
                    }
                }
                directed = directed.max(best);
            }
            oracle = oracle.max(directed);
        }
        assert!((r.value - 0.5).abs() < 1e-9, "{r:?}");
        assert!((oracle - 0.5).abs() < 1e-9, "{oracle}");
    }

    #[test]
    fn inverse_is_an_involution() {
        let m2 = Algebra::full_matrix(2).unwrap();
        let w = Element::new(&m2, vec![CMatrix::from_fn(2, 2, |i, j| if i == 0 && j == 0 { C64::new(1.0, 0.0) } else if i == 1 && j == 0 { C64::new(0.0, 0.5) } else { C64::new(0.0, 0.0) })]).unwrap();
        let g = Bridge::new(&m2, w, Morphism::identity(&m2), Morphism::identity(&m2));
        assert!(g.is_err() || inverse_bridge(&inverse_bridge(g.as_ref().unwrap())) == *g.as_ref().unwrap());
        let id = Bridge::identity(&m2);
        assert_eq!(inverse_bridge(&inverse_bridge(&id)), id);
    }
}

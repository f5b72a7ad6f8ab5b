use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{Algebra, Automorphism, Element};
use crate::error::{Error, Result};
use crate::quantum_metric::{kernel_check, LipNorm};
use crate::{CMatrix, C64};

/// Eigenvalues closer than this are treated as one cluster.
const CLUSTER_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthChoice {
    /// `max(2π·min(j, n−j)/n, 2π·min(l, n−l)/n)`.
    #[default]
    Arc,
    /// `max(|ζ^j − 1|, |ζ^l − 1|)`.
    Chord,
}

impl LengthChoice {
    pub fn length(&self, n: usize, j: usize, l: usize) -> f64 {
        let one = |m: usize| match self {
            LengthChoice::Arc => 2.0 * PI * m.min(n - m) as f64 / n as f64,
            LengthChoice::Chord => (C64::from_polar(1.0, 2.0 * PI * m as f64 / n as f64) - 1.0).norm(),
        };
        one(j).max(one(l))
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            LengthChoice::Arc => "arc",
            LengthChoice::Chord => "chord",
        }
    }
}

impl std::str::FromStr for LengthChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "arc" => Ok(LengthChoice::Arc),
            "chord" => Ok(LengthChoice::Chord),
            _ => Err(Error::domain(format!("unknown length function `{s}`"))),
        }
    }
}

/// `C*(Z_n², σ_k)` in its block decomposition with the dual-action Lip-norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzyTorus {
    pub n: usize,
    pub k: usize,
    pub length: LengthChoice,
    pub algebra: Algebra,
    pub lipnorm: LipNorm,
    pub u: Element,
    pub v: Element,
    /// Isometries `Q_c` from each block into `ℓ²(Z_n²)`.
    pub isometries: Vec<CMatrix>,
}

impl FuzzyTorus {
    /// The block form of an operator in the span of the regular representation.
    pub fn reduce(&self, x: &CMatrix) -> Result<Element> {
        reduce(&self.algebra, &self.isometries, x)
    }
}

fn reduce(alg: &Algebra, qs: &[CMatrix], x: &CMatrix) -> Result<Element> {
    Element::new(alg, qs.iter().map(|q| q.adjoint().matmul(x).matmul(q)).collect())
}

fn zeta(n: usize, e: usize) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * (e % n) as f64 / n as f64)
}

/// `λ(x) δ_z = σ(x, z) δ_{x+z}` with `σ(x, y) = ζ^{k x₂ y₁}`.
fn regular(n: usize, k: usize, x: (usize, usize)) -> CMatrix {
    let idx = |a: usize, b: usize| a * n + b;
    let mut m = CMatrix::zeros(n * n, n * n);
    for z1 in 0..n {
        for z2 in 0..n {
            let phase = zeta(n, k * x.1 * z1);
            m[(idx((x.0 + z1) % n, (x.1 + z2) % n), idx(z1, z2))] = phase;
        }
    }
    m
}

/// `ρ(y) δ_z = σ(z, y) δ_{z+y}`, commuting with every `λ(x)`.
fn right_regular(n: usize, k: usize, y: (usize, usize)) -> CMatrix {
    let idx = |a: usize, b: usize| a * n + b;
    let mut m = CMatrix::zeros(n * n, n * n);
    for z1 in 0..n {
        for z2 in 0..n {
            m[(idx((z1 + y.0) % n, (z2 + y.1) % n), idx(z1, z2))] = zeta(n, k * z2 * y.0);
        }
    }
    m
}

/// Groups eigenvectors with equal eigenvalues.
fn clusters(ev: &[f64], vecs: &CMatrix) -> Vec<Vec<Vec<C64>>> {
    let mut out: Vec<Vec<Vec<C64>>> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for (i, &e) in ev.iter().enumerate() {
        if e - last > CLUSTER_TOL || out.is_empty() {
            out.push(Vec::new());
        }
        last = e;
        out.last_mut().unwrap().push(vecs.column(i));
    }
    out
}

fn random_hermitian(mats: &[CMatrix], rng: &mut ChaCha8Rng) -> CMatrix {
    let size = mats[0].rows();
    let mut h = CMatrix::zeros(size, size);
    for m in mats {
        let c = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        h = h.add(&m.scale(c));
    }
    h.add(&h.adjoint())
}

/// Block decomposition of the span of `λ(Z_n²)`: central isotypic
/// components, each cut down to one irreducible subspace.
fn decompose(n: usize, k: usize) -> Result<(Vec<usize>, Vec<CMatrix>, Vec<CMatrix>)> {
    let dim = n * n;
    if n == 1 {
        return Ok((vec![1], vec![CMatrix::identity(1)], vec![CMatrix::identity(1)]));
    }
    let group: Vec<(usize, usize)> = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).collect();
    let lam: Vec<CMatrix> = group.iter().map(|&x| regular(n, k, x)).collect();
    let (u, v) = (&lam[n], &lam[1]);
    let commutes = |m: &CMatrix| m.matmul(u).sub(&u.matmul(m)).max_abs() < 1e-12 && m.matmul(v).sub(&v.matmul(m)).max_abs() < 1e-12;
    let central: Vec<CMatrix> = lam.iter().filter(|m| commutes(m)).cloned().collect();
    let commutant: Vec<CMatrix> = group.iter().map(|&y| right_regular(n, k, y)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    for _ in 0..16 {
        let z = random_hermitian(&central, &mut rng);
        let (ev, vecs) = z.eigh();
        let comps = clusters(&ev, &vecs);
        let d2 = dim / comps.len();
        let d = (d2 as f64).sqrt().round() as usize;
        if d * d * comps.len() != dim || comps.iter().any(|c| c.len() != d2) {
            continue;
        }
        let h = random_hermitian(&commutant, &mut rng);
        let mut qs = Vec::with_capacity(comps.len());
        let mut ws = Vec::with_capacity(comps.len());
        for comp in &comps {
            let w = CMatrix::from_columns(dim, comp);
            let (hv, hvecs) = w.adjoint().matmul(&h).matmul(&w).eigh();
            let sub = clusters(&hv, &hvecs);
            if sub.len() != d || sub.iter().any(|s| s.len() != d) {
                break;
            }
            qs.push(w.matmul(&CMatrix::from_columns(d2, &sub[0])));
            ws.push(w);
        }
        if qs.len() == comps.len() {
            return Ok((vec![d; comps.len()], qs, ws));
        }
    }
    Err(Error::NonConvergence("could not separate the blocks of the twisted group algebra".into()))
}

/// Unitary `T` with `T a T* = b` for generating pairs, from the kernel of
/// `vec(T) ↦ (T aᵢ − bᵢ T)`.
fn intertwiner(pairs: &[(CMatrix, CMatrix)]) -> Result<CMatrix> {
    let d = pairs[0].0.rows();
    let mut m = CMatrix::zeros(d * d, d * d);
    for (a, b) in pairs {
        let k = CMatrix::identity(d).kron(&a.transpose()).sub(&b.kron(&CMatrix::identity(d)));
        m = m.add(&k.adjoint().matmul(&k));
    }
    let (ev, vecs) = m.eigh();
    if ev[0] > 1e-9 {
        return Err(Error::NonConvergence("dual action is not implemented by a unitary".into()));
    }
    let t = vecs.column(0);
    let t = CMatrix::from_fn(d, d, |i, j| t[i * d + j]);
    let f = t.frobenius();
    let u = t.scale_re((d as f64).sqrt() / f);
    let defect = u.matmul(&u.adjoint()).sub(&CMatrix::identity(d)).max_abs();
    if defect > 1e-9 {
        return Err(Error::NonConvergence(format!("intertwiner has unitary defect {defect:e}")));
    }
    Ok(u)
}

/// The twisted group algebra of `Z_n × Z_n` with the skew bicharacter
/// `σ(x, y) = ζ^{k x₂ y₁}`, its clock and shift generators, and the Lip-norm
/// of the dual action.
pub fn fuzzy_torus(n: usize, k: usize, length: LengthChoice) -> Result<FuzzyTorus> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    let k = k % n;
    let (dims, qs, ws) = decompose(n, k)?;
    let alg = Algebra::new(dims)?;
    let (ureg, vreg) = (regular(n, k, (1 % n, 0)), regular(n, k, (0, 1 % n)));
    let u = reduce(&alg, &qs, &ureg)?;
    let v = reduce(&alg, &qs, &vreg)?;
    let vu = v.mul(&u)?;
    let uv = u.mul(&v)?.scale(zeta(n, k));
    if vu.sub(&uv)?.op_norm() > 1e-12 {
        return Err(Error::NonConvergence("generators violate the commutation relation".into()));
    }
    let mut actions = Vec::new();
    let mut lengths = Vec::new();
    for j in 0..n {
        for l in 0..n {
            if (j, l) == (0, 0) {
                continue;
            }
            let w = CMatrix::from_fn(n * n, n * n, |r, c| if r == c { zeta(n, j * (r / n) + l * (r % n)) } else { C64::new(0.0, 0.0) });
            let mut perm = vec![0; qs.len()];
            let mut unitaries = Vec::with_capacity(qs.len());
            for (c, q) in qs.iter().enumerate() {
                let moved = w.matmul(q);
                let weight = |t: usize| ws[t].adjoint().matmul(&moved).frobenius();
                let target = (0..qs.len()).max_by(|&a, &b| weight(a).total_cmp(&weight(b))).unwrap();
                perm[c] = target;
                let pairs = [
                    (u.blocks()[c].clone(), u.blocks()[target].scale(zeta(n, j))),
                    (v.blocks()[c].clone(), v.blocks()[target].scale(zeta(n, l))),
                ];
                unitaries.push(intertwiner(&pairs)?);
            }
            actions.push(Automorphism::new(&alg, perm, unitaries)?);
            lengths.push(length.length(n, j, l));
        }
    }
    let lipnorm = LipNorm::ergodic(&alg, actions, lengths)?;
    if !kernel_check(&lipnorm).passes() {
        return Err(Error::domain("the dual action is not ergodic"));
    }
    Ok(FuzzyTorus { n, k, length, algebra: alg, lipnorm, u, v, isometries: qs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum_metric::{check_leibniz, check_lipnorm, eval_lipnorm};

    #[test]
    fn trivial_torus() {
        let t = fuzzy_torus(1, 0, LengthChoice::Arc).unwrap();
        assert_eq!(t.algebra.dim(), 1);
        assert!(kernel_check(&t.lipnorm).passes());
        assert_eq!(eval_lipnorm(&t.lipnorm, &t.algebra.unit().scale_re(4.0)).unwrap(), 0.0);
        assert!(fuzzy_torus(0, 0, LengthChoice::Arc).is_err());
    }

    #[test]
    fn n2_generators_anticommute() {
        let t = fuzzy_torus(2, 1, LengthChoice::Arc).unwrap();
        assert_eq!(t.algebra.block_dims(), &[2]);
        let vu = t.v.mul(&t.u).unwrap();
        let uv = t.u.mul(&t.v).unwrap();
        assert!(vu.add(&uv).unwrap().op_norm() < 1e-12);
        assert!(check_lipnorm(&t.lipnorm).passed());
    }

    #[test]
    fn block_structure_follows_the_gcd() {
        for (n, k, dims) in [(2, 0, vec![1; 4]), (4, 2, vec![2; 4]), (3, 1, vec![3]), (4, 1, vec![4])] {
            let t = fuzzy_torus(n, k, LengthChoice::Chord).unwrap();
            assert_eq!(t.algebra.block_dims(), dims.as_slice(), "n = {n}, k = {k}");
        }
    }

    #[test]
    fn dual_action_scales_generators() {
        let t = fuzzy_torus(3, 1, LengthChoice::Arc).unwrap();
        if let crate::quantum_metric::LipKind::ErgodicAction { actions, lengths } = t.lipnorm.kind() {
            assert_eq!(actions.len(), 8);
            let au = actions[0].apply(&t.u).unwrap();
            let av = actions[0].apply(&t.v).unwrap();
            assert!(au.sub(&t.u).unwrap().op_norm() < 1e-12);
            assert!(av.sub(&t.v.scale(zeta(3, 1))).unwrap().op_norm() < 1e-12);
            assert!((lengths[0] - 2.0 * PI / 3.0).abs() < 1e-15);
        } else {
            panic!("wrong kind");
        }
    }

    #[test]
    fn leibniz_on_small_tori() {
        for n in 2..=3 {
            for k in 0..n {
                let t = fuzzy_torus(n, k, LengthChoice::Arc).unwrap();
                assert!(check_leibniz(&t.lipnorm, 20, 9).passed(), "n = {n}, k = {k}");
            }
        }
    }
}

//! Finite-dimensional C*-algebras presented as direct sums of full matrix
//! blocks, with their elements, states and unital *-homomorphisms.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{CMatrix, C64};

/// Entry-wise tolerance for the self-adjointness predicate.
pub const SELF_ADJOINT_TOL: f64 = 1e-12;
/// Tolerance for density matrix validation.
pub const STATE_TOL: f64 = 1e-10;
/// Tolerance for unitarity and homomorphism checks.
pub const MORPHISM_TOL: f64 = 1e-10;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// `M_{d_1} ⊕ ⋯ ⊕ M_{d_k}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Algebra {
    block_dims: Vec<usize>,
}

impl Algebra {
    pub fn new(block_dims: Vec<usize>) -> Result<Self> {
        if block_dims.is_empty() || block_dims.contains(&0) {
            return Err(Error::structural(format!("invalid block dimensions {block_dims:?}")));
        }
        Ok(Algebra { block_dims })
    }

    pub fn full_matrix(n: usize) -> Result<Self> {
        Self::new(vec![n])
    }

    /// `C(X)` for an `n`-point space.
    pub fn commutative(n: usize) -> Result<Self> {
        Self::new(vec![1; n])
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn num_blocks(&self) -> usize {
        self.block_dims.len()
    }

    /// Complex linear dimension `Σ dᵢ²`, also the real dimension of `sa(A)`.
    pub fn dim(&self) -> usize {
        self.block_dims.iter().map(|d| d * d).sum()
    }

    /// Dimension `Σ dᵢ` of the defining representation.
    pub fn hilbert_dim(&self) -> usize {
        self.block_dims.iter().sum()
    }

    pub fn is_commutative(&self) -> bool {
        self.block_dims.iter().all(|&d| d == 1)
    }

    pub fn direct_sum(&self, other: &Algebra) -> Algebra {
        let mut dims = self.block_dims.clone();
        dims.extend_from_slice(&other.block_dims);
        Algebra { block_dims: dims }
    }

    pub fn unit(&self) -> Element {
        Element { algebra: self.clone(), blocks: self.block_dims.iter().map(|&d| CMatrix::identity(d)).collect() }
    }

    pub fn zero(&self) -> Element {
        self.scalar(C64::new(0.0, 0.0))
    }

    pub fn scalar(&self, s: C64) -> Element {
        Element { algebra: self.clone(), blocks: self.block_dims.iter().map(|&d| CMatrix::identity(d).scale(s)).collect() }
    }

    /// Offset of each block's coordinates in the real `sa(A)` coordinate vector.
    pub fn sa_offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.num_blocks());
        let mut acc = 0;
        for &d in &self.block_dims {
            out.push(acc);
            acc += d * d;
        }
        out
    }

    /// The real basis of `sa(A)` in coordinate order: per block the diagonal
    /// units, then for each `k < l` the pair `e_kl + e_lk`, `i e_kl − i e_lk`.
    pub fn sa_basis(&self) -> Vec<Element> {
        (0..self.dim())
            .map(|i| {
                let mut x = vec![0.0; self.dim()];
                x[i] = 1.0;
                self.from_sa_coords(&x).expect("coordinate length")
            })
            .collect()
    }

    pub fn from_sa_coords(&self, x: &[f64]) -> Result<Element> {
        if x.len() != self.dim() {
            return Err(Error::structural(format!("expected {} coordinates, got {}", self.dim(), x.len())));
        }
        let mut blocks = Vec::with_capacity(self.num_blocks());
        let mut pos = 0;
        for &d in &self.block_dims {
            let mut m = CMatrix::zeros(d, d);
            for k in 0..d {
                m[(k, k)] = c(x[pos]);
                pos += 1;
            }
            for k in 0..d {
                for l in (k + 1)..d {
                    let z = C64::new(x[pos], x[pos + 1]);
                    m[(k, l)] = z;
                    m[(l, k)] = z.conj();
                    pos += 2;
                }
            }
            blocks.push(m);
        }
        Ok(Element { algebra: self.clone(), blocks })
    }

    /// Coordinates of the unit.
    pub fn unit_coords(&self) -> Vec<f64> {
        self.unit().sa_coords()
    }

    /// `C(X)` element from function values.
    pub fn function(&self, values: &[f64]) -> Result<Element> {
        if !self.is_commutative() || values.len() != self.num_blocks() {
            return Err(Error::structural("function values need a commutative algebra of matching size"));
        }
        self.from_sa_coords(values)
    }

    /// A self-adjoint element with independent standard normal coordinates.
    pub fn random_self_adjoint<R: Rng + ?Sized>(&self, rng: &mut R) -> Element {
        let x: Vec<f64> = (0..self.dim()).map(|_| rng.sample(StandardNormal)).collect();
        self.from_sa_coords(&x).expect("coordinate length")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Element {
    algebra: Algebra,
    blocks: Vec<CMatrix>,
}

impl Element {
    pub fn new(algebra: &Algebra, blocks: Vec<CMatrix>) -> Result<Self> {
        check_blocks(algebra, &blocks)?;
        Ok(Element { algebra: algebra.clone(), blocks })
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn into_blocks(self) -> Vec<CMatrix> {
        self.blocks
    }

    fn same_parent(&self, other: &Element) -> Result<()> {
        if self.algebra != other.algebra {
            return Err(Error::structural("elements belong to different algebras"));
        }
        Ok(())
    }

    fn zip(&self, other: &Element, f: impl Fn(&CMatrix, &CMatrix) -> CMatrix) -> Result<Element> {
        self.same_parent(other)?;
        Ok(Element { algebra: self.algebra.clone(), blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect() })
    }

    fn map(&self, f: impl Fn(&CMatrix) -> CMatrix) -> Element {
        Element { algebra: self.algebra.clone(), blocks: self.blocks.iter().map(f).collect() }
    }

    pub fn add(&self, other: &Element) -> Result<Element> {
        self.zip(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &Element) -> Result<Element> {
        self.zip(other, |a, b| a.sub(b))
    }

    pub fn mul(&self, other: &Element) -> Result<Element> {
        self.zip(other, |a, b| a.matmul(b))
    }

    pub fn scale(&self, s: C64) -> Element {
        self.map(|a| a.scale(s))
    }

    pub fn scale_re(&self, s: f64) -> Element {
        self.map(|a| a.scale_re(s))
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: f64, other: &Element) -> Result<Element> {
        self.zip(other, |a, b| a.axpy(s, b))
    }

    pub fn adjoint(&self) -> Element {
        self.map(|a| a.adjoint())
    }

    /// `(x + x*) / 2`.
    pub fn hermitian_part(&self) -> Element {
        self.map(|a| a.hermitian_part())
    }

    pub fn op_norm(&self) -> f64 {
        self.blocks.iter().fold(0.0, |m, b| m.max(b.op_norm()))
    }

    pub fn self_adjoint_defect(&self) -> f64 {
        self.blocks.iter().fold(0.0, |m, b| m.max(b.hermitian_defect()))
    }

    pub fn is_self_adjoint(&self) -> bool {
        self.self_adjoint_defect() <= SELF_ADJOINT_TOL
    }

    /// Real coordinates of the self-adjoint part.
    pub fn sa_coords(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.algebra.dim());
        for b in &self.blocks {
            let h = b.hermitian_part();
            let d = h.rows();
            for k in 0..d {
                out.push(h[(k, k)].re);
            }
            for k in 0..d {
                for l in (k + 1)..d {
                    out.push(h[(k, l)].re);
                    out.push(h[(k, l)].im);
                }
            }
        }
        out
    }

    /// Eigenvalues of all blocks of the self-adjoint part, ascending.
    pub fn spectrum(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.blocks.iter().flat_map(|b| b.eigvalsh()).collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// `λ_max − λ_min` of the self-adjoint part.
    pub fn spread(&self) -> f64 {
        let ev = self.spectrum();
        ev.last().unwrap() - ev.first().unwrap()
    }

    /// Inverse, when every block is invertible with condition number below `1e12`.
    pub fn inverse(&self) -> Option<Element> {
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            let sv = b.singular_values();
            let (big, small) = (sv[0], *sv.last().unwrap());
            if small <= big * 1e-12 || small == 0.0 {
                return None;
            }
            let (ev, u) = b.hermitian_part().eigh();
            if b.hermitian_defect() > SELF_ADJOINT_TOL {
                return None;
            }
            let inv_diag = CMatrix::from_real_diag(&ev.iter().map(|x| 1.0 / x).collect::<Vec<_>>());
            blocks.push(u.matmul(&inv_diag).matmul(&u.adjoint()));
        }
        Some(Element { algebra: self.algebra.clone(), blocks })
    }

    /// Element of `A ⊕ B` from its summands.
    pub fn direct_sum(&self, other: &Element) -> Element {
        let mut blocks = self.blocks.clone();
        blocks.extend(other.blocks.iter().cloned());
        Element { algebra: self.algebra.direct_sum(&other.algebra), blocks }
    }

    /// Splits an element of `A ⊕ B` where `A` has `first` blocks.
    pub fn split(&self, first: usize, a: &Algebra, b: &Algebra) -> Result<(Element, Element)> {
        if self.blocks.len() < first {
            return Err(Error::structural("split index out of range"));
        }
        Ok((Element::new(a, self.blocks[..first].to_vec())?, Element::new(b, self.blocks[first..].to_vec())?))
    }

    pub fn max_abs_diff(&self, other: &Element) -> f64 {
        self.blocks.iter().zip(&other.blocks).fold(0.0, |m, (a, b)| m.max(a.sub(b).max_abs()))
    }
}

fn check_blocks(algebra: &Algebra, blocks: &[CMatrix]) -> Result<()> {
    if blocks.len() != algebra.num_blocks() {
        return Err(Error::structural(format!("expected {} blocks, got {}", algebra.num_blocks(), blocks.len())));
    }
    for (i, (b, &d)) in blocks.iter().zip(algebra.block_dims()).enumerate() {
        if b.rows() != d || b.cols() != d {
            return Err(Error::structural(format!("block {i} has shape {}×{}, expected {d}×{d}", b.rows(), b.cols())));
        }
    }
    Ok(())
}

/// Operator norm: the largest singular value over all blocks.
pub fn op_norm(x: &Element) -> f64 {
    x.op_norm()
}

/// `(x∘y, {x,y}) = ((xy + yx)/2, (xy − yx)/2i)`.
pub fn jordan_lie(x: &Element, y: &Element) -> Result<(Element, Element)> {
    let xy = x.mul(y)?;
    let yx = y.mul(x)?;
    let jordan = xy.add(&yx)?.scale_re(0.5);
    let lie = xy.sub(&yx)?.scale(C64::new(0.0, -0.5));
    Ok((jordan, lie))
}

/// A state given by one density matrix per block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct State {
    algebra: Algebra,
    density: Vec<CMatrix>,
}

impl State {
    pub fn new(algebra: &Algebra, density: Vec<CMatrix>) -> Result<Self> {
        check_blocks(algebra, &density)?;
        let mut total = 0.0;
        for (i, rho) in density.iter().enumerate() {
            if rho.hermitian_defect() > STATE_TOL {
                return Err(Error::domain(format!("density block {i} is not Hermitian")));
            }
            if let Some(&lo) = rho.eigvalsh().first() {
                if lo < -STATE_TOL {
                    return Err(Error::domain(format!("density block {i} has eigenvalue {lo}")));
                }
            }
            total += rho.trace().re;
        }
        if (total - 1.0).abs() > STATE_TOL {
            return Err(Error::domain(format!("density traces sum to {total}")));
        }
        Ok(State { algebra: algebra.clone(), density })
    }

    /// The vector state `x ↦ ⟨v, x_block v⟩` for a unit vector `v`.
    pub fn vector(algebra: &Algebra, block: usize, v: &[C64]) -> Result<Self> {
        if block >= algebra.num_blocks() || v.len() != algebra.block_dims()[block] {
            return Err(Error::structural("vector does not fit the block"));
        }
        let n: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n == 0.0 {
            return Err(Error::domain("zero vector"));
        }
        let u: Vec<C64> = v.iter().map(|z| z / n).collect();
        let density = algebra
            .block_dims()
            .iter()
            .enumerate()
            .map(|(i, &d)| if i == block { CMatrix::from_fn(d, d, |r, s| u[r] * u[s].conj()) } else { CMatrix::zeros(d, d) })
            .collect();
        Ok(State { algebra: algebra.clone(), density })
    }

    /// Point mass at point `i` of a commutative algebra.
    pub fn dirac(algebra: &Algebra, i: usize) -> Result<Self> {
        if !algebra.is_commutative() {
            return Err(Error::structural("Dirac states need a commutative algebra"));
        }
        Self::vector(algebra, i, &[c(1.0)])
    }

    /// Probability vector on a commutative algebra.
    pub fn probability(algebra: &Algebra, p: &[f64]) -> Result<Self> {
        if !algebra.is_commutative() || p.len() != algebra.num_blocks() {
            return Err(Error::structural("probability vector does not match the algebra"));
        }
        Self::new(algebra, p.iter().map(|&x| CMatrix::from_real_diag(&[x])).collect())
    }

    /// The normalised trace `tr(x) / Σ dᵢ`.
    pub fn normalized_trace(algebra: &Algebra) -> Self {
        let n = algebra.hilbert_dim() as f64;
        State { algebra: algebra.clone(), density: algebra.block_dims().iter().map(|&d| CMatrix::identity(d).scale_re(1.0 / n)).collect() }
    }

    /// A pure state from a standard Gaussian vector in a uniformly chosen block.
    pub fn random_pure<R: Rng + ?Sized>(algebra: &Algebra, rng: &mut R) -> Self {
        let block = rng.gen_range(0..algebra.num_blocks());
        let d = algebra.block_dims()[block];
        let v: Vec<C64> = (0..d).map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
        Self::vector(algebra, block, &v).unwrap_or_else(|_| Self::vector(algebra, block, &[vec![c(1.0)], vec![c(0.0); d - 1]].concat()).unwrap())
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn density(&self) -> &[CMatrix] {
        &self.density
    }

    /// `φ(x) = Σᵢ tr(ρᵢ xᵢ)`.
    pub fn eval(&self, x: &Element) -> Result<C64> {
        if x.algebra() != &self.algebra {
            return Err(Error::structural("state and element belong to different algebras"));
        }
        Ok(self.density.iter().zip(x.blocks()).map(|(r, b)| r.matmul(b).trace()).sum())
    }

    /// The real vector `w` with `φ(a) = w · coords(a)` on `sa(A)`.
    pub fn functional(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.algebra.dim());
        for rho in &self.density {
            let d = rho.rows();
            for k in 0..d {
                out.push(rho[(k, k)].re);
            }
            for k in 0..d {
                for l in (k + 1)..d {
                    out.push(2.0 * rho[(k, l)].re);
                    out.push(2.0 * rho[(k, l)].im);
                }
            }
        }
        out
    }

    /// `t φ + (1 − t) ψ`.
    pub fn mix(&self, other: &State, t: f64) -> Result<State> {
        if self.algebra != other.algebra {
            return Err(Error::structural("states belong to different algebras"));
        }
        let density = self.density.iter().zip(&other.density).map(|(a, b)| a.scale_re(t).add(&b.scale_re(1.0 - t))).collect();
        Ok(State { algebra: self.algebra.clone(), density })
    }

    /// The state of `A ⊕ B` that ignores the second summand.
    pub fn extend_left(&self, right: &Algebra) -> State {
        let mut density = self.density.clone();
        density.extend(right.block_dims().iter().map(|&d| CMatrix::zeros(d, d)));
        State { algebra: self.algebra.direct_sum(right), density }
    }

    /// The state of `A ⊕ B` that ignores the first summand.
    pub fn extend_right(&self, left: &Algebra) -> State {
        let mut density: Vec<CMatrix> = left.block_dims().iter().map(|&d| CMatrix::zeros(d, d)).collect();
        density.extend(self.density.iter().cloned());
        State { algebra: left.direct_sum(&self.algebra), density }
    }
}

/// A unital *-homomorphism in multiplicity normal form:
/// target block `t` is `U_t · diag(x_s repeated m[t][s] times) · U_t*`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Morphism {
    source: Algebra,
    target: Algebra,
    multiplicities: Vec<Vec<usize>>,
    unitaries: Vec<CMatrix>,
}

impl Morphism {
    pub fn new(source: &Algebra, target: &Algebra, multiplicities: Vec<Vec<usize>>, unitaries: Vec<CMatrix>) -> Result<Self> {
        if multiplicities.len() != target.num_blocks() {
            return Err(Error::structural("one multiplicity row per target block is required"));
        }
        for (t, row) in multiplicities.iter().enumerate() {
            if row.len() != source.num_blocks() {
                return Err(Error::structural(format!("multiplicity row {t} has the wrong length")));
            }
            let size: usize = row.iter().zip(source.block_dims()).map(|(m, d)| m * d).sum();
            if size != target.block_dims()[t] {
                return Err(Error::structural(format!("target block {t}: Σ m·d = {size} ≠ {}", target.block_dims()[t])));
            }
        }
        check_blocks(target, &unitaries)?;
        for (t, u) in unitaries.iter().enumerate() {
            let defect = u.adjoint().matmul(u).sub(&CMatrix::identity(u.rows())).max_abs();
            if defect > MORPHISM_TOL {
                return Err(Error::structural(format!("unitary for target block {t} has defect {defect:e}")));
            }
        }
        Ok(Morphism { source: source.clone(), target: target.clone(), multiplicities, unitaries })
    }

    /// Multiplicity form with identity unitaries.
    pub fn standard(source: &Algebra, target: &Algebra, multiplicities: Vec<Vec<usize>>) -> Result<Self> {
        let unitaries = target.block_dims().iter().map(|&d| CMatrix::identity(d)).collect();
        Self::new(source, target, multiplicities, unitaries)
    }

    pub fn identity(a: &Algebra) -> Self {
        let k = a.num_blocks();
        let m = (0..k).map(|t| (0..k).map(|s| usize::from(s == t)).collect()).collect();
        Self::standard(a, a, m).expect("identity morphism")
    }

    /// The pullback `C(X) → C(Z)` of a map `f: Z → X` between finite sets.
    pub fn pullback(source_points: usize, f: &[usize]) -> Result<Self> {
        let src = Algebra::commutative(source_points)?;
        let tgt = Algebra::commutative(f.len())?;
        let mut m = Vec::with_capacity(f.len());
        for &x in f {
            if x >= source_points {
                return Err(Error::structural("map value out of range"));
            }
            m.push((0..source_points).map(|s| usize::from(s == x)).collect());
        }
        Self::standard(&src, &tgt, m)
    }

    pub fn source(&self) -> &Algebra {
        &self.source
    }

    pub fn target(&self) -> &Algebra {
        &self.target
    }

    pub fn multiplicities(&self) -> &[Vec<usize>] {
        &self.multiplicities
    }

    pub fn unitaries(&self) -> &[CMatrix] {
        &self.unitaries
    }

    pub fn is_injective(&self) -> bool {
        (0..self.source.num_blocks()).all(|s| self.multiplicities.iter().map(|r| r[s]).sum::<usize>() >= 1)
    }

    /// Source blocks in their order of appearance inside target block `t`.
    fn layout(&self, t: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for (s, &m) in self.multiplicities[t].iter().enumerate() {
            for _ in 0..m {
                out.push(s);
            }
        }
        out
    }

    pub fn apply(&self, x: &Element) -> Result<Element> {
        if x.algebra() != &self.source {
            return Err(Error::structural("element is not in the morphism source"));
        }
        let mut blocks = Vec::with_capacity(self.target.num_blocks());
        for (t, u) in self.unitaries.iter().enumerate() {
            let parts: Vec<&CMatrix> = self.layout(t).into_iter().map(|s| &x.blocks()[s]).collect();
            let d = CMatrix::block_diag(&parts);
            blocks.push(u.matmul(&d).matmul(&u.adjoint()));
        }
        Ok(Element { algebra: self.target.clone(), blocks })
    }

    /// The dual map on states: `φ ↦ φ ∘ π`.
    pub fn pull_back_state(&self, phi: &State) -> Result<State> {
        if phi.algebra() != &self.target {
            return Err(Error::structural("state is not on the morphism target"));
        }
        let mut density: Vec<CMatrix> = self.source.block_dims().iter().map(|&d| CMatrix::zeros(d, d)).collect();
        for (t, u) in self.unitaries.iter().enumerate() {
            let conj = u.adjoint().matmul(&phi.density()[t]).matmul(u);
            let mut off = 0;
            for s in self.layout(t) {
                let d = self.source.block_dims()[s];
                density[s] = density[s].add(&conj.diag_block(off, d));
                off += d;
            }
        }
        Ok(State { algebra: self.source.clone(), density })
    }

    /// Largest deviation from multiplicativity, adjoint preservation and
    /// unitality over products of spanning basis elements.
    pub fn homomorphism_defect(&self) -> f64 {
        let basis = self.source.sa_basis();
        let mut worst = self.apply(&self.source.unit()).unwrap().max_abs_diff(&self.target.unit());
        for x in &basis {
            let px = self.apply(x).unwrap();
            worst = worst.max(self.apply(&x.adjoint()).unwrap().max_abs_diff(&px.adjoint()));
            for y in &basis {
                let lhs = self.apply(&x.mul(y).unwrap()).unwrap();
                let rhs = px.mul(&self.apply(y).unwrap()).unwrap();
                worst = worst.max(lhs.max_abs_diff(&rhs));
            }
        }
        worst
    }

    /// Composition `other ∘ self`.
    pub fn then(&self, other: &Morphism) -> Result<Morphism> {
        if self.target != other.source {
            return Err(Error::structural("morphisms are not composable"));
        }
        let ks = self.source.num_blocks();
        let mut mult = Vec::with_capacity(other.target.num_blocks());
        let mut unitaries = Vec::with_capacity(other.target.num_blocks());
        for t in 0..other.target.num_blocks() {
            let mut row = vec![0; ks];
            let mut inner_layout: Vec<(usize, usize)> = Vec::new();
            let mut pieces: Vec<CMatrix> = Vec::new();
            for m in other.layout(t) {
                pieces.push(self.unitaries[m].clone());
                let mut off = 0;
                for s in self.layout(m) {
                    inner_layout.push((s, off));
                    off += self.source.block_dims()[s];
                }
            }
            let refs: Vec<&CMatrix> = pieces.iter().collect();
            let w = CMatrix::block_diag(&refs);
            // Reorder the concatenated inner layout into canonical s-order.
            let mut order: Vec<usize> = (0..inner_layout.len()).collect();
            order.sort_by_key(|&i| (inner_layout[i].0, i));
            let mut starts = Vec::with_capacity(inner_layout.len());
            let mut acc = 0;
            for (s, _) in &inner_layout {
                starts.push(acc);
                acc += self.source.block_dims()[*s];
            }
            let n = acc;
            let mut perm = CMatrix::zeros(n, n);
            let mut dst = 0;
            for &i in &order {
                let s = inner_layout[i].0;
                row[s] += 1;
                for r in 0..self.source.block_dims()[s] {
                    perm[(starts[i] + r, dst + r)] = c(1.0);
                }
                dst += self.source.block_dims()[s];
            }
            unitaries.push(other.unitaries[t].matmul(&w).matmul(&perm));
            mult.push(row);
        }
        Morphism::new(&self.source, &other.target, mult, unitaries)
    }
}

/// A *-automorphism `α(x)_{perm[i]} = Uᵢ xᵢ Uᵢ*`, which may permute blocks
/// of equal size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Automorphism {
    algebra: Algebra,
    perm: Vec<usize>,
    unitaries: Vec<CMatrix>,
}

impl Automorphism {
    pub fn new(algebra: &Algebra, perm: Vec<usize>, unitaries: Vec<CMatrix>) -> Result<Self> {
        let k = algebra.num_blocks();
        let mut seen = vec![false; k];
        if perm.len() != k {
            return Err(Error::structural("block permutation has the wrong length"));
        }
        for (i, &p) in perm.iter().enumerate() {
            if p >= k || seen[p] || algebra.block_dims()[p] != algebra.block_dims()[i] {
                return Err(Error::structural("invalid block permutation"));
            }
            seen[p] = true;
        }
        check_blocks(algebra, &unitaries)?;
        for u in &unitaries {
            if u.adjoint().matmul(u).sub(&CMatrix::identity(u.rows())).max_abs() > MORPHISM_TOL {
                return Err(Error::structural("automorphism unitary is not unitary"));
            }
        }
        Ok(Automorphism { algebra: algebra.clone(), perm, unitaries })
    }

    /// Conjugation by a unitary of `algebra`.
    pub fn inner(algebra: &Algebra, unitaries: Vec<CMatrix>) -> Result<Self> {
        Self::new(algebra, (0..algebra.num_blocks()).collect(), unitaries)
    }

    pub fn identity(algebra: &Algebra) -> Self {
        Self::inner(algebra, algebra.block_dims().iter().map(|&d| CMatrix::identity(d)).collect()).unwrap()
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn unitaries(&self) -> &[CMatrix] {
        &self.unitaries
    }

    pub fn apply(&self, x: &Element) -> Result<Element> {
        if x.algebra() != &self.algebra {
            return Err(Error::structural("element is not in the automorphism's algebra"));
        }
        let mut blocks = x.blocks().to_vec();
        for (i, u) in self.unitaries.iter().enumerate() {
            blocks[self.perm[i]] = u.matmul(&x.blocks()[i]).matmul(&u.adjoint());
        }
        Ok(Element { algebra: self.algebra.clone(), blocks })
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &Automorphism) -> Automorphism {
        let perm = self.perm.iter().map(|&p| other.perm[p]).collect();
        let unitaries = self.unitaries.iter().zip(&self.perm).map(|(u, &p)| other.unitaries[p].matmul(u)).collect();
        Automorphism { algebra: self.algebra.clone(), perm, unitaries }
    }

    /// Whether both automorphisms act identically on `sa(A)`, up to `tol`.
    pub fn same_action(&self, other: &Automorphism, tol: f64) -> bool {
        self.algebra.sa_basis().iter().all(|e| self.apply(e).unwrap().max_abs_diff(&other.apply(e).unwrap()) <= tol)
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.same_action(&Automorphism::identity(&self.algebra), tol)
    }
}

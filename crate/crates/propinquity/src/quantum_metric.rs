//! Lip-norms, their unit balls, and the Monge–Kantorovich metric on states.

use std::sync::{Arc, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{jordan_lie, Algebra, Automorphism, Element, Morphism, State};
use crate::bridges::{bridge_seminorm, Bridge};
use crate::error::{Error, Result};
use crate::linalg::complement_basis;
use crate::solvers::{
    enum_vertices, solve_lp, solve_spectral, AffineFamily, AffineHermitian, CuttingPlaneOptions, LinearProgram, LpStatus,
    Polytope, Sense, SpectralProgram, VERTEX_DIM_LIMIT,
};
use crate::{CMatrix, C64};

/// Default seed for every randomised routine.
pub const DEFAULT_SEED: u64 = 0x5EED;
/// Tolerance of the kernel rank computation.
pub const KERNEL_TOL: f64 = 1e-9;
/// Slack allowed in the Leibniz inequalities.
pub const LEIBNIZ_TOL: f64 = 1e-9;
/// Maximal width of exact answers.
pub const EXACT_GAP: f64 = 1e-7;
/// Target gap of the iterative solvers.
pub const ITERATIVE_GAP: f64 = 1e-4;
/// Iteration cap of the iterative solvers.
pub const ITERATIVE_CAP: usize = 10_000;
/// Pure states sampled for noncommutative diameters.
pub const DIAMETER_SAMPLES: usize = 256;
/// Slack allowed in the triangle inequality of a finite metric.
pub const TRIANGLE_TOL: f64 = 1e-12;

pub(crate) fn iterative_options() -> CuttingPlaneOptions<f64> {
    CuttingPlaneOptions { gap_tol: ITERATIVE_GAP, max_iter: ITERATIVE_CAP, ..Default::default() }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteMetricSpace {
    dist: Vec<Vec<f64>>,
}

impl FiniteMetricSpace {
    pub fn new(dist: Vec<Vec<f64>>) -> Result<Self> {
        let n = dist.len();
        if n == 0 {
            return Err(Error::structural("a metric space needs at least one point"));
        }
        let scale = dist.iter().flatten().fold(0.0_f64, |m, &x| m.max(x.abs()));
        for (i, row) in dist.iter().enumerate() {
            if row.len() != n {
                return Err(Error::structural("distance matrix is not square"));
            }
            if row[i] != 0.0 {
                return Err(Error::domain(format!("d({i},{i}) ≠ 0")));
            }
            for j in 0..n {
                if !row[j].is_finite() || row[j] != dist[j][i] {
                    return Err(Error::domain(format!("d({i},{j}) is not symmetric and finite")));
                }
                if i != j && row[j] <= 0.0 {
                    return Err(Error::domain(format!("d({i},{j}) must be positive")));
                }
                for k in 0..n {
                    if row[k] > row[j] + dist[j][k] + TRIANGLE_TOL * scale {
                        return Err(Error::domain(format!("triangle inequality fails at ({i},{j},{k})")));
                    }
                }
            }
        }
        Ok(FiniteMetricSpace { dist })
    }

    pub fn single_point() -> Self {
        FiniteMetricSpace { dist: vec![vec![0.0]] }
    }

    /// Two points at distance `d`.
    pub fn two_point(d: f64) -> Result<Self> {
        Self::new(vec![vec![0.0, d], vec![d, 0.0]])
    }

    /// Shortest-path closure of random dyadic edge weights in `[1/4, 2]`.
    ///
    /// Dyadic weights keep every path sum exact, so the triangle inequality
    /// holds without rounding slack.
    pub fn random<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut d = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let w = rng.gen_range(16..=128) as f64 / 64.0;
                d[i][j] = w;
                d[j][i] = w;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = d[i][k] + d[k][j];
                    if via < d[i][j] {
                        d[i][j] = via;
                    }
                }
            }
        }
        FiniteMetricSpace { dist: d }
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    pub fn dist(&self) -> &[Vec<f64>] {
        &self.dist
    }

    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i][j]
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().flatten().fold(0.0, |m, &x| m.max(x))
    }

    pub fn algebra(&self) -> Algebra {
        Algebra::commutative(self.len()).expect("nonempty space")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum LipKind {
    /// Lipschitz constant for a finite metric.
    FiniteLipschitz(FiniteMetricSpace),
    /// `max_g ‖α_g(a) − a‖ / ℓ(g)` over a finite family of automorphisms.
    ErgodicAction { actions: Vec<Automorphism>, lengths: Vec<f64> },
    /// `max{L_A(a), L_B(b), bn_γ(a, b) / denom}` on `A ⊕ B`.
    DirectSumMax { la: Box<LipNorm>, lb: Box<LipNorm>, bridge: Box<Bridge>, denom: f64 },
    /// `max_c |c · coords(a)|` over linear functionals on `sa(A)`.
    PolytopeCustom { constraints: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LipNorm {
    algebra: Algebra,
    kind: LipKind,
    #[serde(skip)]
    cache: Arc<OnceLock<Geometry>>,
}

impl PartialEq for LipNorm {
    fn eq(&self, other: &Self) -> bool {
        self.algebra == other.algebra && self.kind == other.kind
    }
}

impl LipNorm {
    fn build(algebra: Algebra, kind: LipKind) -> Self {
        LipNorm { algebra, kind, cache: Arc::new(OnceLock::new()) }
    }

    pub fn finite_lipschitz(space: FiniteMetricSpace) -> Self {
        Self::build(space.algebra(), LipKind::FiniteLipschitz(space))
    }

    pub fn ergodic(algebra: &Algebra, actions: Vec<Automorphism>, lengths: Vec<f64>) -> Result<Self> {
        if actions.len() != lengths.len() {
            return Err(Error::structural("one length per group element is required"));
        }
        if actions.iter().any(|g| g.algebra() != algebra) {
            return Err(Error::structural("automorphism acts on a different algebra"));
        }
        if lengths.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::domain("lengths must be positive and finite"));
        }
        Ok(Self::build(algebra.clone(), LipKind::ErgodicAction { actions, lengths }))
    }

    pub fn polytope(algebra: &Algebra, constraints: Vec<Vec<f64>>) -> Result<Self> {
        if constraints.iter().any(|c| c.len() != algebra.dim() || c.iter().any(|x| !x.is_finite())) {
            return Err(Error::structural("constraint width must equal the dimension of sa(A)"));
        }
        Ok(Self::build(algebra.clone(), LipKind::PolytopeCustom { constraints }))
    }

    pub fn direct_sum_max(la: LipNorm, lb: LipNorm, bridge: Bridge, denom: f64) -> Result<Self> {
        if !(denom > 0.0 && denom.is_finite()) {
            return Err(Error::domain("the denominator must be positive"));
        }
        if bridge.pi_a().source() != la.algebra() || bridge.pi_b().source() != lb.algebra() {
            return Err(Error::structural("bridge endpoints do not match the summands"));
        }
        let algebra = la.algebra().direct_sum(lb.algebra());
        Ok(Self::build(algebra, LipKind::DirectSumMax { la: Box::new(la), lb: Box::new(lb), bridge: Box::new(bridge), denom }))
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn kind(&self) -> &LipKind {
        &self.kind
    }

    pub fn is_polytopal(&self) -> bool {
        self.ball().is_polytopal()
    }

    /// The unit ball description, computed once per Lip-norm.
    pub fn ball(&self) -> &BallRep {
        &self.geometry().rep
    }

    fn geometry(&self) -> &Geometry {
        self.cache.get_or_init(|| Geometry::new(ball_rep(self)))
    }
}

/// A term `‖S(x)‖ ≤ 1` with `S` real-linear in the coordinates of `sa(A)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralTerm {
    /// `coeffs[i][block]` is `S(Eᵢ)` restricted to one block.
    pub coeffs: Vec<Vec<CMatrix>>,
    /// Whether `S` maps self-adjoint elements to self-adjoint elements.
    pub hermitian: bool,
}

impl SpectralTerm {
    fn family(&self) -> AffineFamily<f64> {
        let blocks: Vec<CMatrix> = self.coeffs[0].iter().map(|m| CMatrix::zeros(m.rows(), m.cols())).collect();
        AffineFamily { constant: blocks, coeffs: self.coeffs.clone() }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.family().norm_at(x)
    }

    /// Matrix inequalities equivalent to `‖S(x)‖ ≤ 1`.
    pub fn lmis(&self) -> Vec<AffineHermitian<f64>> {
        let nb = self.coeffs.first().map_or(0, |c| c.len());
        let mut out = Vec::new();
        for b in 0..nb {
            if self.hermitian {
                let n = self.coeffs[0][b].rows();
                for sign in [1.0, -1.0] {
                    out.push(AffineHermitian {
                        constant: CMatrix::identity(n).scale_re(-1.0),
                        coeffs: self.coeffs.iter().map(|c| c[b].scale_re(sign)).collect(),
                    });
                }
            } else {
                let n = self.coeffs[0][b].rows() + self.coeffs[0][b].cols();
                out.push(AffineHermitian {
                    constant: CMatrix::identity(n).scale_re(-1.0),
                    coeffs: self.coeffs.iter().map(|c| c[b].dilation()).collect(),
                });
            }
        }
        out
    }

    /// Every real entry of `S` as a linear functional.
    fn entry_rows(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        let nb = self.coeffs.first().map_or(0, |c| c.len());
        for b in 0..nb {
            let (r, c) = (self.coeffs[0][b].rows(), self.coeffs[0][b].cols());
            for i in 0..r {
                for j in 0..c {
                    out.push(self.coeffs.iter().map(|m| m[b][(i, j)].re).collect());
                    out.push(self.coeffs.iter().map(|m| m[b][(i, j)].im).collect());
                }
            }
        }
        out
    }
}

/// The Lip-ball `{x ∈ sa(A) : |r·x| ≤ 1 for every row, ‖S(x)‖ ≤ 1 for every term}`.
#[derive(Clone, Debug, PartialEq)]
pub struct BallRep {
    pub dim: usize,
    pub rows: Vec<Vec<f64>>,
    pub spectral: Vec<SpectralTerm>,
}

impl BallRep {
    pub fn is_polytopal(&self) -> bool {
        self.spectral.is_empty()
    }

    /// The Lip-norm of the element with coordinates `x`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let r = self.rows.iter().fold(0.0_f64, |m, row| m.max(dot(row, x).abs()));
        self.spectral.iter().fold(r, |m, t| m.max(t.eval(x)))
    }

    pub fn lmis(&self) -> Vec<AffineHermitian<f64>> {
        self.spectral.iter().flat_map(|t| t.lmis()).collect()
    }

    /// All linear functionals whose common kernel is the kernel of the Lip-norm.
    pub fn linear_rows(&self) -> Vec<Vec<f64>> {
        let mut out = self.rows.clone();
        for t in &self.spectral {
            out.extend(t.entry_rows());
        }
        out
    }

    /// `x / max(1, L(x))`.
    pub fn pull_inside(&self, x: &[f64]) -> Vec<f64> {
        let l = self.eval(x);
        if l > 1.0 {
            x.iter().map(|v| v / l).collect()
        } else {
            x.to_vec()
        }
    }

    /// The rows and spectral terms of `terms`, with commutative phase-aligned
    /// spectral terms converted to rows.
    fn push_term(&mut self, term: SpectralTerm) {
        if let Some(rows) = term.family().real_rows() {
            for (r, _) in rows {
                self.push_row(r);
            }
        } else {
            self.spectral.push(term);
        }
    }

    fn push_row(&mut self, mut r: Vec<f64>) {
        let m = r.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if m <= 1e-14 {
            return;
        }
        for x in r.iter_mut() {
            if x.abs() <= 1e-14 * m {
                *x = 0.0;
            }
        }
        let lead = r.iter().copied().find(|x| *x != 0.0).unwrap();
        if lead < 0.0 {
            r.iter_mut().for_each(|x| *x = -*x);
        }
        let dup = self.rows.iter().any(|q| q.iter().zip(&r).all(|(a, b)| (a - b).abs() <= 1e-14 * m));
        if !dup {
            self.rows.push(r);
        }
    }
}

fn ball_rep(l: &LipNorm) -> BallRep {
    let a = &l.algebra;
    let dim = a.dim();
    let mut rep = BallRep { dim, rows: Vec::new(), spectral: Vec::new() };
    match &l.kind {
        LipKind::FiniteLipschitz(space) => {
            for i in 0..space.len() {
                for j in (i + 1)..space.len() {
                    let mut r = vec![0.0; dim];
                    r[i] = 1.0 / space.d(i, j);
                    r[j] = -1.0 / space.d(i, j);
                    rep.push_row(r);
                }
            }
        }
        LipKind::PolytopeCustom { constraints } => {
            for c in constraints {
                rep.push_row(c.clone());
            }
        }
        LipKind::ErgodicAction { actions, lengths } => {
            let basis = a.sa_basis();
            for (g, &len) in actions.iter().zip(lengths) {
                let coeffs: Vec<Vec<CMatrix>> = basis
                    .iter()
                    .map(|e| g.apply(e).unwrap().sub(e).unwrap().scale_re(1.0 / len).into_blocks())
                    .collect();
                rep.push_term(SpectralTerm { coeffs, hermitian: true });
            }
        }
        LipKind::DirectSumMax { la, lb, bridge, denom } => {
            let (ra, rb) = (la.ball(), lb.ball());
            let (da, db) = (ra.dim, rb.dim);
            let widen = |x: &[f64], before: usize, after: usize| {
                let mut v = vec![0.0; before];
                v.extend_from_slice(x);
                v.extend(std::iter::repeat(0.0).take(after));
                v
            };
            for r in &ra.rows {
                rep.push_row(widen(r, 0, db));
            }
            for r in &rb.rows {
                rep.push_row(widen(r, da, 0));
            }
            let zeros_like = |c: &[CMatrix]| c.iter().map(|m| CMatrix::zeros(m.rows(), m.cols())).collect::<Vec<_>>();
            for t in &ra.spectral {
                let z = zeros_like(&t.coeffs[0]);
                let mut coeffs = t.coeffs.clone();
                coeffs.extend(std::iter::repeat(z).take(db));
                rep.spectral.push(SpectralTerm { coeffs, hermitian: t.hermitian });
            }
            for t in &rb.spectral {
                let z = zeros_like(&t.coeffs[0]);
                let mut coeffs: Vec<Vec<CMatrix>> = std::iter::repeat(z).take(da).collect();
                coeffs.extend(t.coeffs.iter().cloned());
                rep.spectral.push(SpectralTerm { coeffs, hermitian: t.hermitian });
            }
            let omega = bridge.pivot();
            let mut coeffs = Vec::with_capacity(da + db);
            for e in la.algebra().sa_basis() {
                let m = bridge.pi_a().apply(&e).unwrap().mul(omega).unwrap();
                coeffs.push(m.scale_re(1.0 / denom).into_blocks());
            }
            for e in lb.algebra().sa_basis() {
                let m = omega.mul(&bridge.pi_b().apply(&e).unwrap()).unwrap();
                coeffs.push(m.scale_re(-1.0 / denom).into_blocks());
            }
            let hermitian = coeffs.iter().flatten().all(|m| m.hermitian_defect() == 0.0);
            rep.push_term(SpectralTerm { coeffs, hermitian });
        }
    }
    rep
}

struct Geometry {
    rep: BallRep,
    kernel: OnceLock<KernelInfo>,
    slice: OnceLock<Result<Slice>>,
    radius: OnceLock<Result<CertifiedValue>>,
    diameter: OnceLock<Result<CertifiedValue>>,
}

impl Geometry {
    fn new(rep: BallRep) -> Self {
        Geometry { rep, kernel: OnceLock::new(), slice: OnceLock::new(), radius: OnceLock::new(), diameter: OnceLock::new() }
    }
}

impl std::fmt::Debug for Geometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Geometry").field("rep", &self.rep).finish_non_exhaustive()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ExactLp,
    VertexEnum,
    Iterative,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ExactLp => "exact-lp",
            Method::VertexEnum => "vertex-enum",
            Method::Iterative => "iterative",
        }
    }

    fn combine(self, other: Method) -> Method {
        use Method::*;
        match (self, other) {
            (Iterative, _) | (_, Iterative) => Iterative,
            (ExactLp, _) | (_, ExactLp) => ExactLp,
            _ => VertexEnum,
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, Method::Iterative)
    }
}

/// A numeric answer with certified bounds `lower ≤ value ≤ upper`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifiedValue {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub method: Method,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caveat: Option<String>,
}

impl CertifiedValue {
    pub fn exact(value: f64, method: Method) -> Self {
        CertifiedValue { value, lower: value, upper: value, method, iterations: 0, caveat: None }
    }

    pub fn zero() -> Self {
        Self::exact(0.0, Method::ExactLp)
    }

    pub fn bounds(lower: f64, upper: f64, value: f64, method: Method, iterations: usize) -> Self {
        let lower = lower.min(value);
        let upper = upper.max(value);
        CertifiedValue { value, lower, upper, method, iterations, caveat: None }
    }

    pub fn with_caveat(mut self, caveat: impl Into<String>) -> Self {
        let c = caveat.into();
        self.caveat = Some(match self.caveat.take() {
            Some(old) if old != c => format!("{old}; {c}"),
            _ => c,
        });
        self
    }

    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }

    fn merge_caveat(a: &Option<String>, b: &Option<String>) -> Option<String> {
        match (a, b) {
            (Some(x), Some(y)) if x != y => Some(format!("{x}; {y}")),
            (Some(x), _) | (None, Some(x)) => Some(x.clone()),
            _ => None,
        }
    }

    /// Component-wise maximum.
    pub fn max(&self, other: &CertifiedValue) -> CertifiedValue {
        CertifiedValue {
            value: self.value.max(other.value),
            lower: self.lower.max(other.lower),
            upper: self.upper.max(other.upper),
            method: self.method.combine(other.method),
            iterations: self.iterations + other.iterations,
            caveat: Self::merge_caveat(&self.caveat, &other.caveat),
        }
    }

    /// Component-wise sum.
    pub fn add(&self, other: &CertifiedValue) -> CertifiedValue {
        CertifiedValue {
            value: self.value + other.value,
            lower: self.lower + other.lower,
            upper: self.upper + other.upper,
            method: self.method.combine(other.method),
            iterations: self.iterations + other.iterations,
            caveat: Self::merge_caveat(&self.caveat, &other.caveat),
        }
    }

    pub fn scale(&self, s: f64) -> CertifiedValue {
        assert!(s >= 0.0);
        CertifiedValue { value: self.value * s, lower: self.lower * s, upper: self.upper * s, ..self.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub observed: f64,
    pub bound: f64,
    #[serde(default)]
    pub informational: bool,
    #[serde(default)]
    pub detail: String,
}

impl Check {
    /// Passes when `observed ≤ bound`.
    pub fn le(name: impl Into<String>, observed: f64, bound: f64) -> Self {
        Check { name: name.into(), passed: observed <= bound, observed, bound, informational: false, detail: String::new() }
    }

    pub fn flag(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), passed, observed: f64::from(u8::from(passed)), bound: 1.0, informational: false, detail: detail.into() }
    }

    pub fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = d.into();
        self
    }

    pub fn informational(mut self) -> Self {
        self.informational = true;
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub title: String,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(title: impl Into<String>) -> Self {
        Report { title: title.into(), checks: Vec::new() }
    }

    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn extend(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || c.informational)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed && !c.informational)
    }

    pub fn find(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Largest observed value among checks whose name starts with `prefix`.
    pub fn worst(&self, prefix: &str) -> f64 {
        self.checks.iter().filter(|c| c.name.starts_with(prefix)).fold(f64::NEG_INFINITY, |m, c| m.max(c.observed))
    }
}

/// The Lip-norm of a self-adjoint element.
pub fn eval_lipnorm(l: &LipNorm, a: &Element) -> Result<f64> {
    if a.algebra() != l.algebra() {
        return Err(Error::structural("element is not in the Lip-norm's algebra"));
    }
    if !a.is_self_adjoint() {
        return Err(Error::domain(format!("element is not self-adjoint (defect {:e})", a.self_adjoint_defect())));
    }
    Ok(eval_unchecked(l, a))
}

pub(crate) fn eval_unchecked(l: &LipNorm, a: &Element) -> f64 {
    match &l.kind {
        LipKind::FiniteLipschitz(space) => {
            let f = a.sa_coords();
            let mut m = 0.0_f64;
            for i in 0..space.len() {
                for j in (i + 1)..space.len() {
                    m = m.max((f[i] - f[j]).abs() / space.d(i, j));
                }
            }
            m
        }
        LipKind::ErgodicAction { actions, lengths } => actions
            .iter()
            .zip(lengths)
            .fold(0.0_f64, |m, (g, &len)| m.max(g.apply(a).unwrap().sub(a).unwrap().op_norm() / len)),
        LipKind::DirectSumMax { la, lb, bridge, denom } => {
            let (x, y) = a.split(la.algebra().num_blocks(), la.algebra(), lb.algebra()).unwrap();
            let bn = bridge_seminorm(bridge, &x, &y).unwrap();
            eval_unchecked(la, &x).max(eval_unchecked(lb, &y)).max(bn / denom)
        }
        LipKind::PolytopeCustom { constraints } => {
            let x = a.sa_coords();
            constraints.iter().fold(0.0_f64, |m, c| m.max(dot(c, &x).abs()))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelInfo {
    pub dimension: usize,
    pub contains_unit: bool,
}

impl KernelInfo {
    pub fn passes(&self) -> bool {
        self.dimension == 1 && self.contains_unit
    }
}

/// Dimension of `{a ∈ sa(A) : L(a) = 0}` and whether it contains the unit.
pub fn kernel_check(l: &LipNorm) -> KernelInfo {
    *l.geometry().kernel.get_or_init(|| {
        let rep = l.ball();
        let rows = rep.linear_rows();
        let rank = crate::linalg::real_rank(&rows, rep.dim, KERNEL_TOL);
        let unit = l.algebra().unit_coords();
        KernelInfo { dimension: rep.dim - rank, contains_unit: rep.eval(&unit) <= KERNEL_TOL }
    })
}

fn require_kernel(l: &LipNorm) -> Result<()> {
    let k = kernel_check(l);
    if k.passes() {
        Ok(())
    } else {
        Err(Error::domain(format!("Lip-norm kernel has dimension {} (unit inside: {})", k.dimension, k.contains_unit)))
    }
}

/// Vertices of `{a ∈ sa(A) : L(a) ≤ 1, φ(a) = 0}` in full coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slice {
    pub basepoint: Vec<f64>,
    pub chart: Vec<Vec<f64>>,
    pub vertices: Vec<Vec<f64>>,
}

impl Slice {
    pub fn elements(&self, algebra: &Algebra) -> Vec<Element> {
        self.vertices.iter().map(|v| algebra.from_sa_coords(v).unwrap()).collect()
    }
}

/// The functional of the pure state at the first basis vector of block 0.
pub(crate) fn canonical_basepoint(a: &Algebra) -> Vec<f64> {
    let mut w = vec![0.0; a.dim()];
    w[0] = 1.0;
    w
}

fn slice_from(rep: &BallRep, basepoint: Vec<f64>, limit: usize) -> Result<Slice> {
    let chart = complement_basis(&basepoint);
    let k = chart.len();
    let vertices = if k == 0 {
        vec![vec![0.0; rep.dim]]
    } else {
        let mut p = Polytope::new(k);
        for r in &rep.rows {
            p.push_abs(chart.iter().map(|c| dot(c, r)).collect(), 1.0);
        }
        enum_vertices(&p, limit)?
            .into_iter()
            .map(|y| (0..rep.dim).map(|i| chart.iter().zip(&y).map(|(c, yk)| c[i] * yk).sum()).collect())
            .collect()
    };
    Ok(Slice { basepoint, chart, vertices })
}

/// Vertex set of the Lip-ball slice through `basepoint`.
pub fn lip_ball_slice(l: &LipNorm, basepoint: &State) -> Result<Slice> {
    lip_ball_slice_with_limit(l, basepoint, VERTEX_DIM_LIMIT)
}

pub fn lip_ball_slice_with_limit(l: &LipNorm, basepoint: &State, limit: usize) -> Result<Slice> {
    if basepoint.algebra() != l.algebra() {
        return Err(Error::structural("basepoint state is on a different algebra"));
    }
    let rep = l.ball();
    if !rep.is_polytopal() {
        return Err(Error::Unsupported("the Lip-ball is not a polytope".into()));
    }
    require_kernel(l)?;
    slice_from(rep, basepoint.functional(), limit)
}

/// The cached slice through the canonical basepoint, when it is enumerable.
pub(crate) fn canonical_slice(l: &LipNorm) -> Result<&Slice> {
    let g = l.geometry();
    g.slice
        .get_or_init(|| {
            if !g.rep.is_polytopal() {
                return Err(Error::Unsupported("the Lip-ball is not a polytope".into()));
            }
            require_kernel(l)?;
            slice_from(&g.rep, canonical_basepoint(l.algebra()), VERTEX_DIM_LIMIT)
        })
        .as_ref()
        .map_err(|e| e.clone())
}

/// `sup { w·x : L(x) ≤ 1, x₀ = 0 }` with a maximiser.
///
/// For `w` vanishing on the unit this is the supremum over the whole Lip-ball.
pub(crate) fn maximize_linear(l: &LipNorm, w: &[f64]) -> Result<(CertifiedValue, Vec<f64>)> {
    require_kernel(l)?;
    let rep = l.ball();
    let dim = rep.dim;
    if let Ok(slice) = canonical_slice(l) {
        let (mut best, mut arg) = (f64::NEG_INFINITY, vec![0.0; dim]);
        for v in &slice.vertices {
            let val = dot(w, v);
            if val > best {
                best = val;
                arg = v.clone();
            }
        }
        return Ok((CertifiedValue::exact(best, Method::VertexEnum), arg));
    }
    let base = canonical_basepoint(l.algebra());
    if rep.is_polytopal() {
        let mut lp = LinearProgram::free(w.to_vec(), true);
        for r in &rep.rows {
            lp.constrain(r.clone(), Sense::Le, 1.0);
            lp.constrain(r.iter().map(|x| -x).collect(), Sense::Le, 1.0);
        }
        lp.constrain(base, Sense::Eq, 0.0);
        let sol = solve_lp(&lp)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::domain(format!("Lip-ball slice LP is {:?}", sol.status)));
        }
        let v = CertifiedValue::bounds(sol.objective.min(sol.dual_objective), sol.objective.max(sol.dual_objective), sol.objective, Method::ExactLp, sol.pivots);
        return Ok((v, sol.x));
    }
    let mut p = SpectralProgram::new(w.iter().map(|x| -x).collect());
    for r in &rep.rows {
        p.le.push((r.clone(), 1.0));
        p.le.push((r.iter().map(|x| -x).collect(), 1.0));
    }
    p.eq.push((base, 0.0));
    p.lmis = rep.lmis();
    let repair = |x: &[f64]| {
        let y = rep.pull_inside(x);
        let v = -dot(w, &y);
        Some((y, v))
    };
    let r = solve_spectral(&p, &iterative_options(), &repair)?;
    let mut v = CertifiedValue::bounds(-r.upper, -r.lower, -r.upper, Method::Iterative, r.iterations);
    if !r.converged {
        v = v.with_caveat("iteration cap reached before the target gap");
    }
    Ok((v, r.x))
}

/// The Monge–Kantorovich distance `sup { |φ(a) − ψ(a)| : L(a) ≤ 1 }`.
pub fn mk_distance(l: &LipNorm, phi: &State, psi: &State) -> Result<CertifiedValue> {
    if phi.algebra() != l.algebra() || psi.algebra() != l.algebra() {
        return Err(Error::structural("states are not on the Lip-norm's algebra"));
    }
    require_kernel(l)?;
    let w: Vec<f64> = phi.functional().iter().zip(psi.functional()).map(|(a, b)| a - b).collect();
    if w.iter().all(|x| *x == 0.0) {
        return Ok(CertifiedValue::zero());
    }
    Ok(maximize_linear(l, &w)?.0)
}

/// The diameter of the state space for the Monge–Kantorovich metric.
pub fn state_diameter(l: &LipNorm) -> Result<CertifiedValue> {
    l.geometry().diameter.get_or_init(|| compute_diameter(l, DEFAULT_SEED, DIAMETER_SAMPLES)).clone()
}

/// [`state_diameter`] with an explicit seed and sample count for the
/// noncommutative lower bound.
pub fn state_diameter_seeded(l: &LipNorm, seed: u64, samples: usize) -> Result<CertifiedValue> {
    compute_diameter(l, seed, samples)
}

fn compute_diameter(l: &LipNorm, seed: u64, samples: usize) -> Result<CertifiedValue> {
    require_kernel(l)?;
    let a = l.algebra();
    if a.dim() == 1 {
        return Ok(CertifiedValue::zero());
    }
    if let Ok(slice) = canonical_slice(l) {
        let best = slice.elements(a).iter().fold(0.0_f64, |m, x| m.max(x.spread()));
        return Ok(CertifiedValue::exact(best, Method::VertexEnum));
    }
    if a.is_commutative() {
        let n = a.num_blocks();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
        let vals: Vec<Result<CertifiedValue>> = pairs
            .par_iter()
            .map(|&(i, j)| mk_distance(l, &State::dirac(a, i)?, &State::dirac(a, j)?))
            .collect();
        let mut out = CertifiedValue::zero();
        for v in vals {
            out = out.max(&v?);
        }
        return Ok(out);
    }
    noncommutative_diameter(l, seed, samples)
}

fn noncommutative_diameter(l: &LipNorm, seed: u64, samples: usize) -> Result<CertifiedValue> {
    let a = l.algebra();
    let rep = l.ball();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scored: Vec<(f64, Element)> = Vec::with_capacity(samples);
    for _ in 0..samples {
        let x = a.random_self_adjoint(&mut rng);
        let lx = rep.eval(&x.sa_coords());
        if lx > 1e-12 {
            let y = x.scale_re(1.0 / lx);
            scored.push((y.spread(), y));
        }
    }
    scored.sort_by(|p, q| q.0.total_cmp(&p.0));
    let mut lower = scored.first().map_or(0.0, |s| s.0);
    let mut iterations = 0;
    for (_, start) in scored.into_iter().take(2) {
        let mut x = start;
        for _ in 0..2 {
            let (hi, lo) = extreme_vectors(&x);
            let phi = State::vector(a, hi.0, &hi.1)?;
            let psi = State::vector(a, lo.0, &lo.1)?;
            let w: Vec<f64> = phi.functional().iter().zip(psi.functional()).map(|(p, q)| p - q).collect();
            let (v, arg) = maximize_linear(l, &w)?;
            iterations += v.iterations;
            let y = a.from_sa_coords(&rep.pull_inside(&arg))?;
            let s = y.spread();
            if s <= lower + 1e-9 {
                lower = lower.max(s);
                break;
            }
            lower = s;
            x = y;
        }
    }
    let radius = slice_radius(l)?;
    let upper = 2.0 * radius.upper;
    Ok(CertifiedValue::bounds(lower, upper, lower, Method::Iterative, iterations + radius.iterations)
        .with_caveat("lower bound from sampled pure states; upper bound is twice the certified slice radius"))
}

/// Top and bottom eigenvectors of a self-adjoint element, with their blocks.
#[allow(clippy::type_complexity)]
pub(crate) fn extreme_vectors(x: &Element) -> ((usize, Vec<C64>), (usize, Vec<C64>)) {
    let mut hi = (f64::NEG_INFINITY, 0, Vec::new());
    let mut lo = (f64::INFINITY, 0, Vec::new());
    for (b, m) in x.blocks().iter().enumerate() {
        let (ev, vecs) = m.eigh();
        let n = ev.len();
        if ev[n - 1] > hi.0 {
            hi = (ev[n - 1], b, vecs.column(n - 1));
        }
        if ev[0] < lo.0 {
            lo = (ev[0], b, vecs.column(0));
        }
    }
    ((hi.1, hi.2), (lo.1, lo.2))
}

/// A certified bound on `sup { ‖a − τ(a)1‖ : L(a) ≤ 1 }` for a basepoint `τ`.
pub fn slice_radius(l: &LipNorm) -> Result<CertifiedValue> {
    l.geometry().radius.get_or_init(|| compute_radius(l)).clone()
}

fn compute_radius(l: &LipNorm) -> Result<CertifiedValue> {
    require_kernel(l)?;
    let a = l.algebra();
    let rep = l.ball();
    let dim = rep.dim;
    if dim == 1 {
        return Ok(CertifiedValue::zero());
    }
    if let Ok(slice) = canonical_slice(l) {
        let r = slice.elements(a).iter().fold(0.0_f64, |m, x| m.max(x.op_norm()));
        return Ok(CertifiedValue::exact(r, Method::VertexEnum));
    }
    if let LipKind::ErgodicAction { actions, lengths } = &l.kind {
        if let Some(bound) = group_average_bound(a, actions, lengths) {
            let lower = sampled_radius_lower(l, 64);
            return Ok(CertifiedValue::bounds(lower, bound, bound, Method::Iterative, 0)
                .with_caveat("group-average bound around the invariant state"));
        }
    }
    // Coordinate maxima bound every block's Frobenius norm.
    let mut coord_max = vec![0.0; dim];
    let mut lower = 0.0_f64;
    let mut method = Method::ExactLp;
    let mut iterations = 0;
    for i in 0..dim {
        let mut w = vec![0.0; dim];
        w[i] = 1.0;
        let (v, arg) = maximize_linear(l, &w)?;
        coord_max[i] = v.upper.abs();
        lower = lower.max(a.from_sa_coords(&rep.pull_inside(&arg))?.op_norm());
        method = method.combine(v.method);
        iterations += v.iterations;
    }
    let mut upper = 0.0_f64;
    let offsets = a.sa_offsets();
    for (b, &d) in a.block_dims().iter().enumerate() {
        let o = offsets[b];
        let diag: f64 = (0..d).map(|k| coord_max[o + k].powi(2)).sum();
        let off: f64 = (o + d..o + d * d).map(|k| 2.0 * coord_max[k].powi(2)).sum();
        let bound = if a.is_commutative() { coord_max[o] } else { (diag + off).sqrt() };
        upper = upper.max(bound);
    }
    let mut v = CertifiedValue::bounds(lower, upper, upper, method, iterations);
    if !a.is_commutative() {
        v = v.with_caveat("Frobenius bound from coordinate maxima");
        v.method = Method::Iterative;
    }
    Ok(v)
}

/// `mean_{g ∈ G} ℓ(g)` when the actions together with the identity form a group.
fn group_average_bound(a: &Algebra, actions: &[Automorphism], lengths: &[f64]) -> Option<f64> {
    let tol = 1e-9;
    let mut elems: Vec<(Automorphism, f64)> = vec![(Automorphism::identity(a), 0.0)];
    for (g, &len) in actions.iter().zip(lengths) {
        match elems.iter_mut().find(|(h, _)| h.same_action(g, tol)) {
            Some(e) => e.1 = e.1.min(len),
            None => elems.push((g.clone(), len)),
        }
    }
    for (g, _) in &elems {
        for (h, _) in &elems {
            let gh = g.then(h);
            if !elems.iter().any(|(k, _)| k.same_action(&gh, tol)) {
                return None;
            }
        }
    }
    Some(elems.iter().map(|e| e.1).sum::<f64>() / elems.len() as f64)
}

fn sampled_radius_lower(l: &LipNorm, samples: usize) -> f64 {
    let a = l.algebra();
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let mut best = 0.0_f64;
    for _ in 0..samples {
        let x = a.random_self_adjoint(&mut rng);
        let lx = l.ball().eval(&x.sa_coords());
        if lx > 1e-12 {
            best = best.max(x.spread() / (2.0 * lx));
        }
    }
    best
}

/// Kernel condition and boundedness of the Lip-ball.
pub fn check_lipnorm(l: &LipNorm) -> Report {
    let mut r = Report::new("lipnorm");
    let k = kernel_check(l);
    let mut kc = Check::flag("kernel", k.passes(), format!("kernel dimension {}, contains unit: {}", k.dimension, k.contains_unit));
    kc.observed = k.dimension as f64;
    r.push(kc);
    if k.passes() {
        match slice_radius(l) {
            Ok(v) => r.push(Check::le("radius", v.upper, f64::INFINITY).detail(format!("{} bound", v.method.as_str()))),
            Err(e) => r.push(Check::flag("radius", false, e.to_string())),
        }
    }
    r
}

/// Seeded check of the Leibniz inequalities for Jordan and Lie products, with
/// the strong Leibniz inequality for inverses reported as information.
pub fn check_leibniz(l: &LipNorm, samples: usize, seed: u64) -> Report {
    let a = l.algebra();
    let results: Vec<Vec<Check>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let x = a.random_self_adjoint(&mut rng);
            let y = a.random_self_adjoint(&mut rng);
            leibniz_sample(l, &x, &y, i)
        })
        .collect();
    let mut r = Report::new("leibniz");
    for c in results.into_iter().flatten() {
        r.push(c);
    }
    r
}

fn leibniz_sample(l: &LipNorm, x: &Element, y: &Element, i: usize) -> Vec<Check> {
    let (lx, ly) = (eval_unchecked(l, x), eval_unchecked(l, y));
    let bound = x.op_norm() * ly + y.op_norm() * lx + LEIBNIZ_TOL;
    let (j, k) = jordan_lie(x, y).unwrap();
    let witness = || format!("a = {:?}, b = {:?}", x.sa_coords(), y.sa_coords());
    let mut out = Vec::with_capacity(3);
    let lj = eval_unchecked(l, &j.hermitian_part());
    let lk = eval_unchecked(l, &k.hermitian_part());
    let mut cj = Check::le(format!("jordan[{i}]"), lj, bound);
    let mut ck = Check::le(format!("lie[{i}]"), lk, bound);
    if !cj.passed {
        cj.detail = witness();
    }
    if !ck.passed {
        ck.detail = witness();
    }
    out.push(cj);
    out.push(ck);
    if let Some(inv) = x.inverse() {
        let n = inv.op_norm();
        out.push(Check::le(format!("strong[{i}]"), eval_unchecked(l, &inv.hermitian_part()), n * n * lx + LEIBNIZ_TOL).informational());
    }
    out
}

/// Checks that `π` is a *-isomorphism with `L_B ∘ π = L_A`.
pub fn check_isometric_isomorphism(m: &Morphism, la: &LipNorm, lb: &LipNorm, samples: usize, seed: u64) -> Report {
    let mut r = Report::new("isometric-isomorphism");
    let bijective = m.source() == la.algebra() && m.target() == lb.algebra() && m.source().dim() == m.target().dim() && m.is_injective();
    r.push(Check::flag("bijective", bijective, "multiplicities and dimensions"));
    if !bijective {
        return r;
    }
    r.push(Check::le("homomorphism", m.homomorphism_defect(), 1e-10));
    let a = la.algebra();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut elems = a.sa_basis();
    elems.extend((0..samples).map(|_| a.random_self_adjoint(&mut rng)));
    let mut worst = 0.0_f64;
    for x in &elems {
        let lhs = eval_unchecked(la, x);
        let rhs = eval_unchecked(lb, &m.apply(x).unwrap());
        worst = worst.max((lhs - rhs).abs() / lhs.max(1.0));
    }
    r.push(Check::le("lipnorm-preserved", worst, 1e-9));
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_point_line() -> FiniteMetricSpace {
        FiniteMetricSpace::new(vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]]).unwrap()
    }

    fn pairwise_slope(space: &FiniteMetricSpace, f: &[f64]) -> f64 {
        let mut m = 0.0_f64;
        for i in 0..f.len() {
            for j in 0..f.len() {
                if i != j {
                    m = m.max((f[i] - f[j]).abs() / space.d(i, j));
                }
            }
        }
        m
    }

    #[test]
    fn finite_lipschitz_evaluation() {
        let two = LipNorm::finite_lipschitz(FiniteMetricSpace::two_point(1.0).unwrap());
        let f = two.algebra().function(&[0.0, 1.0]).unwrap();
        assert_eq!(eval_lipnorm(&two, &f).unwrap(), 1.0);
        let three = three_point_line();
        let l = LipNorm::finite_lipschitz(three.clone());
        let g = l.algebra().function(&[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(eval_lipnorm(&l, &g).unwrap(), pairwise_slope(&three, &[0.0, 1.0, 2.0]));
        assert_eq!(eval_lipnorm(&l, &l.algebra().unit().scale_re(3.5)).unwrap(), 0.0);
    }

    #[test]
    fn non_self_adjoint_input_is_a_domain_error() {
        let a = Algebra::full_matrix(2).unwrap();
        let l = LipNorm::polytope(&a, vec![vec![1.0, -1.0, 0.0, 0.0]]).unwrap();
        let x = Element::new(&a, vec![CMatrix::from_fn(2, 2, |i, j| C64::new((i * 2 + j) as f64, 0.0))]).unwrap();
        assert!(matches!(eval_lipnorm(&l, &x), Err(Error::Domain(_))));
    }

    #[test]
    fn metric_validation() {
        assert!(FiniteMetricSpace::new(vec![vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 1.0], vec![3.0, 1.0, 0.0]]).is_err());
        assert!(FiniteMetricSpace::new(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 1..7 {
            let s = FiniteMetricSpace::random(n, &mut rng);
            assert!(FiniteMetricSpace::new(s.dist().to_vec()).is_ok());
        }
    }

    #[test]
    fn two_point_slice_vertices() {
        let l = LipNorm::finite_lipschitz(FiniteMetricSpace::two_point(1.0).unwrap());
        let s = lip_ball_slice(&l, &State::dirac(l.algebra(), 0).unwrap()).unwrap();
        assert_eq!(s.vertices, vec![vec![0.0, -1.0], vec![0.0, 1.0]]);
        let one = LipNorm::finite_lipschitz(FiniteMetricSpace::single_point());
        let s = lip_ball_slice(&one, &State::dirac(one.algebra(), 0).unwrap()).unwrap();
        assert_eq!(s.vertices, vec![vec![0.0]]);
    }

    #[test]
    fn equilateral_slice_is_a_hexagon() {
        let d = vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
        let l = LipNorm::finite_lipschitz(FiniteMetricSpace::new(d).unwrap());
        let s = lip_ball_slice(&l, &State::dirac(l.algebra(), 0).unwrap()).unwrap();
        assert_eq!(s.vertices.len(), 6);
        // Oracle: every vertex has f_0 = 0 and makes two independent constraints tight.
        for v in &s.vertices {
            assert_eq!(v[0], 0.0);
            let tight = [v[1] - v[0], v[2] - v[0], v[2] - v[1]].iter().filter(|x| (x.abs() - 1.0).abs() < 1e-9).count();
            assert!(tight >= 2, "{v:?}");
            assert!(eval_lipnorm(&l, &l.algebra().function(v).unwrap()).unwrap() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn mk_on_two_points() {
        let l = LipNorm::finite_lipschitz(FiniteMetricSpace::two_point(1.0).unwrap());
        let a = l.algebra();
        let p = State::dirac(a, 0).unwrap();
        let q = State::dirac(a, 1).unwrap();
        assert_eq!(mk_distance(&l, &p, &p).unwrap().value, 0.0);
        assert!((mk_distance(&l, &p, &q).unwrap().value - 1.0).abs() < 1e-12);
        let half = State::probability(a, &[0.5, 0.5]).unwrap();
        assert!((mk_distance(&l, &half, &p).unwrap().value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn diameters() {
        let one = LipNorm::finite_lipschitz(FiniteMetricSpace::single_point());
        assert_eq!(state_diameter(&one).unwrap().value, 0.0);
        let two = LipNorm::finite_lipschitz(FiniteMetricSpace::two_point(2.0).unwrap());
        assert!((state_diameter(&two).unwrap().value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn large_spaces_use_the_lp_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = FiniteMetricSpace::random(10, &mut rng);
        let l = LipNorm::finite_lipschitz(s.clone());
        let a = l.algebra();
        let v = mk_distance(&l, &State::dirac(a, 2).unwrap(), &State::dirac(a, 7).unwrap()).unwrap();
        assert_eq!(v.method, Method::ExactLp);
        assert!((v.value - s.d(2, 7)).abs() < 1e-9);
        assert!((state_diameter(&l).unwrap().value - s.diameter()).abs() < 1e-9);
    }

    #[test]
    fn trivial_action_fails_the_kernel_check() {
        let a = Algebra::full_matrix(2).unwrap();
        let l = LipNorm::ergodic(&a, vec![Automorphism::identity(&a)], vec![1.0]).unwrap();
        let r = check_lipnorm(&l);
        assert!(!r.passed());
        assert_eq!(kernel_check(&l).dimension, 4);
        assert!(matches!(mk_distance(&l, &State::normalized_trace(&a), &State::normalized_trace(&a)), Err(Error::Domain(_))));
    }

    #[test]
    fn non_polytopal_slice_is_unsupported() {
        let a = Algebra::full_matrix(2).unwrap();
        let z = CMatrix::from_real_diag(&[1.0, -1.0]);
        let l = LipNorm::ergodic(&a, vec![Automorphism::inner(&a, vec![z]).unwrap()], vec![1.0]).unwrap();
        assert!(matches!(lip_ball_slice(&l, &State::normalized_trace(&a)), Err(Error::Unsupported(_))));
    }

    #[test]
    fn finite_lipschitz_is_leibniz() {
        let l = LipNorm::finite_lipschitz(three_point_line());
        let r = check_leibniz(&l, 50, 7);
        assert!(r.passed());
    }

    #[test]
    fn skewed_polytope_violates_leibniz() {
        let a = Algebra::commutative(3).unwrap();
        let l = LipNorm::polytope(&a, vec![vec![1.0, -1.0, 0.0], vec![100.0, 100.0, -200.0]]).unwrap();
        assert!(kernel_check(&l).passes());
        let r = check_leibniz(&l, 200, DEFAULT_SEED);
        let bad = r.failures().next().expect("a violation");
        assert!(!bad.detail.is_empty());
    }

    #[test]
    fn ball_rep_matches_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let l = LipNorm::finite_lipschitz(FiniteMetricSpace::random(5, &mut rng));
        for _ in 0..20 {
            let x = l.algebra().random_self_adjoint(&mut rng);
            assert!((l.ball().eval(&x.sa_coords()) - eval_lipnorm(&l, &x).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn certified_value_combinators() {
        let a = CertifiedValue::bounds(1.0, 2.0, 1.5, Method::Iterative, 3);
        let b = CertifiedValue::exact(1.75, Method::ExactLp);
        let m = a.max(&b);
        assert_eq!((m.lower, m.value, m.upper, m.method), (1.75, 1.75, 2.0, Method::Iterative));
        let s = a.add(&b);
        assert_eq!((s.lower, s.value, s.upper), (2.75, 3.25, 3.75));
    }
}

//! Treks, itineraries, target sets and registry-based propinquity bounds.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{jordan_lie, Element};
use crate::bridges::{bridge_length, bridge_seminorm, height, inverse_bridge, reach, reach_argmin, Bridge};
use crate::error::{Error, Result};
use crate::quantum_metric::{eval_lipnorm, eval_unchecked, CertifiedValue, Check, LipNorm, Report};

/// Lengths are rounded outward to multiples of this step so that sums are exact.
pub const LENGTH_GRID: f64 = 1.0 / (1u64 << 40) as f64;
/// Slack in target-set membership.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
/// Tolerance of the target-set inequalities when every leg is solved exactly.
pub const TARGET_TOL_EXACT: f64 = 1e-6;
/// Tolerance of the target-set inequalities when some leg is iterative.
pub const TARGET_TOL_ITERATIVE: f64 = 1e-3;

/// Rounds `value` to the nearest grid point, `lower` down and `upper` up.
pub fn snap(v: &CertifiedValue) -> CertifiedValue {
    let g = |x: f64, f: fn(f64) -> f64| f(x / LENGTH_GRID) * LENGTH_GRID;
    CertifiedValue {
        value: g(v.value, f64::round),
        lower: g(v.lower, f64::floor),
        upper: g(v.upper, f64::ceil),
        ..v.clone()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub from: LipNorm,
    pub bridge: Bridge,
    pub to: LipNorm,
}

impl Leg {
    pub fn new(from: LipNorm, bridge: Bridge, to: LipNorm) -> Result<Self> {
        if bridge.domain() != from.algebra() || bridge.codomain() != to.algebra() {
            return Err(Error::structural("bridge endpoints do not match the leg's spaces"));
        }
        Ok(Leg { from, bridge, to })
    }

    pub fn inverse(&self) -> Leg {
        Leg { from: self.to.clone(), bridge: inverse_bridge(&self.bridge), to: self.from.clone() }
    }

    pub fn length(&self) -> Result<CertifiedValue> {
        Ok(snap(&bridge_length(&self.bridge, &self.from, &self.to)?))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trek {
    legs: Vec<Leg>,
}

impl Trek {
    pub fn new(legs: Vec<Leg>) -> Result<Self> {
        if legs.is_empty() {
            return Err(Error::structural("a trek needs at least one leg"));
        }
        for w in legs.windows(2) {
            if w[0].to != w[1].from {
                return Err(Error::structural("consecutive legs must share their intermediate space"));
            }
        }
        Ok(Trek { legs })
    }

    pub fn single(from: LipNorm, bridge: Bridge, to: LipNorm) -> Result<Self> {
        Self::new(vec![Leg::new(from, bridge, to)?])
    }

    /// The one-leg trek along the identity bridge.
    pub fn identity(l: &LipNorm) -> Self {
        Trek { legs: vec![Leg { from: l.clone(), bridge: Bridge::identity(l.algebra()), to: l.clone() }] }
    }

    pub fn legs(&self) -> &[Leg] {
        &self.legs
    }

    pub fn start(&self) -> &LipNorm {
        &self.legs[0].from
    }

    pub fn end(&self) -> &LipNorm {
        &self.legs[self.legs.len() - 1].to
    }
}

/// Sum of the bridge lengths, each snapped to the length grid.
pub fn trek_length(t: &Trek) -> Result<CertifiedValue> {
    let lens: Vec<Result<CertifiedValue>> = t.legs.par_iter().map(Leg::length).collect();
    let mut total: Option<CertifiedValue> = None;
    for l in lens {
        let l = l?;
        total = Some(match total {
            None => l,
            Some(s) => s.add(&l),
        });
    }
    Ok(total.expect("nonempty trek"))
}

/// `Γ₁ ⋆ Γ₂`.
pub fn compose(a: &Trek, b: &Trek) -> Result<Trek> {
    if a.end() != b.start() {
        return Err(Error::structural("the first trek must end where the second starts"));
    }
    Ok(Trek { legs: a.legs.iter().chain(&b.legs).cloned().collect() })
}

/// Reversed legs along inverse bridges.
pub fn invert(t: &Trek) -> Trek {
    Trek { legs: t.legs.iter().rev().map(Leg::inverse).collect() }
}

/// `η_1, …, η_{n+1}` with `η_j ∈ sa(A_j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Itinerary {
    pub elements: Vec<Element>,
}

impl Itinerary {
    pub fn new(t: &Trek, elements: Vec<Element>) -> Result<Self> {
        if elements.len() != t.legs.len() + 1 {
            return Err(Error::structural("an itinerary has one more element than the trek has legs"));
        }
        for (j, e) in elements.iter().enumerate() {
            let alg = if j == 0 { t.start().algebra() } else { t.legs[j - 1].to.algebra() };
            if e.algebra() != alg {
                return Err(Error::structural(format!("itinerary element {j} lies in the wrong algebra")));
            }
            if !e.is_self_adjoint() {
                return Err(Error::domain(format!("itinerary element {j} is not self-adjoint")));
            }
        }
        Ok(Itinerary { elements })
    }

    pub fn start(&self) -> &Element {
        &self.elements[0]
    }

    pub fn end(&self) -> &Element {
        &self.elements[self.elements.len() - 1]
    }

    /// Largest excess over the `r`-itinerary conditions with reaches `rho`.
    pub fn excess(&self, t: &Trek, r: f64, rho: &[f64]) -> f64 {
        let mut worst = eval_unchecked(t.start(), self.start()) - r;
        for (j, leg) in t.legs.iter().enumerate() {
            let (x, y) = (&self.elements[j], &self.elements[j + 1]);
            worst = worst.max(eval_unchecked(&leg.to, y) - r);
            worst = worst.max(bridge_seminorm(&leg.bridge, x, y).unwrap() - r * rho[j]);
        }
        worst
    }

    fn combine(&self, other: &Itinerary, f: impl Fn(&Element, &Element) -> Element) -> Itinerary {
        Itinerary { elements: self.elements.iter().zip(&other.elements).map(|(x, y)| f(x, y)).collect() }
    }
}

/// Whether `b` lies in the `r`-target set of `a`, with reach `rho` when given.
pub fn target_set_membership(g: &Bridge, la: &LipNorm, lb: &LipNorm, a: &Element, r: f64, b: &Element, rho: Option<f64>) -> Result<bool> {
    let lip_a = eval_lipnorm(la, a)?;
    if lip_a > r + MEMBERSHIP_TOL {
        return Err(Error::domain(format!("L_A(a) = {lip_a} exceeds r = {r}")));
    }
    let rho = match rho {
        Some(x) => x,
        None => reach(g, la, lb)?.upper,
    };
    Ok(eval_lipnorm(lb, b)? <= r + MEMBERSHIP_TOL && bridge_seminorm(g, a, b)? <= r * rho + MEMBERSHIP_TOL)
}

/// An `r`-itinerary from `a` that takes, at every leg, the minimiser of the
/// bridge seminorm over the Lip-ball, scaled by `r`.
pub fn greedy_itinerary(t: &Trek, a: &Element, r: f64) -> Result<Itinerary> {
    let mut out = vec![a.clone()];
    for leg in &t.legs {
        let x = out.last().unwrap();
        let next = if r <= 0.0 {
            let c = x.sa_coords()[0];
            leg.to.algebra().unit().scale_re(c)
        } else {
            reach_argmin(&leg.bridge, &leg.to, &x.scale_re(1.0 / r))?.1.scale_re(r)
        };
        out.push(next);
    }
    Ok(Itinerary { elements: out })
}

/// Moves each step of a greedy itinerary towards random Lip-ball points
/// while staying in the target sets, giving a second member of `T_Γ(a|r)`.
fn perturbed_itinerary<R: Rng + ?Sized>(t: &Trek, a: &Element, r: f64, rho: &[f64], rng: &mut R) -> Result<Itinerary> {
    let mut out = vec![a.clone()];
    for (j, leg) in t.legs.iter().enumerate() {
        let x = out.last().unwrap().clone();
        let base = if r <= 0.0 {
            leg.to.algebra().unit().scale_re(x.sa_coords()[0])
        } else {
            reach_argmin(&leg.bridge, &leg.to, &x.scale_re(1.0 / r))?.1.scale_re(r)
        };
        let c = leg.to.algebra().random_self_adjoint(rng);
        let lc = eval_unchecked(&leg.to, &c);
        let c = if lc > 1e-12 { c.scale_re(r / lc) } else { c };
        let mut s = 1.0;
        let mut pick = base.clone();
        for _ in 0..30 {
            let cand = base.scale_re(1.0 - s).add(&c.scale_re(s))?;
            if eval_unchecked(&leg.to, &cand) <= r && bridge_seminorm(&leg.bridge, &x, &cand)? <= r * rho[j] {
                pick = cand;
                break;
            }
            s *= 0.5;
        }
        out.push(pick);
    }
    Ok(Itinerary { elements: out })
}

/// Seeded verification of the target-set inequalities along a trek.
pub fn verify_target_bounds(t: &Trek, samples: usize, seed: u64) -> Report {
    let mut report = Report::new("target-bounds");
    let mut rho = Vec::with_capacity(t.legs.len());
    let mut total: Option<CertifiedValue> = None;
    for (j, leg) in t.legs.iter().enumerate() {
        let r = reach(&leg.bridge, &leg.from, &leg.to).and_then(|r| Ok((r, height(&leg.bridge, &leg.from, &leg.to)?)));
        match r {
            Ok((re, h)) => {
                rho.push(re.upper);
                let len = snap(&re.max(&h));
                total = Some(match total {
                    None => len,
                    Some(s) => s.add(&len),
                });
            }
            Err(e) => {
                report.push(Check::flag(format!("leg[{j}]"), false, format!("solver failure: {e}")));
                return report;
            }
        }
    }
    let total = total.unwrap();
    let len = total.upper;
    let tol = if total.method.is_exact() { TARGET_TOL_EXACT } else { TARGET_TOL_ITERATIVE };
    report.push(Check::le("trek-length", len, f64::INFINITY).detail(format!("{} bound", total.method.as_str())).informational());
    let checks: Vec<Vec<Check>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            target_sample(t, &rho, len, tol, i, &mut rng)
        })
        .collect();
    for c in checks.into_iter().flatten() {
        report.push(c);
    }
    report
}

fn target_sample(t: &Trek, rho: &[f64], len: f64, tol: f64, i: usize, rng: &mut ChaCha8Rng) -> Vec<Check> {
    let alg = t.start().algebra();
    let a = alg.random_self_adjoint(rng);
    let a2 = alg.random_self_adjoint(rng);
    let la = eval_unchecked(t.start(), &a);
    let la2 = eval_unchecked(t.start(), &a2);
    let r = la.max(la2) * (1.0 + 0.5 * rng.gen::<f64>());
    let s: f64 = rng.gen_range(-2.0..2.0);
    let fail = |name: &str, e: Error| {
        let kind = match e {
            Error::NonConvergence(_) | Error::Resource(_) => "solver failure",
            _ => "precondition breach",
        };
        vec![Check::flag(format!("{name}[{i}]"), false, format!("{kind}: {e}"))]
    };
    let eta = match greedy_itinerary(t, &a, r) {
        Ok(x) => x,
        Err(e) => return fail("itinerary", e),
    };
    let zeta = match greedy_itinerary(t, &a2, r) {
        Ok(x) => x,
        Err(e) => return fail("itinerary", e),
    };
    let xi = match perturbed_itinerary(t, &a, r, rho, rng) {
        Ok(x) => x,
        Err(e) => return fail("itinerary", e),
    };
    let (b, b2, b3) = (eta.end(), zeta.end(), xi.end());
    let mut out = Vec::new();
    let witness = format!("a = {:?}, a' = {:?}, r = {r}", a.sa_coords(), a2.sa_coords());
    let push = |out: &mut Vec<Check>, c: Check| {
        let c = if c.passed { c } else { c.detail(witness.clone()) };
        out.push(c);
    };
    for (k, it) in [&eta, &zeta, &xi].into_iter().enumerate() {
        push(&mut out, Check::le(format!("itinerary{k}[{i}]"), it.excess(t, r, rho), tol));
    }
    for (k, (x, y)) in [(&a, b), (&a2, b2), (&a, b3)].into_iter().enumerate() {
        push(&mut out, Check::le(format!("norm{k}[{i}]"), y.op_norm(), 2.0 * r * len + x.op_norm() + tol));
    }
    let d = b.sub(b2).unwrap().op_norm();
    push(&mut out, Check::le(format!("distance[{i}]"), d, 4.0 * r * len + a.sub(&a2).unwrap().op_norm() + tol));
    let d = b.sub(b3).unwrap().op_norm();
    push(&mut out, Check::le(format!("diameter[{i}]"), d, 4.0 * r * len + tol));
    let lin = eta.combine(&zeta, |x, y| x.axpy(s, y).unwrap());
    push(&mut out, Check::le(format!("linear[{i}]"), lin.excess(t, r * (1.0 + s.abs()), rho), tol));
    let big = r * (4.0 * r * len + a.op_norm() + a2.op_norm());
    let jordan = eta.combine(&zeta, |x, y| jordan_lie(x, y).unwrap().0.hermitian_part());
    let lie = eta.combine(&zeta, |x, y| jordan_lie(x, y).unwrap().1.hermitian_part());
    push(&mut out, Check::le(format!("jordan[{i}]"), jordan.excess(t, big, rho), tol));
    push(&mut out, Check::le(format!("lie[{i}]"), lie.excess(t, big, rho), tol));
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub name: String,
    pub from: String,
    pub to: String,
    pub bridge: Bridge,
    pub length: CertifiedValue,
}

/// Named spaces and bridges between them.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Registry {
    spaces: BTreeMap<String, LipNorm>,
    edges: Vec<Edge>,
}

/// A registry bound with its witnessing trek.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropinquityBound {
    pub bound: CertifiedValue,
    pub path: Vec<String>,
    pub bridges: Vec<(String, bool)>,
    pub trek: Trek,
}

#[derive(Clone, Copy, PartialEq)]
struct Visit {
    dist: f64,
    node: usize,
}

impl Eq for Visit {}

impl Ord for Visit {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Visit {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_space(&mut self, name: impl Into<String>, l: LipNorm) -> Result<()> {
        let name = name.into();
        if self.spaces.contains_key(&name) {
            return Err(Error::structural(format!("space `{name}` is already registered")));
        }
        self.spaces.insert(name, l);
        Ok(())
    }

    /// Registers a bridge, computing its length.
    pub fn add_bridge(&mut self, name: impl Into<String>, from: &str, to: &str, bridge: Bridge) -> Result<()> {
        let (la, lb) = (self.space(from)?, self.space(to)?);
        let length = snap(&bridge_length(&bridge, la, lb)?);
        self.add_bridge_with_length(name, from, to, bridge, length)
    }

    pub fn add_bridge_with_length(&mut self, name: impl Into<String>, from: &str, to: &str, bridge: Bridge, length: CertifiedValue) -> Result<()> {
        let name = name.into();
        if self.edges.iter().any(|e| e.name == name) {
            return Err(Error::structural(format!("bridge `{name}` is already registered")));
        }
        let (la, lb) = (self.space(from)?, self.space(to)?);
        if bridge.domain() != la.algebra() || bridge.codomain() != lb.algebra() {
            return Err(Error::structural(format!("bridge `{name}` does not join `{from}` to `{to}`")));
        }
        if !(length.lower >= 0.0 && length.lower <= length.upper) {
            return Err(Error::domain(format!("bridge `{name}` has an invalid length")));
        }
        self.edges.push(Edge { name, from: from.into(), to: to.into(), bridge, length });
        Ok(())
    }

    pub fn space(&self, name: &str) -> Result<&LipNorm> {
        self.spaces.get(name).ok_or_else(|| Error::structural(format!("unknown space `{name}`")))
    }

    pub fn edge(&self, name: &str) -> Result<&Edge> {
        self.edges.iter().find(|e| e.name == name).ok_or_else(|| Error::structural(format!("unknown bridge `{name}`")))
    }

    pub fn spaces(&self) -> impl Iterator<Item = (&String, &LipNorm)> {
        self.spaces.iter()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Chains named bridges into a trek, inverting a bridge when it is
    /// traversed backwards.
    pub fn trek(&self, names: &[&str]) -> Result<Trek> {
        let first = self.edge(names.first().ok_or_else(|| Error::structural("empty bridge list"))?)?;
        let mut at = match names.get(1) {
            Some(n) => {
                let next = self.edge(n)?;
                if first.to == next.from || first.to == next.to {
                    first.from.clone()
                } else {
                    first.to.clone()
                }
            }
            None => first.from.clone(),
        };
        let mut legs = Vec::new();
        for n in names {
            let e = self.edge(n)?;
            let leg = Leg { from: self.space(&e.from)?.clone(), bridge: e.bridge.clone(), to: self.space(&e.to)?.clone() };
            if e.from == at {
                at = e.to.clone();
                legs.push(leg);
            } else if e.to == at {
                at = e.from.clone();
                legs.push(leg.inverse());
            } else {
                return Err(Error::structural(format!("bridge `{n}` does not continue from `{at}`")));
            }
        }
        Trek::new(legs)
    }

    /// Shortest path by certified upper lengths, edges usable in both directions.
    pub fn propinquity_upper_bound(&self, a: &str, b: &str) -> Result<PropinquityBound> {
        let la = self.space(a)?;
        self.space(b)?;
        if a == b {
            return Ok(PropinquityBound {
                bound: CertifiedValue::zero().with_caveat("upper bound relative to registry"),
                path: vec![a.into()],
                bridges: Vec::new(),
                trek: Trek::identity(la),
            });
        }
        let names: Vec<&String> = self.spaces.keys().collect();
        let idx = |s: &str| names.iter().position(|n| n.as_str() == s).unwrap();
        let n = names.len();
        let mut adj: Vec<Vec<(usize, usize, bool)>> = vec![Vec::new(); n];
        for (k, e) in self.edges.iter().enumerate() {
            let (u, v) = (idx(&e.from), idx(&e.to));
            adj[u].push((v, k, false));
            adj[v].push((u, k, true));
        }
        let (src, dst) = (idx(a), idx(b));
        let mut dist = vec![f64::INFINITY; n];
        let mut prev: Vec<Option<(usize, usize, bool)>> = vec![None; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[src] = 0.0;
        heap.push(Visit { dist: 0.0, node: src });
        while let Some(Visit { dist: d, node: u }) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            for &(v, k, back) in &adj[u] {
                if done[v] {
                    continue;
                }
                let nd = d + self.edges[k].length.upper;
                let better = match nd.total_cmp(&dist[v]) {
                    Ordering::Less => true,
                    Ordering::Equal => prev[v].map_or(true, |(p, pk, _)| (u, k) < (p, pk)),
                    Ordering::Greater => false,
                };
                if better {
                    dist[v] = nd;
                    prev[v] = Some((u, k, back));
                    heap.push(Visit { dist: nd, node: v });
                }
            }
        }
        if !dist[dst].is_finite() {
            return Err(Error::NoPath(format!("`{b}` is not reachable from `{a}`; register a diameter bridge")));
        }
        let mut steps = Vec::new();
        let mut at = dst;
        while let Some((p, k, back)) = prev[at] {
            steps.push((k, back));
            at = p;
            if at == src {
                break;
            }
        }
        steps.reverse();
        let mut legs = Vec::new();
        let mut bound: Option<CertifiedValue> = None;
        let mut path = vec![a.to_string()];
        let mut bridges = Vec::new();
        for (k, back) in steps {
            let e = &self.edges[k];
            let leg = Leg { from: self.spaces[&e.from].clone(), bridge: e.bridge.clone(), to: self.spaces[&e.to].clone() };
            legs.push(if back { leg.inverse() } else { leg });
            path.push(if back { e.from.clone() } else { e.to.clone() });
            bridges.push((e.name.clone(), back));
            bound = Some(match bound {
                None => e.length.clone(),
                Some(s) => s.add(&e.length),
            });
        }
        Ok(PropinquityBound {
            bound: bound.unwrap().with_caveat("upper bound relative to registry"),
            path,
            bridges,
            trek: Trek::new(legs)?,
        })
    }
}

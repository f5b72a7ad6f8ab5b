//! The JSON instance format and its conversion to library objects.

use std::collections::BTreeMap;

use num_complex::Complex;
use propinquity::algebra::{Algebra, Automorphism, Element, Morphism, State};
use propinquity::bridges::Bridge;
use propinquity::constructions::{admissible_sum_lipnorm, fuzzy_torus, LengthChoice};
use propinquity::quantum_metric::{FiniteMetricSpace, LipNorm};
use propinquity::{CMatrix, Error, Result, C64};
use serde::{Deserialize, Serialize};

/// A complex entry: `[re, im]`, or a bare real number.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Pair([f64; 2]),
    Real(f64),
}

impl From<Num> for C64 {
    fn from(n: Num) -> C64 {
        match n {
            Num::Pair([re, im]) => Complex::new(re, im),
            Num::Real(re) => Complex::new(re, 0.0),
        }
    }
}

/// Row-major complex matrix.
pub type Matrix = Vec<Vec<Num>>;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    #[serde(default)]
    pub spaces: BTreeMap<String, SpaceSpec>,
    #[serde(default)]
    pub bridges: BTreeMap<String, BridgeSpec>,
    #[serde(default)]
    pub treks: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub states: BTreeMap<String, StateSpec>,
    #[serde(default)]
    pub elements: BTreeMap<String, ElementSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    FiniteMetric {
        dist: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lipnorm: Option<LipSpec>,
    },
    MatrixAlgebra {
        blocks: Vec<usize>,
        lipnorm: LipSpec,
    },
    FuzzyTorus {
        n: usize,
        k: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lipnorm: Option<LipSpec>,
    },
    /// `L_ε` on `A ⊕ B` built from a named bridge.
    AdmissibleSum { bridge: String, epsilon: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LipSpec {
    Lipschitz,
    Polytope { constraints: Vec<Vec<f64>> },
    Ergodic { actions: Vec<AutomorphismSpec>, lengths: Vec<f64> },
    DualAction { length: LengthChoice },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutomorphismSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perm: Option<Vec<usize>>,
    pub unitaries: Vec<Matrix>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BridgeSpec {
    pub from: String,
    pub to: String,
    #[serde(rename = "D")]
    pub d: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pivot: Option<Vec<Matrix>>,
    #[serde(rename = "pi_A")]
    pub pi_a: MorphismSpec,
    #[serde(rename = "pi_B")]
    pub pi_b: MorphismSpec,
    /// Reject pivots that are not self-adjoint.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub selfadjoint: bool,
}

/// Either `{"pullback": f}` for `C(Y) → C(X)`, `g ↦ g ∘ f`, or explicit
/// multiplicities with optional unitaries.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorphismSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pullback: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplicities: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unitaries: Option<Vec<Matrix>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub space: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<Vec<Matrix>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dirac: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probability: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementSpec {
    pub space: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<Matrix>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

pub fn matrix(m: &Matrix) -> Result<CMatrix> {
    let rows: Vec<Vec<C64>> = m.iter().map(|r| r.iter().map(|&z| z.into()).collect()).collect();
    if rows.is_empty() {
        return Err(Error::Structural("empty matrix".into()));
    }
    CMatrix::from_rows(&rows).ok_or_else(|| Error::Structural("ragged matrix".into()))
}

pub fn export_matrix(m: &CMatrix) -> Matrix {
    m.to_rows().iter().map(|r| r.iter().map(|z| Num::Pair([z.re, z.im])).collect()).collect()
}

fn matrices(ms: &[Matrix]) -> Result<Vec<CMatrix>> {
    ms.iter().map(matrix).collect()
}

impl MorphismSpec {
    pub fn build(&self, source: &Algebra, target: &Algebra) -> Result<Morphism> {
        match (&self.pullback, &self.multiplicities) {
            (Some(f), None) if self.unitaries.is_none() => {
                let m = Morphism::pullback(source.num_blocks(), f)?;
                if m.source() != source || m.target() != target {
                    return Err(Error::Structural("pullback does not match the bridge endpoints".into()));
                }
                Ok(m)
            }
            (None, Some(mult)) => match &self.unitaries {
                Some(us) => Morphism::new(source, target, mult.clone(), matrices(us)?),
                None => Morphism::standard(source, target, mult.clone()),
            },
            _ => Err(Error::Structural("a morphism needs either `pullback` or `multiplicities`".into())),
        }
    }

    pub fn export(m: &Morphism) -> Self {
        MorphismSpec {
            pullback: None,
            multiplicities: Some(m.multiplicities().to_vec()),
            unitaries: Some(m.unitaries().iter().map(export_matrix).collect()),
        }
    }
}

impl BridgeSpec {
    pub fn export(from: &str, to: &str, g: &Bridge) -> Self {
        BridgeSpec {
            from: from.into(),
            to: to.into(),
            d: g.d().block_dims().to_vec(),
            pivot: Some(g.pivot().blocks().iter().map(export_matrix).collect()),
            pi_a: MorphismSpec::export(g.pi_a()),
            pi_b: MorphismSpec::export(g.pi_b()),
            selfadjoint: false,
        }
    }
}

fn base_space(name: &str, s: &SpaceSpec) -> Result<Option<LipNorm>> {
    let bad = |what: &str| Error::Structural(format!("space `{name}`: {what}"));
    Ok(Some(match s {
        SpaceSpec::FiniteMetric { dist, lipnorm } => {
            let x = FiniteMetricSpace::new(dist.clone())?;
            match lipnorm {
                None | Some(LipSpec::Lipschitz) => LipNorm::finite_lipschitz(x),
                Some(LipSpec::Polytope { constraints }) => LipNorm::polytope(&x.algebra(), constraints.clone())?,
                Some(_) => return Err(bad("finite metric spaces take a `lipschitz` or `polytope` Lip-norm")),
            }
        }
        SpaceSpec::MatrixAlgebra { blocks, lipnorm } => {
            let a = Algebra::new(blocks.clone())?;
            match lipnorm {
                LipSpec::Polytope { constraints } => LipNorm::polytope(&a, constraints.clone())?,
                LipSpec::Ergodic { actions, lengths } => {
                    let acts = actions
                        .iter()
                        .map(|g| {
                            let perm = g.perm.clone().unwrap_or_else(|| (0..a.num_blocks()).collect());
                            Automorphism::new(&a, perm, matrices(&g.unitaries)?)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    LipNorm::ergodic(&a, acts, lengths.clone())?
                }
                _ => return Err(bad("matrix algebras take a `polytope` or `ergodic` Lip-norm")),
            }
        }
        SpaceSpec::FuzzyTorus { n, k, lipnorm } => {
            let length = match lipnorm {
                None => LengthChoice::default(),
                Some(LipSpec::DualAction { length }) => *length,
                Some(_) => return Err(bad("fuzzy tori take a `dual_action` Lip-norm")),
            };
            fuzzy_torus(*n, *k, length)?.lipnorm
        }
        SpaceSpec::AdmissibleSum { .. } => return Ok(None),
    }))
}

/// Validated objects of an instance file.
#[derive(Clone, Debug, Default)]
pub struct World {
    pub instance: Instance,
    pub spaces: BTreeMap<String, LipNorm>,
    pub bridges: BTreeMap<String, Bridge>,
    pub states: BTreeMap<String, State>,
    pub elements: BTreeMap<String, Element>,
}

impl World {
    pub fn load(instance: Instance) -> Result<Self> {
        let mut w = World { instance, ..Default::default() };
        for (name, s) in &w.instance.spaces {
            if let Some(l) = base_space(name, s)? {
                w.spaces.insert(name.clone(), l);
            }
        }
        loop {
            let mut progress = false;
            for (name, b) in &w.instance.bridges {
                if w.bridges.contains_key(name) {
                    continue;
                }
                if let (Some(la), Some(lb)) = (w.spaces.get(&b.from), w.spaces.get(&b.to)) {
                    let g = build_bridge(name, b, la.algebra(), lb.algebra())?;
                    w.bridges.insert(name.clone(), g);
                    progress = true;
                }
            }
            for (name, s) in &w.instance.spaces {
                if let SpaceSpec::AdmissibleSum { bridge, epsilon } = s {
                    if w.spaces.contains_key(name) {
                        continue;
                    }
                    if let Some(g) = w.bridges.get(bridge) {
                        let b = &w.instance.bridges[bridge];
                        let l = admissible_sum_lipnorm(g, &w.spaces[&b.from], &w.spaces[&b.to], *epsilon)?;
                        w.spaces.insert(name.clone(), l);
                        progress = true;
                    }
                }
            }
            if !progress {
                break;
            }
        }
        if let Some(name) = w.instance.spaces.keys().find(|n| !w.spaces.contains_key(*n)) {
            return Err(Error::Structural(format!("space `{name}` refers to an unknown or cyclic bridge")));
        }
        if let Some((name, b)) = w.instance.bridges.iter().find(|(n, _)| !w.bridges.contains_key(*n)) {
            return Err(Error::Structural(format!("bridge `{name}` joins unknown spaces `{}` and `{}`", b.from, b.to)));
        }
        for (name, bridges) in &w.instance.treks {
            if bridges.is_empty() {
                return Err(Error::Structural(format!("trek `{name}` has no bridges")));
            }
            if let Some(b) = bridges.iter().find(|b| !w.bridges.contains_key(*b)) {
                return Err(Error::Structural(format!("trek `{name}` refers to unknown bridge `{b}`")));
            }
        }
        for (name, s) in &w.instance.states {
            let a = w.space(&s.space)?.algebra().clone();
            let st = match (&s.density, s.dirac, &s.probability) {
                (Some(d), None, None) => State::new(&a, matrices(d)?)?,
                (None, Some(i), None) => State::dirac(&a, i)?,
                (None, None, Some(p)) => State::probability(&a, p)?,
                _ => return Err(Error::Structural(format!("state `{name}` needs exactly one of density, dirac, probability"))),
            };
            w.states.insert(name.clone(), st);
        }
        for (name, e) in &w.instance.elements {
            let a = w.space(&e.space)?.algebra().clone();
            let x = match (&e.blocks, &e.values) {
                (Some(b), None) => Element::new(&a, matrices(b)?)?,
                (None, Some(v)) => a.function(v)?,
                _ => return Err(Error::Structural(format!("element `{name}` needs exactly one of blocks, values"))),
            };
            w.elements.insert(name.clone(), x);
        }
        Ok(w)
    }

    pub fn space(&self, name: &str) -> Result<&LipNorm> {
        self.spaces.get(name).ok_or_else(|| Error::Structural(format!("unknown space `{name}`")))
    }

    pub fn bridge(&self, name: &str) -> Result<(&BridgeSpec, &Bridge)> {
        match (self.instance.bridges.get(name), self.bridges.get(name)) {
            (Some(s), Some(g)) => Ok((s, g)),
            _ => Err(Error::Structural(format!("unknown bridge `{name}`"))),
        }
    }

    pub fn state(&self, name: &str) -> Result<&State> {
        self.states.get(name).ok_or_else(|| Error::Structural(format!("unknown state `{name}`")))
    }

    pub fn element(&self, name: &str) -> Result<&Element> {
        self.elements.get(name).ok_or_else(|| Error::Structural(format!("unknown element `{name}`")))
    }
}

fn build_bridge(name: &str, b: &BridgeSpec, a: &Algebra, c: &Algebra) -> Result<Bridge> {
    let d = Algebra::new(b.d.clone())?;
    let pivot = match &b.pivot {
        Some(p) => Element::new(&d, matrices(p)?)?,
        None => d.unit(),
    };
    let (pi_a, pi_b) = (b.pi_a.build(a, &d)?, b.pi_b.build(c, &d)?);
    let g = if b.selfadjoint { Bridge::new_self_adjoint(&d, pivot, pi_a, pi_b) } else { Bridge::new(&d, pivot, pi_a, pi_b) };
    g.map_err(|e| Error::Structural(format!("bridge `{name}`: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_accept_pairs_and_reals() {
        let m: Matrix = serde_json::from_str("[[[1, 2], 3]]").unwrap();
        let c = matrix(&m).unwrap();
        assert_eq!(c[(0, 0)], Complex::new(1.0, 2.0));
        assert_eq!(c[(0, 1)], Complex::new(3.0, 0.0));
        assert!(matrix(&serde_json::from_str("[[1], [1, 2]]").unwrap()).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<Instance>(r#"{"spaces": {}, "extra": 1}"#).is_err());
        assert!(serde_json::from_str::<Instance>(r#"{"spaces": {"x": {"kind": "finite_metric", "dist": [[0]], "n": 1}}}"#).is_err());
    }

    #[test]
    fn bridges_need_known_endpoints() {
        let inst: Instance = serde_json::from_str(
            r#"{"bridges": {"g": {"from": "x", "to": "x", "D": [1], "pi_A": {"pullback": [0]}, "pi_B": {"pullback": [0]}}}}"#,
        )
        .unwrap();
        assert!(World::load(inst).is_err());
    }

    #[test]
    fn selfadjoint_flag_rejects_skew_pivots() {
        let text = |flag: bool| {
            format!(
                r#"{{"spaces": {{"x": {{"kind": "finite_metric", "dist": [[0, 1], [1, 0]]}}}},
                   "bridges": {{"g": {{"from": "x", "to": "x", "D": [1, 1], "pivot": [[[[0, 1]]], [[1]]],
                   "pi_A": {{"pullback": [0, 1]}}, "pi_B": {{"pullback": [0, 1]}}, "selfadjoint": {flag}}}}}}}"#
            )
        };
        assert!(World::load(serde_json::from_str(&text(false)).unwrap()).is_ok());
        assert!(World::load(serde_json::from_str(&text(true)).unwrap()).is_err());
    }
}

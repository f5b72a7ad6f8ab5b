use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{Algebra, Morphism};
use crate::bridges::Bridge;
use crate::error::{Error, Result};
use crate::quantum_metric::{FiniteMetricSpace, LipNorm};

/// Largest side accepted by [`gh_bruteforce`].
pub const GH_LIMIT: usize = 5;
/// Margin below `δ + 2ε` for membership in the coupling set.
pub const SEAM_GUARD: f64 = 1e-12;
/// Smallest seam used when the two spaces are isometric.
const MIN_SEAM: f64 = 1e-9;

/// A metric on `X ⊔ Y` given by `d_X`, `d_Y` and the cross distances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingMetric {
    pub x: FiniteMetricSpace,
    pub y: FiniteMetricSpace,
    pub cross: Vec<Vec<f64>>,
}

impl CouplingMetric {
    pub fn new(x: FiniteMetricSpace, y: FiniteMetricSpace, cross: Vec<Vec<f64>>) -> Result<Self> {
        if cross.len() != x.len() || cross.iter().any(|r| r.len() != y.len()) {
            return Err(Error::structural("cross distances must be |X| × |Y|"));
        }
        let c = CouplingMetric { x, y, cross };
        c.union()?;
        Ok(c)
    }

    /// The assembled metric on `X ⊔ Y`.
    pub fn union(&self) -> Result<FiniteMetricSpace> {
        let (n, m) = (self.x.len(), self.y.len());
        let mut d = vec![vec![0.0; n + m]; n + m];
        for i in 0..n + m {
            for j in 0..n + m {
                d[i][j] = match (i < n, j < n) {
                    (true, true) => self.x.d(i, j),
                    (false, false) => self.y.d(i - n, j - n),
                    (true, false) => self.cross[i][j - n],
                    (false, true) => self.cross[j][i - n],
                };
            }
        }
        FiniteMetricSpace::new(d)
    }

    /// Hausdorff distance between `X` and `Y` inside the union.
    pub fn hausdorff(&self) -> f64 {
        let from_x = self.cross.iter().map(|r| r.iter().copied().fold(f64::INFINITY, f64::min)).fold(0.0, f64::max);
        let from_y = (0..self.y.len())
            .map(|j| self.cross.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);
        from_x.max(from_y)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GhResult {
    pub value: f64,
    pub correspondence: Vec<(usize, usize)>,
    pub coupling: CouplingMetric,
}

/// `½ min_R dis(R)` over correspondences, by exhaustive search.
///
/// Every correspondence contains the graph of some `f: X → Y` together with
/// one partner for each point of `Y` missed by `f`, and shrinking `R` never
/// increases its distortion, so only those are enumerated.
pub fn gh_bruteforce(x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> Result<GhResult> {
    let (n, m) = (x.len(), y.len());
    if n > GH_LIMIT || m > GH_LIMIT {
        return Err(Error::Resource(format!("GH enumeration is limited to {GH_LIMIT} points per side")));
    }
    let best = (0..m)
        .into_par_iter()
        .map(|y0| {
            let mut s = Search { x, y, pairs: vec![(0, y0)], best: f64::INFINITY, best_pairs: Vec::new() };
            s.extend_f(1, 0.0);
            (s.best, s.best_pairs)
        })
        .reduce_with(|a, b| if b.0 < a.0 { b } else { a })
        .expect("nonempty space");
    let (dis, pairs) = best;
    let value = dis / 2.0;
    let seam = value.max(MIN_SEAM);
    let cross = (0..n)
        .map(|i| {
            (0..m)
                .map(|j| pairs.iter().fold(f64::INFINITY, |acc, &(p, q)| acc.min(x.d(i, p) + seam + y.d(q, j))))
                .collect()
        })
        .collect();
    let coupling = CouplingMetric::new(x.clone(), y.clone(), cross)?;
    Ok(GhResult { value, correspondence: pairs, coupling })
}

struct Search<'a> {
    x: &'a FiniteMetricSpace,
    y: &'a FiniteMetricSpace,
    pairs: Vec<(usize, usize)>,
    best: f64,
    best_pairs: Vec<(usize, usize)>,
}

impl Search<'_> {
    fn with(&self, p: (usize, usize), dis: f64) -> f64 {
        self.pairs.iter().fold(dis, |acc, &(a, b)| acc.max((self.x.d(a, p.0) - self.y.d(b, p.1)).abs()))
    }

    fn extend_f(&mut self, i: usize, dis: f64) {
        if dis >= self.best {
            return;
        }
        if i == self.x.len() {
            let missed: Vec<usize> = (0..self.y.len()).filter(|&j| self.pairs.iter().all(|p| p.1 != j)).collect();
            self.extend_g(&missed, 0, dis);
            return;
        }
        for j in 0..self.y.len() {
            let d = self.with((i, j), dis);
            self.pairs.push((i, j));
            self.extend_f(i + 1, d);
            self.pairs.pop();
        }
    }

    fn extend_g(&mut self, missed: &[usize], k: usize, dis: f64) {
        if dis >= self.best {
            return;
        }
        if k == missed.len() {
            self.best = dis;
            self.best_pairs = self.pairs.clone();
            self.best_pairs.sort();
            return;
        }
        for i in 0..self.x.len() {
            let d = self.with((i, missed[k]), dis);
            self.pairs.push((i, missed[k]));
            self.extend_g(missed, k + 1, d);
            self.pairs.pop();
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalBridge {
    pub bridge: Bridge,
    pub x: LipNorm,
    pub y: LipNorm,
    pub delta: f64,
    pub epsilon: f64,
    pub pairs: Vec<(usize, usize)>,
}

/// The bridge `(C(Z), 1, ρ_X*, ρ_Y*)` with `Z = {(x, y) : d(x, y) ≤ δ + 2ε}`.
pub fn classical_bridge(c: &CouplingMetric, epsilon: Option<f64>) -> Result<ClassicalBridge> {
    let delta = c.hausdorff();
    let eps = epsilon.unwrap_or(1e-3 * (delta + c.x.diameter().max(c.y.diameter())));
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::domain("ε must be nonnegative"));
    }
    let cut = if eps > 0.0 { delta + 2.0 * eps - SEAM_GUARD } else { delta };
    let mut pairs = Vec::new();
    for (i, row) in c.cross.iter().enumerate() {
        for (j, &d) in row.iter().enumerate() {
            if d <= cut {
                pairs.push((i, j));
            }
        }
    }
    let onto_x = (0..c.x.len()).all(|i| pairs.iter().any(|p| p.0 == i));
    let onto_y = (0..c.y.len()).all(|j| pairs.iter().any(|p| p.1 == j));
    if !(onto_x && onto_y) {
        return Err(Error::domain("the coupling set does not project onto both spaces; use ε > 0"));
    }
    let fx: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let fy: Vec<usize> = pairs.iter().map(|p| p.1).collect();
    let d = Algebra::commutative(pairs.len())?;
    let bridge = Bridge::new(&d, d.unit(), Morphism::pullback(c.x.len(), &fx)?, Morphism::pullback(c.y.len(), &fy)?)?;
    Ok(ClassicalBridge {
        bridge,
        x: LipNorm::finite_lipschitz(c.x.clone()),
        y: LipNorm::finite_lipschitz(c.y.clone()),
        delta,
        epsilon: eps,
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bridges::{bridge_length, height};

    fn pt(d: f64) -> FiniteMetricSpace {
        FiniteMetricSpace::two_point(d).unwrap()
    }

    #[test]
    fn gh_examples() {
        assert_eq!(gh_bruteforce(&pt(1.0), &pt(1.0)).unwrap().value, 0.0);
        assert_eq!(gh_bruteforce(&pt(1.0), &pt(2.0)).unwrap().value, 0.5);
        assert_eq!(gh_bruteforce(&pt(1.0), &FiniteMetricSpace::single_point()).unwrap().value, 0.5);
        let six = FiniteMetricSpace::new(vec![vec![0.0, 1.0, 1.0, 1.0, 1.0, 1.0]; 1].into_iter().chain((1..6).map(|i| (0..6).map(|j| if i == j { 0.0 } else { 1.0 }).collect())).collect());
        assert!(matches!(gh_bruteforce(&six.unwrap(), &pt(1.0)), Err(Error::Resource(_))));
    }

    #[test]
    fn optimal_coupling_realises_the_distance() {
        let g = gh_bruteforce(&pt(1.0), &pt(2.0)).unwrap();
        assert!((g.coupling.hausdorff() - 0.5).abs() < 1e-15);
        let cb = classical_bridge(&g.coupling, Some(1e-3)).unwrap();
        let len = bridge_length(&cb.bridge, &cb.x, &cb.y).unwrap();
        assert!(len.upper <= 0.5 + 2e-3 + 1e-7, "{len:?}");
        assert_eq!(height(&cb.bridge, &cb.x, &cb.y).unwrap().upper, 0.0);
    }

    #[test]
    fn diagonal_coupling() {
        let x = FiniteMetricSpace::new(vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.5], vec![2.0, 1.5, 0.0]]).unwrap();
        let eps = 0.25;
        let cross: Vec<Vec<f64>> = (0..3).map(|i| (0..3).map(|j| x.d(i, j).max(if i == j { 0.1 } else { 0.0 })).collect()).collect();
        let c = CouplingMetric::new(x.clone(), x.clone(), cross).unwrap();
        let cb = classical_bridge(&c, Some(eps)).unwrap();
        assert!((cb.delta - 0.1).abs() < 1e-15);
        let len = bridge_length(&cb.bridge, &cb.x, &cb.y).unwrap();
        assert!(len.upper <= cb.delta + 2.0 * eps + 1e-7);
        assert!(classical_bridge(&CouplingMetric::new(pt(1.0), pt(1.0), vec![vec![0.5, 1.0], vec![1.0, 0.5]]).unwrap(), Some(0.0)).is_ok());
    }
}

use crate::algebra::{Algebra, Morphism};
use crate::bridges::Bridge;
use crate::error::{Error, Result};
use crate::quantum_metric::{kernel_check, LipNorm};
use crate::{CMatrix, C64};

/// Permutation unitary `K` with `K (1_e ⊗ a) K* = a ⊗ 1_e` for `a ∈ M_d`.
fn commutation(d: usize, e: usize) -> CMatrix {
    let mut k = CMatrix::zeros(d * e, d * e);
    for p in 0..e {
        for q in 0..d {
            k[(q * e + p, p * d + q)] = C64::new(1.0, 0.0);
        }
    }
    k
}

/// The bridge `(A ⊗ B, 1, a ↦ a ⊗ 1, b ↦ 1 ⊗ b)`.
pub fn diameter_bridge(la: &LipNorm, lb: &LipNorm) -> Result<Bridge> {
    for (name, l) in [("L_A", la), ("L_B", lb)] {
        if !kernel_check(l).passes() {
            return Err(Error::domain(format!("{name} fails the kernel condition")));
        }
    }
    let (a, b) = (la.algebra(), lb.algebra());
    let (da, db) = (a.block_dims(), b.block_dims());
    let mut dims = Vec::with_capacity(da.len() * db.len());
    let (mut ma, mut mb, mut ua) = (Vec::new(), Vec::new(), Vec::new());
    for (i, &d) in da.iter().enumerate() {
        for (j, &e) in db.iter().enumerate() {
            dims.push(d * e);
            ma.push((0..da.len()).map(|s| if s == i { e } else { 0 }).collect());
            mb.push((0..db.len()).map(|s| if s == j { d } else { 0 }).collect());
            ua.push(commutation(d, e));
        }
    }
    let dd = Algebra::new(dims)?;
    let pi_a = Morphism::new(a, &dd, ma, ua)?;
    let pi_b = Morphism::standard(b, &dd, mb)?;
    Bridge::new(&dd, dd.unit(), pi_a, pi_b)
}

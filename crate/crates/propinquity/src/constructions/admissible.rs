use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::algebra::{Element, Morphism};
use crate::bridges::{bridge_length, directed_height, Bridge};
use crate::error::{Error, Result};
use crate::quantum_metric::{
    eval_unchecked, iterative_options, kernel_check, CertifiedValue, Check, LipKind, LipNorm, Method, Report,
};
use crate::solvers::{min_opnorm_lp, solve_spectral, AffineHermitian, SpectralProgram};
use crate::CMatrix;

/// Allowed gap between a quotient seminorm and the summand's Lip-norm.
pub const QUOTIENT_TOL: f64 = 1e-6;
/// The same gap when the quotient is computed iteratively.
pub const QUOTIENT_TOL_ITERATIVE: f64 = 1e-3;
/// Slack in the Hausdorff bound between the summands' state spaces.
pub const HAUSDORFF_TOL: f64 = 1e-6;

/// `L_ε(a, b) = max{L_A(a), L_B(b), bn_γ(a, b) / (λ(γ) + ε)}`.
pub fn admissible_sum_lipnorm(g: &Bridge, la: &LipNorm, lb: &LipNorm, epsilon: f64) -> Result<LipNorm> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::domain("ε must be nonnegative"));
    }
    let len = bridge_length(g, la, lb)?;
    if len.lower + epsilon <= 0.0 {
        return Err(Error::domain("λ(γ) + ε must be positive"));
    }
    LipNorm::direct_sum_max(la.clone(), lb.clone(), g.clone(), len.upper + epsilon)
}

fn parts(l: &LipNorm) -> Result<(&LipNorm, &LipNorm, &Bridge, f64)> {
    match l.kind() {
        LipKind::DirectSumMax { la, lb, bridge, denom } => Ok((la, lb, bridge, *denom)),
        _ => Err(Error::structural("not a direct-sum Lip-norm")),
    }
}

/// `inf { L(x ⊕ y) }` over the other summand, with `x` on side A when
/// `first` is true and on side B otherwise.
pub fn quotient_lipnorm(l: &LipNorm, x: &Element, first: bool) -> Result<CertifiedValue> {
    let (la, lb, _, _) = parts(l)?;
    let fixed_alg = if first { la.algebra() } else { lb.algebra() };
    if x.algebra() != fixed_alg {
        return Err(Error::structural("element lies in the wrong summand"));
    }
    let (n, da) = (l.algebra().dim(), la.algebra().dim());
    let fixed: Vec<usize> = if first { (0..da).collect() } else { (da..n).collect() };
    let free: Vec<usize> = (0..n).filter(|i| !fixed.contains(i)).collect();
    let xf = x.sa_coords();
    let rep = l.ball();
    let assemble = |y: &[f64]| -> Vec<f64> {
        let mut full = vec![0.0; n];
        for (k, &i) in fixed.iter().enumerate() {
            full[i] = xf[k];
        }
        for (k, &i) in free.iter().enumerate() {
            full[i] = y[k];
        }
        full
    };
    let rows: Vec<(Vec<f64>, f64)> = rep
        .rows
        .iter()
        .map(|r| (free.iter().map(|&i| r[i]).collect(), fixed.iter().zip(&xf).map(|(&i, v)| r[i] * v).sum()))
        .collect();
    if rep.is_polytopal() {
        let r = min_opnorm_lp(&rows, free.len(), &[], &[])?;
        let value = rep.eval(&assemble(&r.argmin));
        return Ok(CertifiedValue::bounds(r.lower, r.upper, value, Method::ExactLp, r.iterations));
    }
    let m = free.len();
    let mut obj = vec![0.0; m + 1];
    obj[m] = 1.0;
    let mut p = SpectralProgram::new(obj);
    for (r, c) in &rows {
        let mut pos = r.clone();
        pos.push(-1.0);
        p.le.push((pos, -c));
        let mut neg: Vec<f64> = r.iter().map(|v| -v).collect();
        neg.push(-1.0);
        p.le.push((neg, *c));
    }
    for h in rep.lmis() {
        let size = h.size();
        let mut constant = CMatrix::zeros(size, size);
        for (&i, &v) in fixed.iter().zip(&xf) {
            if v != 0.0 {
                constant = constant.axpy(v, &h.coeffs[i]);
            }
        }
        let mut coeffs: Vec<CMatrix> = free.iter().map(|&i| h.coeffs[i].clone()).collect();
        coeffs.push(h.constant.clone());
        p.lmis.push(AffineHermitian { constant, coeffs });
    }
    let scale = xf.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    p.box_radius = Some(1e4 * scale);
    let repair = |z: &[f64]| {
        let s = rep.eval(&assemble(&z[..m]));
        let mut out = z[..m].to_vec();
        out.push(s);
        Some((out, s))
    };
    let r = solve_spectral(&p, &iterative_options(), &repair)?;
    let mut v = CertifiedValue::bounds(r.lower, r.upper, r.upper, Method::Iterative, r.iterations);
    if !r.converged {
        v = v.with_caveat("quotient stopped at the iteration cap");
    }
    Ok(v)
}

/// Hausdorff distance, for the Monge–Kantorovich metric of `L`, between the
/// state spaces of the two summands inside the state space of the sum.
pub fn summand_hausdorff(l: &LipNorm) -> Result<CertifiedValue> {
    let (la, lb, _, _) = parts(l)?;
    let ab = l.algebra();
    let (ua, ub) = (la.algebra().unit(), lb.algebra().unit());
    let on_a = ua.direct_sum(&lb.algebra().zero());
    let on_b = la.algebra().zero().direct_sum(&ub);
    let mut out = CertifiedValue::zero();
    for pivot in [on_b, on_a] {
        let g = Bridge::new(ab, pivot, Morphism::identity(ab), Morphism::identity(ab))?;
        out = out.max(&directed_height(&g, l)?);
    }
    Ok(out)
}

/// Quotient and state-space checks for a direct-sum Lip-norm.
pub fn verify_admissibility(l: &LipNorm, samples: usize, seed: u64) -> Report {
    let mut report = Report::new("admissibility");
    let (la, lb, g, denom) = match parts(l) {
        Ok(p) => p,
        Err(e) => {
            report.push(Check::flag("shape", false, e.to_string()));
            return report;
        }
    };
    let k = kernel_check(l);
    report.push(Check::flag("kernel", k.passes(), format!("kernel dimension {}", k.dimension)));
    let checks: Vec<Vec<Check>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut out = Vec::with_capacity(2);
            for (first, side, name) in [(true, la, "quotient-a"), (false, lb, "quotient-b")] {
                let x = side.algebra().random_self_adjoint(&mut rng).scale_re(rng.gen_range(0.1..2.0));
                let target = eval_unchecked(side, &x);
                out.push(match quotient_lipnorm(l, &x, first) {
                    Ok(q) => {
                        let tol = if q.method.is_exact() { QUOTIENT_TOL } else { QUOTIENT_TOL_ITERATIVE };
                        let dev = (q.value - target).abs();
                        let c = Check::le(format!("{name}[{i}]"), dev, tol);
                        if c.passed {
                            c
                        } else {
                            c.detail(format!("x = {:?}, quotient {:?}, summand {target}", x.sa_coords(), q))
                        }
                    }
                    Err(e) => Check::flag(format!("{name}[{i}]"), false, format!("solver failure: {e}")),
                });
            }
            out
        })
        .collect();
    for c in checks.into_iter().flatten() {
        report.push(c);
    }
    let bound = bridge_length(g, la, lb).map(|len| 2.0 * len.upper + (denom - len.upper));
    match (summand_hausdorff(l), bound) {
        (Ok(h), Ok(b)) => report.push(Check::le("hausdorff", h.upper, b + HAUSDORFF_TOL).detail(format!("{} bound", h.method.as_str()))),
        (Err(e), _) | (_, Err(e)) => report.push(Check::flag("hausdorff", false, format!("solver failure: {e}"))),
    }
    report
}

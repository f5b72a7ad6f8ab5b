//! Acceptance suite: one line per criterion, non-zero exit on any failure.

use std::time::{Duration, Instant};

use num_complex::Complex;
use propinquity::algebra::State;
use propinquity::bridges::{bridge_length, height, inverse_bridge, reach, Bridge};
use propinquity::constructions::{
    admissible_sum_lipnorm, classical_bridge, diameter_bridge, fuzzy_torus, gh_bruteforce, verify_admissibility,
    ClassicalBridge, LengthChoice,
};
use propinquity::quantum_metric::{check_leibniz, mk_distance, state_diameter, FiniteMetricSpace, LipNorm};
use propinquity::solvers::{
    min_opnorm_affine, solve_lp, AffineFamily, CuttingPlaneOptions, LinearProgram, LpStatus, Polytope, Sense,
};
use propinquity::treks::{
    compose, trek_length, verify_target_bounds, Registry, Trek, TARGET_TOL_EXACT, TARGET_TOL_ITERATIVE,
};
use propinquity::CMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const IDENTITY_TOL: f64 = 1e-9;
const MK_TOL: f64 = 1e-7;
const LEIBNIZ_SAMPLES: usize = 200;
const CLASSICAL_EPS: f64 = 1e-3;
const CLASSICAL_SLACK: f64 = 1e-6;
const ADMISSIBLE_SAMPLES: usize = 50;
const QUOTIENT_TOL: f64 = 1e-6;
const HAUSDORFF_SLACK: f64 = 1e-6;
const DIAMETER_SLACK_EXACT: f64 = 1e-6;
const DIAMETER_SLACK_ITERATIVE: f64 = 1e-3;
const TARGET_SAMPLES_CLASSICAL: usize = 50;
const TARGET_SAMPLES_FUZZY: usize = 20;
const TARGET_EXACT: f64 = 1e-6;
const TARGET_ITERATIVE: f64 = 1e-3;
const SYMMETRY_TOL: f64 = 1e-7;
const TRIANGLE_TOL: f64 = 1e-9;
const LP_PROGRAMS: usize = 50;
const DUALITY_GAP: f64 = 1e-9;
const OPNORM_MATCH: f64 = 1e-9;

struct Outcome {
    passed: bool,
    detail: String,
}

fn ok(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn spaces(seed: u64, count: usize, max_n: usize) -> Vec<FiniteMetricSpace> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let n = r.gen_range(1..=max_n);
            FiniteMetricSpace::random(n, &mut r)
        })
        .collect()
}

fn pairs(seed: u64, count: usize, min_n: usize, max_n: usize) -> Vec<(FiniteMetricSpace, FiniteMetricSpace)> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let (n, m) = (r.gen_range(min_n..=max_n), r.gen_range(min_n..=max_n));
            (FiniteMetricSpace::random(n, &mut r), FiniteMetricSpace::random(m, &mut r))
        })
        .collect()
}

fn classical(x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> ClassicalBridge {
    classical_bridge(&gh_bruteforce(x, y).unwrap().coupling, Some(CLASSICAL_EPS)).unwrap()
}

fn identity_spaces() -> Vec<FiniteMetricSpace> {
    spaces(101, 10, 6)
}

fn mk_spaces() -> Vec<FiniteMetricSpace> {
    spaces(202, 20, 6)
}

fn domination_pairs() -> Vec<(FiniteMetricSpace, FiniteMetricSpace)> {
    pairs(404, 20, 1, 5)
}

fn admissible_pairs() -> Vec<(FiniteMetricSpace, FiniteMetricSpace)> {
    pairs(505, 10, 1, 4)
}

fn diameter_pairs() -> Vec<(FiniteMetricSpace, FiniteMetricSpace)> {
    pairs(606, 10, 1, 5)
}

fn identity_coincidence() -> Outcome {
    let mut worst = 0.0_f64;
    for x in identity_spaces() {
        let l = LipNorm::finite_lipschitz(x);
        let g = Bridge::identity(l.algebra());
        for v in [reach(&g, &l, &l), height(&g, &l, &l), bridge_length(&g, &l, &l)] {
            worst = worst.max(v.unwrap().upper.abs());
        }
        let mut reg = Registry::new();
        reg.add_space("a", l.clone()).unwrap();
        reg.add_space("b", l.clone()).unwrap();
        reg.add_bridge("id", "a", "b", g).unwrap();
        worst = worst.max(reg.propinquity_upper_bound("a", "b").unwrap().bound.upper);
        worst = worst.max(reg.propinquity_upper_bound("a", "a").unwrap().bound.upper);
    }
    ok(worst <= IDENTITY_TOL, format!("largest reach/height/length/bound {worst:e}"))
}

/// Transport cost of the only coupling with a point-mass second marginal:
/// every unit of mass at `i` must travel to `y`.
fn forced_coupling_cost(x: &FiniteMetricSpace, p: &[f64], y: usize) -> f64 {
    let n = x.len();
    let mut plan = vec![vec![0.0; n]; n];
    for i in 0..n {
        plan[i][y] = p[i];
    }
    for (i, row) in plan.iter().enumerate() {
        assert!((row.iter().sum::<f64>() - p[i]).abs() < 1e-15);
    }
    (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| plan[i][j] * x.d(i, j)).sum()
}

fn mk_exactness() -> Outcome {
    let mut worst = 0.0_f64;
    let mut r = rng(203);
    let mut count = 0;
    for x in mk_spaces() {
        let l = LipNorm::finite_lipschitz(x.clone());
        let a = l.algebra().clone();
        let n = x.len();
        for i in 0..n {
            for j in 0..n {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                let v = mk_distance(&l, &State::dirac(&a, i).unwrap(), &State::dirac(&a, j).unwrap()).unwrap();
                worst = worst.max((v.value - x.d(i, j)).abs()).max((v.value - forced_coupling_cost(&x, &e, j)).abs());
                count += 1;
            }
        }
        let w: Vec<f64> = (0..n).map(|_| r.gen_range(0.1..1.0)).collect();
        let s: f64 = w.iter().sum();
        let p: Vec<f64> = w.iter().map(|v| v / s).collect();
        let y = r.gen_range(0..n);
        let v = mk_distance(&l, &State::probability(&a, &p).unwrap(), &State::dirac(&a, y).unwrap()).unwrap();
        worst = worst.max((v.value - forced_coupling_cost(&x, &p, y)).abs());
    }
    ok(worst <= MK_TOL, format!("{count} Dirac pairs, largest deviation {worst:e}"))
}

fn leibniz_suites() -> Outcome {
    let mut lips: Vec<(String, LipNorm)> = Vec::new();
    let all_spaces = identity_spaces()
        .into_iter()
        .chain(mk_spaces())
        .chain(domination_pairs().into_iter().flat_map(|(x, y)| [x, y]))
        .chain(admissible_pairs().into_iter().flat_map(|(x, y)| [x, y]))
        .chain(diameter_pairs().into_iter().flat_map(|(x, y)| [x, y]))
        .chain(registry_spaces());
    for (i, x) in all_spaces.enumerate() {
        lips.push((format!("finite[{i}]"), LipNorm::finite_lipschitz(x)));
    }
    for n in 2..=4 {
        for k in 0..n {
            lips.push((format!("fuzzy({n},{k})"), fuzzy_torus(n, k, LengthChoice::Arc).unwrap().lipnorm));
        }
    }
    let failed: Vec<&str> =
        lips.iter().filter(|(_, l)| !check_leibniz(l, LEIBNIZ_SAMPLES, 0x5EED).passed()).map(|(n, _)| n.as_str()).collect();
    ok(failed.is_empty(), format!("{} Lip-norms, failures {failed:?}", lips.len()))
}

fn classical_domination() -> Outcome {
    let mut excess = f64::NEG_INFINITY;
    let mut heights_zero = true;
    for (x, y) in domination_pairs() {
        let g = gh_bruteforce(&x, &y).unwrap().value;
        let cb = classical(&x, &y);
        let len = bridge_length(&cb.bridge, &cb.x, &cb.y).unwrap();
        excess = excess.max(len.upper - (g + 2.0 * CLASSICAL_EPS + CLASSICAL_SLACK));
        let h = height(&cb.bridge, &cb.x, &cb.y).unwrap();
        heights_zero &= h.value == 0.0 && h.upper == 0.0;
    }
    ok(excess <= 0.0 && heights_zero, format!("largest length − (g + 2ε + 1e-6) = {excess:e}, heights zero: {heights_zero}"))
}

fn admissibility() -> Outcome {
    let (mut quotient, mut haus_excess, mut other) = (0.0_f64, f64::NEG_INFINITY, Vec::new());
    for (i, (x, y)) in admissible_pairs().into_iter().enumerate() {
        let cb = classical(&x, &y);
        let len = bridge_length(&cb.bridge, &cb.x, &cb.y).unwrap();
        let l = admissible_sum_lipnorm(&cb.bridge, &cb.x, &cb.y, CLASSICAL_EPS).unwrap();
        let rep = verify_admissibility(&l, ADMISSIBLE_SAMPLES, 0x5EED + i as u64);
        let samples = rep.checks.iter().filter(|c| c.name.starts_with("quotient-")).count();
        if samples != 2 * ADMISSIBLE_SAMPLES {
            other.push(format!("instance {i}: {samples} quotient samples"));
        }
        quotient = quotient.max(rep.worst("quotient-"));
        let h = rep.find("hausdorff").map_or(f64::INFINITY, |c| c.observed);
        haus_excess = haus_excess.max(h - (2.0 * len.upper + CLASSICAL_EPS + HAUSDORFF_SLACK));
        other.extend(rep.failures().filter(|c| !c.name.starts_with("quotient-") && c.name != "hausdorff").map(|c| format!("instance {i}: {}", c.name)));
    }
    ok(
        quotient <= QUOTIENT_TOL && haus_excess <= 0.0 && other.is_empty(),
        format!("largest quotient deviation {quotient:e}, Hausdorff excess {haus_excess:e}, other failures {other:?}"),
    )
}

fn diameter_bound() -> Outcome {
    let mut excess = f64::NEG_INFINITY;
    for (x, y) in diameter_pairs() {
        let (la, lb) = (LipNorm::finite_lipschitz(x), LipNorm::finite_lipschitz(y));
        let g = diameter_bridge(&la, &lb).unwrap();
        let len = bridge_length(&g, &la, &lb).unwrap().upper;
        let diam = state_diameter(&la).unwrap().lower.max(state_diameter(&lb).unwrap().lower);
        excess = excess.max(len - diam - DIAMETER_SLACK_EXACT);
    }
    let t0 = fuzzy_torus(2, 0, LengthChoice::Arc).unwrap().lipnorm;
    let t1 = fuzzy_torus(2, 1, LengthChoice::Arc).unwrap().lipnorm;
    let g = diameter_bridge(&t1, &t0).unwrap();
    let len = bridge_length(&g, &t1, &t0).unwrap().upper;
    let diam = state_diameter(&t1).unwrap().lower.max(state_diameter(&t0).unwrap().lower);
    let fuzzy = len - diam - DIAMETER_SLACK_ITERATIVE;
    ok(excess <= 0.0 && fuzzy <= 0.0, format!("classical excess {excess:e}; fuzzy length {len:.6} vs diameter {diam:.6}"))
}

fn target_sets() -> Outcome {
    if TARGET_TOL_EXACT != TARGET_EXACT || TARGET_TOL_ITERATIVE != TARGET_ITERATIVE {
        return ok(false, "verifier tolerances differ from the acceptance tolerances");
    }
    let mut r = rng(707);
    let mk = |n: usize, r: &mut ChaCha8Rng| FiniteMetricSpace::random(n, r);
    let (x, y, z) = (mk(3, &mut r), mk(4, &mut r), mk(3, &mut r));
    let xy = classical(&x, &y);
    let yz = classical(&y, &z);
    let single = Trek::single(xy.x.clone(), xy.bridge.clone(), xy.y.clone()).unwrap();
    let second = Trek::single(yz.x.clone(), yz.bridge.clone(), yz.y.clone()).unwrap();
    let double = compose(&single, &second).unwrap();
    let t0 = fuzzy_torus(2, 0, LengthChoice::Arc).unwrap().lipnorm;
    let t1 = fuzzy_torus(2, 1, LengthChoice::Arc).unwrap().lipnorm;
    let fuzzy = Trek::single(t1.clone(), diameter_bridge(&t1, &t0).unwrap(), t0).unwrap();
    let mut failures = Vec::new();
    for (name, t, samples) in
        [("single", &single, TARGET_SAMPLES_CLASSICAL), ("two-leg", &double, TARGET_SAMPLES_CLASSICAL), ("fuzzy", &fuzzy, TARGET_SAMPLES_FUZZY)]
    {
        let rep = verify_target_bounds(t, samples, 0x5EED);
        failures.extend(rep.failures().map(|c| format!("{name}/{}: {} > {}", c.name, c.observed, c.bound)));
    }
    ok(failures.is_empty(), format!("violations {:?}", failures.iter().take(5).collect::<Vec<_>>()))
}

fn registry_spaces() -> Vec<FiniteMetricSpace> {
    let mut r = rng(808);
    (0..5).map(|i| FiniteMetricSpace::random(2 + i % 3, &mut r)).collect()
}

fn metric_axioms() -> Outcome {
    let xs = registry_spaces();
    let names = ["p0", "p1", "p2", "p3", "p4"];
    let mut reg = Registry::new();
    for (n, x) in names.iter().zip(&xs) {
        reg.add_space(*n, LipNorm::finite_lipschitz(x.clone())).unwrap();
    }
    let mut problems = Vec::new();
    for (a, b) in [(0, 1), (1, 2), (2, 3), (3, 4), (0, 2)] {
        let cb = classical(&xs[a], &xs[b]);
        let forward = bridge_length(&cb.bridge, &cb.x, &cb.y).unwrap();
        let backward = bridge_length(&inverse_bridge(&cb.bridge), &cb.y, &cb.x).unwrap();
        if (forward.upper - backward.upper).abs() > SYMMETRY_TOL {
            problems.push(format!("inverse of {a}-{b}: {} vs {}", forward.upper, backward.upper));
        }
        reg.add_bridge(format!("c{a}{b}"), names[a], names[b], cb.bridge).unwrap();
    }
    let (l1, l4) = (reg.space("p1").unwrap().clone(), reg.space("p4").unwrap().clone());
    reg.add_bridge("d14", "p1", "p4", diameter_bridge(&l1, &l4).unwrap()).unwrap();
    let t1 = reg.trek(&["c01", "c12"]).unwrap();
    let t2 = reg.trek(&["c23", "c34"]).unwrap();
    let joined = trek_length(&compose(&t1, &t2).unwrap()).unwrap();
    let sum = trek_length(&t1).unwrap().add(&trek_length(&t2).unwrap());
    if joined.value != sum.value || joined.lower != sum.lower || joined.upper != sum.upper {
        problems.push(format!("composed length {joined:?} ≠ sum {sum:?}"));
    }
    let bound = |a: &str, b: &str| reg.propinquity_upper_bound(a, b).unwrap().bound.upper;
    let mut worst_sym = 0.0_f64;
    let mut worst_tri = f64::NEG_INFINITY;
    for a in names {
        for b in names {
            worst_sym = worst_sym.max((bound(a, b) - bound(b, a)).abs());
            for c in names {
                worst_tri = worst_tri.max(bound(a, c) - bound(a, b) - bound(b, c));
            }
        }
    }
    if worst_sym > SYMMETRY_TOL {
        problems.push(format!("asymmetry {worst_sym:e}"));
    }
    if worst_tri > TRIANGLE_TOL {
        problems.push(format!("triangle excess {worst_tri:e}"));
    }
    ok(problems.is_empty(), format!("asymmetry {worst_sym:e}, triangle excess {worst_tri:e}, problems {problems:?}"))
}

fn regression_lp(i: usize, r: &mut ChaCha8Rng) -> LinearProgram<f64> {
    let n = r.gen_range(2..=6);
    let m = r.gen_range(2..=8);
    let obj: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
    let mut lp = if i % 2 == 0 { LinearProgram::new(obj, true) } else { LinearProgram::free(obj, false) };
    for j in 0..n {
        if i % 2 == 1 {
            lp.set_bounds(j, Some(-r.gen_range(0.5..3.0)), Some(r.gen_range(0.5..3.0)));
        }
    }
    for k in 0..m {
        let row: Vec<f64> = (0..n).map(|_| r.gen_range(0.0..2.0)).collect();
        let sense = match k % 3 {
            0 | 1 => Sense::Le,
            _ if i % 2 == 1 => Sense::Ge,
            _ => Sense::Le,
        };
        let rhs = match sense {
            Sense::Ge => -r.gen_range(0.5..2.0),
            _ => r.gen_range(0.5..4.0),
        };
        lp.constrain(row, sense, rhs);
    }
    if i % 5 == 0 {
        let row: Vec<f64> = (0..n).map(|_| r.gen_range(0.1..1.0)).collect();
        let rhs = 0.1 * row.iter().sum::<f64>();
        lp.constrain(row, Sense::Eq, rhs);
    }
    lp
}

fn opnorm_instance(r: &mut ChaCha8Rng) -> (AffineFamily<f64>, Polytope<f64>, Vec<(Vec<f64>, f64)>) {
    let dim = r.gen_range(1..=4);
    let blocks = r.gen_range(2..=6);
    let rows: Vec<(Vec<f64>, f64)> =
        (0..blocks).map(|_| ((0..dim).map(|_| r.gen_range(-1.0..1.0)).collect(), r.gen_range(-2.0..2.0))).collect();
    let phases: Vec<Complex<f64>> = (0..blocks).map(|_| Complex::from_polar(1.0, r.gen_range(0.0..6.28))).collect();
    let entry = |z: usize, v: f64| CMatrix::from_fn(1, 1, |_, _| phases[z] * v);
    let mut fam = AffineFamily::new((0..blocks).map(|z| entry(z, rows[z].1)).collect());
    fam.coeffs = (0..dim).map(|j| (0..blocks).map(|z| entry(z, rows[z].0[j])).collect()).collect();
    let mut poly = Polytope::new(dim);
    for j in 0..dim {
        let mut e = vec![0.0; dim];
        e[j] = 1.0;
        poly.push(e.clone(), 1.0);
        poly.push(e.iter().map(|v| -v).collect(), 1.0);
    }
    (fam, poly, rows)
}

/// `min s` over `|r·t + c| ≤ s` and the box, assembled directly.
fn opnorm_oracle(rows: &[(Vec<f64>, f64)], dim: usize) -> f64 {
    let mut obj = vec![0.0; dim + 1];
    obj[dim] = 1.0;
    let mut lp = LinearProgram::free(obj, false);
    for j in 0..dim {
        lp.set_bounds(j, Some(-1.0), Some(1.0));
    }
    for (row, c) in rows {
        for sign in [1.0, -1.0] {
            let mut a: Vec<f64> = row.iter().map(|v| sign * v).collect();
            a.push(-1.0);
            lp.constrain(a, Sense::Le, -sign * c);
        }
    }
    solve_lp(&lp).unwrap().objective
}

fn solver_regression() -> Outcome {
    let mut r = rng(909);
    let (mut gap, mut residual, mut bad) = (0.0_f64, 0.0_f64, 0);
    for i in 0..LP_PROGRAMS {
        let lp = regression_lp(i, &mut r);
        match solve_lp(&lp) {
            Ok(s) if s.status == LpStatus::Optimal => {
                gap = gap.max((s.objective - s.dual_objective).abs());
                residual = residual.max(s.primal_residual).max(s.dual_residual);
            }
            _ => bad += 1,
        }
    }
    let mut mismatch = 0.0_f64;
    for _ in 0..LP_PROGRAMS {
        let (fam, poly, rows) = opnorm_instance(&mut r);
        let got = min_opnorm_affine(&fam, &poly, &CuttingPlaneOptions::default()).unwrap();
        let want = opnorm_oracle(&rows, fam.dim());
        mismatch = mismatch.max((got.value - want).abs()).max((fam.norm_at(&got.argmin) - want).abs());
    }
    ok(
        bad == 0 && gap <= DUALITY_GAP && residual <= DUALITY_GAP && mismatch <= OPNORM_MATCH,
        format!("non-optimal {bad}, duality gap {gap:e}, residual {residual:e}, opnorm mismatch {mismatch:e}"),
    )
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 9] = [
        ("identity coincidence", Duration::from_secs(5), identity_coincidence),
        ("mk exactness", Duration::from_secs(30), mk_exactness),
        ("leibniz suites", Duration::from_secs(60), leibniz_suites),
        ("classical domination", Duration::from_secs(120), classical_domination),
        ("admissibility", Duration::from_secs(120), admissibility),
        ("diameter bound", Duration::from_secs(120), diameter_bound),
        ("target-set inequalities", Duration::from_secs(180), target_sets),
        ("metric axioms", Duration::from_secs(10), metric_axioms),
        ("solver regression", Duration::from_secs(10), solver_regression),
    ];
    let mut all = true;
    for (i, (name, limit, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = f();
        let elapsed = start.elapsed();
        let passed = out.passed && elapsed <= *limit;
        all &= passed;
        println!(
            "criterion {} {:<24} {} ({:.2}s of {}s) {}",
            i + 1,
            name,
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs(),
            out.detail
        );
    }
    if !all {
        std::process::exit(1);
    }
}

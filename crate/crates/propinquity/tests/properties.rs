use proptest::prelude::*;
use propinquity::algebra::{Algebra, Element, Morphism, State};
use propinquity::bridges::{bridge_length, bridge_seminorm, inverse_bridge, one_level_space, Bridge};
use propinquity::constructions::{classical_bridge, diameter_bridge, gh_bruteforce};
use propinquity::quantum_metric::{eval_lipnorm, mk_distance, FiniteMetricSpace, LipNorm, EXACT_GAP};
use propinquity::solvers::{solve_lp, LinearProgram, LpStatus, Sense};
use propinquity::treks::{compose, snap, trek_length, Registry, Trek, LENGTH_GRID};
use propinquity::CMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn space(seed: u64, max_n: usize) -> FiniteMetricSpace {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let n = r.gen_range(1..=max_n);
    FiniteMetricSpace::random(n, &mut r)
}

fn classical(x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> (LipNorm, Bridge, LipNorm) {
    let cb = classical_bridge(&gh_bruteforce(x, y).unwrap().coupling, Some(1e-3)).unwrap();
    (cb.x, cb.bridge, cb.y)
}

fn block_dims() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..=3, 1..=3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_spaces_are_metric(seed in any::<u64>()) {
        let x = space(seed, 7);
        let n = x.len();
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(x.d(i, j), x.d(j, i));
                prop_assert_eq!(x.d(i, j) > 0.0, i != j);
                for k in 0..n {
                    prop_assert!(x.d(i, k) <= x.d(i, j) + x.d(j, k));
                }
            }
        }
    }

    #[test]
    fn lipnorm_is_a_seminorm(seed in any::<u64>(), t in -5.0f64..5.0) {
        let l = LipNorm::finite_lipschitz(space(seed, 6));
        let mut r = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let a = l.algebra().random_self_adjoint(&mut r);
        let b = l.algebra().random_self_adjoint(&mut r);
        let (la, lb) = (eval_lipnorm(&l, &a).unwrap(), eval_lipnorm(&l, &b).unwrap());
        prop_assert!(eval_lipnorm(&l, &a.add(&b).unwrap()).unwrap() <= la + lb + 1e-10);
        prop_assert!((eval_lipnorm(&l, &a.scale_re(t)).unwrap() - t.abs() * la).abs() <= 1e-10 * (1.0 + la));
        let shifted = a.add(&l.algebra().unit().scale_re(t)).unwrap();
        prop_assert!((eval_lipnorm(&l, &shifted).unwrap() - la).abs() <= 1e-10 * (1.0 + la));
    }

    #[test]
    fn mk_recovers_the_metric(seed in any::<u64>()) {
        let x = space(seed, 5);
        let l = LipNorm::finite_lipschitz(x.clone());
        let a = l.algebra().clone();
        for i in 0..x.len() {
            for j in 0..x.len() {
                let v = mk_distance(&l, &State::dirac(&a, i).unwrap(), &State::dirac(&a, j).unwrap()).unwrap();
                prop_assert!(v.lower <= v.value && v.value <= v.upper);
                prop_assert!(v.gap() <= EXACT_GAP);
                prop_assert!((v.value - x.d(i, j)).abs() <= 1e-7);
            }
        }
    }

    #[test]
    fn mk_is_a_metric_on_states(seed in any::<u64>()) {
        let x = space(seed, 4);
        let l = LipNorm::finite_lipschitz(x);
        let a = l.algebra().clone();
        let mut r = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let prob = |r: &mut ChaCha8Rng| {
            let w: Vec<f64> = (0..a.num_blocks()).map(|_| r.gen_range(0.0..1.0) + 1e-3).collect();
            let s: f64 = w.iter().sum();
            State::probability(&a, &w.iter().map(|v| v / s).collect::<Vec<_>>()).unwrap()
        };
        let (p, q, s) = (prob(&mut r), prob(&mut r), prob(&mut r));
        let d = |u: &State, v: &State| mk_distance(&l, u, v).unwrap().value;
        prop_assert!((d(&p, &q) - d(&q, &p)).abs() <= 1e-9);
        prop_assert!(d(&p, &s) <= d(&p, &q) + d(&q, &s) + 1e-9);
        prop_assert!(d(&p, &p) <= 1e-9);
    }

    #[test]
    fn morphisms_are_star_homomorphisms(dims in block_dims(), mult in 1usize..=2, seed in any::<u64>()) {
        let a = Algebra::new(dims.clone()).unwrap();
        let target = Algebra::new(vec![dims.iter().sum::<usize>() * mult]).unwrap();
        let m = Morphism::standard(&a, &target, vec![vec![mult; dims.len()]]).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let (x, y) = (a.random_self_adjoint(&mut r), a.random_self_adjoint(&mut r));
        let lhs = m.apply(&x.mul(&y).unwrap()).unwrap();
        let rhs = m.apply(&x).unwrap().mul(&m.apply(&y).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
        prop_assert!(m.apply(&a.unit()).unwrap().max_abs_diff(&target.unit()) <= 1e-15);
        prop_assert!((m.apply(&x).unwrap().op_norm() - x.op_norm()).abs() <= 1e-10);
    }

    #[test]
    fn bridge_seminorm_leibniz_estimate(seed in any::<u64>()) {
        let (lx, g, ly) = classical(&space(seed, 4), &space(seed ^ 3, 4));
        let mut r = ChaCha8Rng::seed_from_u64(seed ^ 4);
        let (a, c) = (lx.algebra().random_self_adjoint(&mut r), lx.algebra().random_self_adjoint(&mut r));
        let (b, d) = (ly.algebra().random_self_adjoint(&mut r), ly.algebra().random_self_adjoint(&mut r));
        let lhs = bridge_seminorm(&g, &a.mul(&c).unwrap(), &b.mul(&d).unwrap()).unwrap();
        let rhs = a.op_norm() * bridge_seminorm(&g, &c, &d).unwrap() + bridge_seminorm(&g, &a, &b).unwrap() * d.op_norm();
        prop_assert!(lhs <= rhs + 1e-10);
        prop_assert!(bridge_seminorm(&g, &lx.algebra().unit(), &ly.algebra().zero()).unwrap() >= 1.0 - 1e-12);
    }

    #[test]
    fn inverse_bridges_preserve_level_and_length(seed in any::<u64>()) {
        let (lx, g, ly) = classical(&space(seed, 4), &space(seed ^ 5, 4));
        let h = inverse_bridge(&g);
        prop_assert_eq!(&inverse_bridge(&h), &g);
        prop_assert_eq!(one_level_space(h.d(), h.pivot()).dim(), one_level_space(g.d(), g.pivot()).dim());
        let (f, b) = (bridge_length(&g, &lx, &ly).unwrap(), bridge_length(&h, &ly, &lx).unwrap());
        prop_assert!((f.upper - b.upper).abs() <= 1e-7);
    }

    #[test]
    fn snapping_is_outward_and_additive(v in 0.0f64..10.0, lo in 0.0f64..1.0, hi in 0.0f64..1.0, w in 0.0f64..10.0) {
        use propinquity::quantum_metric::{CertifiedValue, Method};
        let a = snap(&CertifiedValue::bounds(v - lo, v + hi, v, Method::ExactLp, 0));
        let b = snap(&CertifiedValue::bounds(w, w, w, Method::ExactLp, 0));
        prop_assert!(a.lower <= v - lo && a.upper >= v + hi);
        prop_assert!(a.lower <= a.value && a.value <= a.upper);
        for x in [a.lower, a.value, a.upper] {
            prop_assert_eq!((x / LENGTH_GRID).fract(), 0.0);
        }
        let s = a.add(&b);
        prop_assert_eq!(snap(&s), s.clone());
        prop_assert_eq!(s.upper - b.upper, a.upper);
    }

    #[test]
    fn trek_length_is_additive(seed in any::<u64>()) {
        let (x, y, z) = (space(seed, 3), space(seed ^ 6, 3), space(seed ^ 7, 3));
        let (la, g, lb) = classical(&x, &y);
        let (_, h, lc) = classical(&y, &z);
        let first = Trek::single(la, g, lb.clone()).unwrap();
        let second = Trek::single(lb, h, lc).unwrap();
        let joined = trek_length(&compose(&first, &second).unwrap()).unwrap();
        let sum = trek_length(&first).unwrap().add(&trek_length(&second).unwrap());
        prop_assert_eq!(joined.upper, sum.upper);
        prop_assert_eq!(joined.lower, sum.lower);
        prop_assert_eq!(joined.value, sum.value);
    }

    #[test]
    fn gh_is_symmetric_and_bounded(seed in any::<u64>()) {
        let (x, y) = (space(seed, 4), space(seed ^ 8, 4));
        let g = gh_bruteforce(&x, &y).unwrap();
        prop_assert_eq!(g.value, gh_bruteforce(&y, &x).unwrap().value);
        prop_assert_eq!(gh_bruteforce(&x, &x).unwrap().value, 0.0);
        prop_assert!(g.value <= x.diameter().max(y.diameter()) / 2.0 + 1e-12);
        prop_assert!(g.coupling.hausdorff() >= g.value - 1e-12);
    }

    #[test]
    fn lp_duality_closes(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let (n, m) = (r.gen_range(1..=5), r.gen_range(1..=6));
        let mut lp = LinearProgram::<f64>::new((0..n).map(|_| r.gen_range(-1.0..1.0)).collect(), r.gen_bool(0.5));
        for _ in 0..m {
            lp.constrain((0..n).map(|_| r.gen_range(0.0..2.0)).collect(), Sense::Le, r.gen_range(0.1..3.0));
        }
        lp.constrain(vec![1.0; n], Sense::Le, 10.0);
        let s = solve_lp(&lp).unwrap();
        prop_assert_eq!(s.status, LpStatus::Optimal);
        prop_assert!((s.objective - s.dual_objective).abs() <= 1e-9);
        for (row, rhs) in lp.rows.iter().zip(&lp.rhs) {
            prop_assert!(row.iter().zip(&s.x).map(|(a, b)| a * b).sum::<f64>() <= rhs + 1e-9);
        }
    }

    #[test]
    fn hermitian_eigendecomposition_reconstructs(dim in 1usize..=5, seed in any::<u64>()) {
        let a = Algebra::full_matrix(dim).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let x = a.random_self_adjoint(&mut r);
        let m = &x.blocks()[0];
        let (vals, vecs) = m.eigh();
        let d = CMatrix::from_real_diag(&vals);
        prop_assert!(vecs.matmul(&d).matmul(&vecs.adjoint()).sub(m).max_abs() <= 1e-10);
        prop_assert!((m.op_norm() - vals.iter().fold(0.0f64, |s, v| s.max(v.abs()))).abs() <= 1e-10);
    }

    #[test]
    fn registry_bounds_are_symmetric_and_subadditive(seed in any::<u64>(), edges in prop::collection::vec((0usize..4, 0usize..4), 1..6)) {
        let names = ["a", "b", "c", "d"];
        let xs: Vec<FiniteMetricSpace> = (0..4).map(|i| space(seed ^ (i as u64 + 10), 3)).collect();
        let mut reg = Registry::new();
        for (n, x) in names.iter().zip(&xs) {
            reg.add_space(*n, LipNorm::finite_lipschitz(x.clone())).unwrap();
        }
        for (k, &(i, j)) in edges.iter().enumerate() {
            let (_, g, _) = classical(&xs[i], &xs[j]);
            reg.add_bridge(format!("e{k}"), names[i], names[j], g).unwrap();
        }
        let bound = |a: &str, b: &str| reg.propinquity_upper_bound(a, b).ok().map(|p| p.bound.upper);
        for a in names {
            for b in names {
                prop_assert_eq!(bound(a, b), bound(b, a));
                for c in names {
                    if let (Some(ac), Some(ab), Some(bc)) = (bound(a, c), bound(a, b), bound(b, c)) {
                        prop_assert!(ac <= ab + bc + 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn diameter_bridge_images_commute(seed in any::<u64>()) {
        let (la, lb) = (LipNorm::finite_lipschitz(space(seed, 3)), LipNorm::finite_lipschitz(space(seed ^ 9, 3)));
        let g = diameter_bridge(&la, &lb).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let x = g.pi_a().apply(&la.algebra().random_self_adjoint(&mut r)).unwrap();
        let y = g.pi_b().apply(&lb.algebra().random_self_adjoint(&mut r)).unwrap();
        let comm: Element = x.mul(&y).unwrap().sub(&y.mul(&x).unwrap()).unwrap();
        prop_assert!(comm.op_norm() <= 1e-12);
    }
}

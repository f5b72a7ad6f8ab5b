use propinquity::algebra::{Algebra, State};
use propinquity::constructions::{admissible_sum_lipnorm, classical_bridge, fuzzy_torus, gh_bruteforce, LengthChoice};
use propinquity::quantum_metric::{check_leibniz, eval_lipnorm, kernel_check, mk_distance, state_diameter, FiniteMetricSpace, LipNorm};
use propinquity::C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn mixed_state_sits_halfway_to_a_point() {
    let x = FiniteMetricSpace::two_point(1.0).unwrap();
    let a = x.algebra();
    let l = LipNorm::finite_lipschitz(x);
    let half = State::probability(&a, &[0.5, 0.5]).unwrap();
    let p = State::dirac(&a, 0).unwrap();
    let d = mk_distance(&l, &half, &p).unwrap();
    assert!((d.value - 0.5).abs() <= 1e-9, "{d:?}");
}

#[test]
fn state_diameter_is_the_metric_diameter() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    for n in (0..20).map(|i| 2 + i % 4) {
        let x = FiniteMetricSpace::random(n, &mut rng);
        let want = x.diameter();
        let d = state_diameter(&LipNorm::finite_lipschitz(x)).unwrap();
        assert!(d.lower <= want + 1e-7 && want <= d.upper + 1e-7, "{d:?} vs {want}");
        assert!((d.value - want).abs() <= 1e-7);
    }
}

#[test]
fn admissible_sum_vanishes_on_the_unit() {
    let x = FiniteMetricSpace::two_point(1.0).unwrap();
    let y = FiniteMetricSpace::two_point(2.0).unwrap();
    let cb = classical_bridge(&gh_bruteforce(&x, &y).unwrap().coupling, Some(1e-3)).unwrap();
    let l = admissible_sum_lipnorm(&cb.bridge, &cb.x, &cb.y, 1e-3).unwrap();
    let unit = l.algebra().unit();
    assert!(eval_lipnorm(&l, &unit).unwrap() <= 1e-12);
    assert!(kernel_check(&l).passes());
    let r = check_leibniz(&l, 50, 3);
    assert!(r.passed(), "{r:?}");
}

#[test]
fn fuzzy_tori_are_ergodic() {
    for n in 2..=4 {
        for length in [LengthChoice::Arc, LengthChoice::Chord] {
            let t = fuzzy_torus(n, 1, length).unwrap();
            let k = kernel_check(&t.lipnorm);
            assert!(k.passes(), "n = {n}: {k:?}");
        }
    }
}

#[test]
fn scalar_elements_have_zero_lipnorm() {
    let t = fuzzy_torus(2, 1, LengthChoice::Arc).unwrap();
    let s = t.algebra.scalar(C64::new(3.0, 0.0));
    assert!(eval_lipnorm(&t.lipnorm, &s).unwrap() <= 1e-12);
    let a = Algebra::new(vec![1, 2]).unwrap();
    let l = LipNorm::polytope(&a, vec![vec![1.0, -1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, -1.0, 0.0, 0.0]]).unwrap();
    assert!(eval_lipnorm(&l, &a.unit()).unwrap() <= 1e-12);
}

use proptest::prelude::*;

use qstiefel_core::fock::{QParam, TruncOp, Window, C64};
use qstiefel_core::qgrp::{enumerate_am, turn_distance, AngleVector};
use qstiefel_core::stiefel::{
    build_generators, check_relations, check_vanishing, classify, extract_tower,
    verify_closed_form, StiefelError, StiefelGenerators, StiefelParam,
};

/// `(n, m, a, turns, q)` kept small enough for a cutoff of 5.
fn datum() -> impl Strategy<Value = (usize, usize, Vec<usize>, Vec<f64>, f64)> {
    (2usize..5)
        .prop_flat_map(|n| (Just(n), 1..n))
        .prop_flat_map(|(n, m)| {
            (
                Just(n),
                Just(m),
                prop::sample::select(enumerate_am(n, m)),
                prop::collection::vec(0.0f64..1.0, m),
                0.2f64..0.8,
            )
        })
}

fn generators(n: usize, m: usize, a: &[usize], turns: &[f64], q: f64, d: usize) -> (StiefelParam, StiefelGenerators) {
    let p = StiefelParam::new(n, m, a.to_vec(), AngleVector::from_turns(turns)).unwrap();
    let g = build_generators(&p, QParam::new(q).unwrap(), d).unwrap();
    (p, g)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn built_reps_satisfy_all_families((n, m, a, turns, q) in datum()) {
        let (_, g) = generators(n, m, &a, &turns, q, 5);
        let r = check_relations(&g, Window::new(2), 1e-10).unwrap();
        prop_assert!(r.pass(), "{:?}", r.failing());
    }

    #[test]
    fn classification_round_trips((n, m, a, turns, q) in datum()) {
        let (p, g) = generators(n, m, &a, &turns, q, 5);
        let (cls, tower) = classify(&g, Window::new(2), 1e-10, 1e-8).unwrap();
        prop_assert_eq!(&cls.a, &a);
        prop_assert_eq!(cls.multiplicity, 1);
        for (x, y) in cls.t.turns().iter().zip(&turns) {
            prop_assert!(turn_distance(*x, *y) <= 1e-8);
        }
        prop_assert_eq!(tower.ranks(), p.ranks());
        prop_assert!(check_vanishing(&g, &tower, Window::new(2)).unwrap().pass(1e-9));
    }

    #[test]
    fn tower_matches_the_closed_form((n, m, a, turns, q) in datum()) {
        let (p, g) = generators(n, m, &a, &turns, q, 5);
        let tower = extract_tower(&g, Window::new(2), 1e-10, 1e-8).unwrap();
        let r = verify_closed_form(&tower, &p, QParam::new(q).unwrap(), 5, 1e-9).unwrap();
        prop_assert!(r.pass(), "{:?}", r);
    }

    #[test]
    fn direct_sums_have_multiplicity_two((n, m, a, turns, q) in datum()) {
        let (_, g) = generators(n, m, &a, &turns, q, 4);
        let s = g.direct_sum(&g).unwrap();
        prop_assert!(check_relations(&s, Window::new(1), 1e-10).unwrap().pass());
        let (cls, _) = classify(&s, Window::new(1), 1e-10, 1e-8).unwrap();
        prop_assert_eq!(&cls.a, &a);
        prop_assert_eq!(cls.multiplicity, 2);
        for (x, y) in cls.t.turns().iter().zip(&turns) {
            prop_assert!(turn_distance(*x, *y) <= 1e-8);
        }
    }

    #[test]
    fn perturbations_are_detected(
        (n, m, a, turns, q) in datum(),
        row in 0usize..3,
        col in 0usize..4,
        eps in 1e-6f64..1e-2,
    ) {
        let (_, g) = generators(n, m, &a, &turns, q, 5);
        let i = n - m + 1 + row % m;
        let k = 1 + col % n;
        let bump = TruncOp::identity_on(g.frame().clone()).scaled(C64::new(eps, 0.0));
        let bad = g.with_generator(i, k, g.w(i, k) + &bump).unwrap();
        let r = check_relations(&bad, Window::new(2), 1e-10).unwrap();
        prop_assert!(r.max_residual() > eps * 1e-3, "eps {} residual {}", eps, r.max_residual());
    }
}

#[test]
fn mixed_angles_are_rejected() {
    let (_, g) = generators(3, 1, &[1], &[0.25], 0.5, 6);
    let (_, h) = generators(3, 1, &[1], &[0.75], 0.5, 6);
    let s = g.direct_sum(&h).unwrap();
    assert!(matches!(
        classify(&s, Window::new(2), 1e-10, 1e-8),
        Err(StiefelError::ClassificationFailed { .. })
    ));
}

#[test]
fn six_three_two_has_ranks_four_four() {
    let (p, g) = generators(6, 2, &[3, 2], &[0.2, 0.9], 0.5, 4);
    assert_eq!(p.ranks(), vec![4, 4]);
    let (cls, tower) = classify(&g, Window::new(1), 1e-10, 1e-8).unwrap();
    assert_eq!(cls.a, vec![3, 2]);
    assert_eq!(tower.levels[0].c, 3);
}

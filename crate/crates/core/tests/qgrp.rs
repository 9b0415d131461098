use proptest::prelude::*;

use qstiefel_core::fock::{QParam, TruncOp, Window, C64};
use qstiefel_core::qgrp::{
    check_admissible, convolve, counit_rep, elementary_rep, enumerate_am, full_rep, to_turns,
    torus_rep, turn_distance, weyl_word, AngleVector, GenRep,
};

/// Inversion count of the permutation `s_{w_1} ⋯ s_{w_k}` of `1..=n`.
fn inversions(letters: &[usize], n: usize) -> usize {
    let mut perm: Vec<usize> = (0..n).collect();
    for &s in letters {
        perm.swap(s - 1, s);
    }
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| perm[i] > perm[j])
        .count()
}

fn max_rep_diff(a: &GenRep, b: &GenRep) -> f64 {
    assert_eq!(a.n(), b.n());
    let mut worst = 0.0f64;
    for r in 1..=a.n() {
        for c in 1..=a.n() {
            let x = a.entry(r, c);
            let y = b.entry(r, c).reshaped(x.shape().clone()).unwrap();
            worst = worst.max((&x - &y).max_abs());
        }
    }
    worst
}

#[test]
fn word_lengths_match_formula() {
    for n in 2..=6 {
        for m in 1..n {
            for a in enumerate_am(n, m) {
                let w = weyl_word(&a, n).unwrap();
                let formula: usize = a.iter().enumerate().map(|(j, &aj)| n - j - aj).sum();
                assert_eq!(w.len(), formula, "n={n} a={a:?}");
                assert_eq!(inversions(w.letters(), n), w.len(), "n={n} a={a:?} is not reduced");
            }
        }
    }
}

#[test]
fn admissible_set_counts() {
    for n in 2..=6 {
        for m in 1..n {
            let all = enumerate_am(n, m);
            let expect: usize = (0..m).map(|j| n - j).product();
            assert_eq!(all.len(), expect);
            assert!(all.iter().all(|a| check_admissible(a, n).is_ok()));
            let mut sorted = all.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted.len(), all.len());
        }
    }
}

#[test]
fn distinct_a_give_distinct_words() {
    for n in 2..=5 {
        let words: Vec<Vec<usize>> = enumerate_am(n, n - 1)
            .iter()
            .map(|a| weyl_word(a, n).unwrap().letters().to_vec())
            .collect();
        let mut unique = words.clone();
        unique.sort();
        unique.dedup();
        assert_eq!(unique.len(), words.len());
    }
}

#[test]
fn elementary_reps_are_unitary() {
    let q = QParam::new(0.45).unwrap();
    for n in 2..=5 {
        for i in 1..n {
            let rep = elementary_rep(i, n, q, 10).unwrap();
            assert!(rep.unitarity_residual(Window::new(1)).unwrap() <= 1e-14);
        }
    }
}

#[test]
fn torus_convolution_multiplies_angles() {
    let s = AngleVector::from_turns(&[0.1, 0.25]);
    let t = AngleVector::from_turns(&[0.2, 0.5]);
    let st = convolve(&torus_rep(&s, 3).unwrap(), &torus_rep(&t, 3).unwrap()).unwrap();
    let direct = AngleVector::new(s.as_slice().iter().zip(t.as_slice()).map(|(x, y)| x * y).collect()).unwrap();
    let expect = torus_rep(&direct, 3).unwrap();
    assert!(max_rep_diff(&st, &expect) <= 1e-15);
}

#[test]
fn turns_round_trip() {
    for k in 0..64 {
        let x = k as f64 / 64.0;
        let z = C64::from_polar(1.0, std::f64::consts::TAU * x);
        assert!(turn_distance(to_turns(z), x) <= 1e-15);
        assert!((0.0..1.0).contains(&to_turns(z)));
    }
    assert!((turn_distance(0.99, 0.01) - 0.02).abs() < 1e-15);
}

proptest! {
    #[test]
    fn convolution_is_associative(
        n in 2usize..5,
        letters in prop::collection::vec(1usize..5, 3),
        q in 0.1f64..0.9,
    ) {
        let q = QParam::new(q).unwrap();
        let reps: Vec<GenRep> = letters
            .iter()
            .map(|&i| elementary_rep(1 + (i - 1) % (n - 1), n, q, 4).unwrap())
            .collect();
        let left = convolve(&convolve(&reps[0], &reps[1]).unwrap(), &reps[2]).unwrap();
        let right = convolve(&reps[0], &convolve(&reps[1], &reps[2]).unwrap()).unwrap();
        prop_assert_eq!(left.shape(), right.shape());
        prop_assert!(max_rep_diff(&left, &right) <= 1e-14);
    }

    #[test]
    fn counit_is_a_unit(n in 2usize..6, i in 1usize..6, q in 0.1f64..0.9) {
        let q = QParam::new(q).unwrap();
        let rep = elementary_rep(1 + (i - 1) % (n - 1), n, q, 5).unwrap();
        let e = counit_rep(n).unwrap();
        prop_assert!(max_rep_diff(&convolve(&e, &rep).unwrap(), &rep) <= 1e-15);
        prop_assert!(max_rep_diff(&convolve(&rep, &e).unwrap(), &rep) <= 1e-15);
    }

    #[test]
    fn full_reps_are_windowed_unitary(
        (n, a) in (2usize..5).prop_flat_map(|n| (Just(n), prop::sample::select(enumerate_am(n, n - 1)))),
        turns in prop::collection::vec(0.0f64..1.0, 4),
        q in 0.1f64..0.9,
    ) {
        let q = QParam::new(q).unwrap();
        let t = AngleVector::from_turns(&turns[..a.len()]);
        let rep = full_rep(&t, &a, n, q, 6).unwrap();
        let r = rep.unitarity_residual(Window::new(2)).unwrap();
        prop_assert!(r <= 1e-13, "n={} a={:?} residual {}", n, a, r);
    }

    #[test]
    fn angle_enters_the_first_column(
        turns in prop::collection::vec(0.0f64..1.0, 2),
        q in 0.2f64..0.8,
    ) {
        // The torus factor is diagonal with τ(u_3^3) = t_1, so the image of
        // u_3^1 is t_1 times its image at t = 1.
        let q = QParam::new(q).unwrap();
        let t = AngleVector::from_turns(&turns);
        let rep = full_rep(&t, &[1, 1], 3, q, 6).unwrap();
        let ones = full_rep(&AngleVector::ones(2), &[1, 1], 3, q, 6).unwrap();
        let x = rep.entry(3, 1).get(0, 0);
        let y = ones.entry(3, 1).get(0, 0);
        prop_assert!(y.norm() > 0.0);
        prop_assert!((x / y - t.as_slice()[0]).norm() <= 1e-12);
    }
}

#[test]
fn empty_word_is_the_torus() {
    let q = QParam::new(0.5).unwrap();
    let t = AngleVector::from_turns(&[0.3]);
    let rep = full_rep(&t, &[3], 3, q, 6).unwrap();
    assert_eq!(rep.dim(), 1);
    let torus = torus_rep(&t.padded(2).unwrap(), 3).unwrap();
    assert!(max_rep_diff(&rep, &torus) <= 1e-15);
    let id = TruncOp::scalar(C64::new(1.0, 0.0));
    assert_eq!(rep.entry(2, 2).get(0, 0), id.get(0, 0));
}

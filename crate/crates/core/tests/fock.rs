use proptest::prelude::*;

use qstiefel_core::fock::{
    diag_weight, lowering, q_number, raising, shift_left, tensor, window_equal, window_norm,
    FactorShape, Frame, QParam, TruncOp, Window, C64,
};

fn dense(d: usize, entries: &[(f64, f64)]) -> TruncOp {
    let triplets: Vec<_> = entries
        .iter()
        .enumerate()
        .map(|(k, &(re, im))| (k / d, k % d, C64::new(re, im)))
        .collect();
    TruncOp::from_triplets(Frame::plain(FactorShape::fock(d).unwrap()), triplets).unwrap()
}

fn square(d: usize) -> impl Strategy<Value = TruncOp> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d * d).prop_map(move |e| dense(d, &e))
}

fn any_square() -> impl Strategy<Value = TruncOp> {
    (2usize..5).prop_flat_map(square)
}

/// Kronecker product by explicit index arithmetic, leftmost factor most significant.
fn kron_oracle(a: &TruncOp, b: &TruncOp) -> Vec<Vec<C64>> {
    let (da, db) = (a.dim(), b.dim());
    let mut out = vec![vec![C64::new(0.0, 0.0); da * db]; da * db];
    for i1 in 0..da {
        for j1 in 0..da {
            for i2 in 0..db {
                for j2 in 0..db {
                    out[i1 * db + i2][j1 * db + j2] = a.get(i1, j1) * b.get(i2, j2);
                }
            }
        }
    }
    out
}

fn max_diff(a: &TruncOp, b: &TruncOp) -> f64 {
    (a - b).max_abs()
}

#[test]
fn shift_adjoint_products() {
    for d in 2..10 {
        let s = shift_left(d).unwrap();
        let ss = &s.adjoint() * &s;
        let s_s = &s * &s.adjoint();
        for k in 0..d {
            assert_eq!(ss.get(k, k), C64::new(if k == 0 { 0.0 } else { 1.0 }, 0.0));
            assert_eq!(s_s.get(k, k), C64::new(if k == d - 1 { 0.0 } else { 1.0 }, 0.0));
        }
        assert_eq!(ss.nnz(), d - 1);
        assert_eq!(s_s.nnz(), d - 1);
    }
}

#[test]
fn q_numbers_are_powers() {
    let q = QParam::new(0.3).unwrap();
    let op = q_number(q, 7).unwrap();
    for k in 0..7 {
        let expect = (0..k).fold(1.0, |acc, _| acc * 0.3);
        assert!((op.get(k, k).re - expect).abs() <= 1e-16);
    }
}

proptest! {
    #[test]
    fn shift_adjoint_is_transpose(d in 2usize..12) {
        let s = shift_left(d).unwrap();
        let t = s.adjoint();
        for r in 0..d {
            for c in 0..d {
                prop_assert_eq!(t.get(r, c), s.get(c, r).conj());
            }
        }
    }

    #[test]
    fn model_identity_is_exact(q in 0.01f64..0.99, d in 2usize..20) {
        // S*(1 − q^{2N+2})S + q^{2N} = 1, with no truncation effect at all.
        let qp = QParam::new(q).unwrap();
        let s = shift_left(d).unwrap();
        let defect = diag_weight(qp, d, |q, k| C64::new(1.0 - q.powi(2 * k as i32 + 2), 0.0)).unwrap();
        let q2n = diag_weight(qp, d, |q, k| C64::new(q.powi(2 * k as i32), 0.0)).unwrap();
        let lhs = &(&(&s.adjoint() * &defect) * &s) + &q2n;
        let id = TruncOp::identity(d);
        prop_assert!(max_diff(&lhs, &id) <= 1e-15);
    }

    #[test]
    fn lowering_raising_are_adjoint(q in 0.01f64..0.99, d in 2usize..16) {
        let qp = QParam::new(q).unwrap();
        let diff = max_diff(&lowering(qp, d).unwrap().adjoint(), &raising(qp, d).unwrap());
        prop_assert_eq!(diff, 0.0);
    }

    #[test]
    fn tensor_matches_index_oracle(a in any_square(), b in any_square()) {
        let t = tensor(&[a.clone(), b.clone()]).unwrap();
        let oracle = kron_oracle(&a, &b);
        for (r, row) in oracle.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                prop_assert!((t.get(r, c) - v).norm() <= 1e-15);
            }
        }
    }

    #[test]
    fn tensor_is_associative(a in any_square(), b in any_square(), c in any_square()) {
        let left = tensor(&[tensor(&[a.clone(), b.clone()]).unwrap(), c.clone()]).unwrap();
        let right = tensor(&[a.clone(), tensor(&[b.clone(), c.clone()]).unwrap()]).unwrap();
        let flat = tensor(&[a, b, c]).unwrap();
        let shape = flat.shape().clone();
        let left = left.reshaped(shape.clone()).unwrap();
        let right = right.reshaped(shape).unwrap();
        prop_assert!(max_diff(&left, &right) <= 1e-15);
        prop_assert!(max_diff(&left, &flat) <= 1e-15);
    }

    #[test]
    fn tensor_is_multiplicative(
        (a1, a2) in (2usize..4).prop_flat_map(|d| (square(d), square(d))),
        (b1, b2) in (2usize..4).prop_flat_map(|d| (square(d), square(d))),
    ) {
        let lhs = &tensor(&[a1.clone(), b1.clone()]).unwrap() * &tensor(&[a2.clone(), b2.clone()]).unwrap();
        let rhs = tensor(&[&a1 * &a2, &b1 * &b2]).unwrap();
        prop_assert!(max_diff(&lhs, &rhs) <= 1e-13);
    }

    #[test]
    fn adjoint_is_involutive_and_antimultiplicative(a in square(4), b in square(4)) {
        prop_assert_eq!(max_diff(&a.adjoint().adjoint(), &a), 0.0);
        let lhs = (&a * &b).adjoint();
        let rhs = &b.adjoint() * &a.adjoint();
        prop_assert!(max_diff(&lhs, &rhs) <= 1e-14);
    }

    #[test]
    fn window_comparison_is_symmetric(a in square(6), b in square(6), margin in 0usize..3) {
        let w = Window::new(margin);
        let x = window_equal(&a, &b, w, 0.5).unwrap();
        let y = window_equal(&b, &a, w, 0.5).unwrap();
        prop_assert_eq!(x, y);
        prop_assert!(x.max_inside <= x.max_overall);
    }

    #[test]
    fn wider_margin_sees_less(a in square(7)) {
        let mut last = f64::INFINITY;
        for margin in 0..4 {
            let v = window_norm(&a, Window::new(margin)).unwrap();
            prop_assert!(v <= last);
            last = v;
        }
        prop_assert_eq!(window_norm(&a, Window::new(0)).unwrap(), a.max_abs());
    }

    #[test]
    fn window_ignores_the_cut(d in 4usize..12, margin in 1usize..3) {
        // S S* differs from 1 only at the top index, which any margin drops.
        let s = shift_left(d).unwrap();
        let id = TruncOp::identity(d);
        let r = window_equal(&(&s * &s.adjoint()), &id, Window::new(margin), 0.0).unwrap();
        prop_assert!(r.equal);
        prop_assert_eq!(r.max_overall, 1.0);
    }
}

#[test]
fn window_too_wide_is_an_error() {
    let a = TruncOp::identity(4);
    assert!(window_norm(&a, Window::new(4)).is_err());
    assert!(window_norm(&a, Window::new(3)).is_ok());
}

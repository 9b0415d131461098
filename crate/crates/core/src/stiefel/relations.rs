use super::{StiefelError, StiefelGenerators};
use crate::fock::{FockError, RelationReport, TruncOp, Window};
use crate::odqs::{
    check_odqs, Combo, OpTuple, ADJOINT_Q_COMMUTE, Q_COMMUTE, ROW_UNITARITY, SELF_COMMUTATOR,
};

/// `w_k^i w_k^j = q w_k^j w_k^i` for `i < j`.
pub const COLUMN_Q_COMMUTE: &str = "column_q_commute";
/// `w_k^i w_l^i = q w_l^i w_k^i` for `k < l`.
pub const ROW_Q_COMMUTE: &str = "row_q_commute";
/// `w_k^i w_l^j = w_l^j w_k^i` for `i < j`, `k > l`.
pub const CROSS_COMMUTE: &str = "cross_commute";
/// `w_k^i w_l^j = w_l^j w_k^i + (q^{−1} − q) w_l^i w_k^j` for `i > j`, `k > l`.
pub const CROSS_EXCHANGE: &str = "cross_exchange";
/// `(w_k^i)* w_l^j = w_l^j (w_k^i)*` for `i ≠ j`, `k ≠ l`.
pub const ADJOINT_CROSS_COMMUTE: &str = "adjoint_cross_commute";
/// `(w_k^i)* w_l^i + (1−q²) Σ_{j>i} (w_k^j)* w_l^j = q w_l^i (w_k^i)*` for `k ≠ l`.
pub const ADJOINT_ROW_EXCHANGE: &str = "adjoint_row_exchange";
/// `w_k^i (w_k^j)* + (1−q²) Σ_{l<k} w_l^i (w_l^j)* = q (w_k^j)* w_k^i` for `i ≠ j`.
pub const ADJOINT_COLUMN_EXCHANGE: &str = "adjoint_column_exchange";
/// `(w_k^i)* w_k^i + (1−q²) Σ_{j>i} (w_k^j)* w_k^j
///  = w_k^i (w_k^i)* + (1−q²) Σ_{l<k} w_l^i (w_l^i)*`.
pub const NORM_BALANCE: &str = "norm_balance";
/// `Σ_k w_k^i (w_k^j)* = δ_{ij}`.
pub const ROW_ORTHONORMALITY: &str = "row_orthonormality";

/// Windowed residuals of all nine relation families over every admissible
/// index combination.
pub fn check_relations(g: &StiefelGenerators, w: Window, tol: f64) -> Result<RelationReport, StiefelError> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(FockError::InvalidTolerance(tol).into());
    }
    let q = g.q.value();
    let s = 1.0 - q * q;
    let n = g.n;
    let frame = g.frame();
    let mask = w.mask(frame)?;
    let rows: Vec<usize> = g.row_range().collect();
    let adj: Vec<Vec<TruncOp>> = g
        .rows
        .iter()
        .map(|r| r.iter().map(TruncOp::adjoint).collect())
        .collect();
    let x = |i: usize, k: usize| g.w(i, k);
    let xa = |i: usize, k: usize| &adj[i + g.m - n - 1][k - 1];
    let combo = || Combo::new(frame, &mask);

    let mut report = RelationReport::new(w.margin(), tol);
    for name in [
        COLUMN_Q_COMMUTE,
        ROW_Q_COMMUTE,
        CROSS_COMMUTE,
        CROSS_EXCHANGE,
        ADJOINT_CROSS_COMMUTE,
        ADJOINT_ROW_EXCHANGE,
        ADJOINT_COLUMN_EXCHANGE,
        NORM_BALANCE,
        ROW_ORTHONORMALITY,
    ] {
        report.family(name);
    }

    for k in 1..=n {
        for &i in &rows {
            for &j in rows.iter().filter(|&&j| j > i) {
                let r = combo().product(1.0, x(i, k), x(j, k)).product(-q, x(j, k), x(i, k)).residual();
                report.record(COLUMN_Q_COMMUTE, r, || format!("i={i} j={j} k={k}"));
            }
        }
    }
    for &i in &rows {
        for k in 1..=n {
            for l in k + 1..=n {
                let r = combo().product(1.0, x(i, k), x(i, l)).product(-q, x(i, l), x(i, k)).residual();
                report.record(ROW_Q_COMMUTE, r, || format!("i={i} k={k} l={l}"));
            }
        }
    }
    for &i in &rows {
        for &j in &rows {
            for k in 1..=n {
                for l in 1..k {
                    if i < j {
                        let r = combo().product(1.0, x(i, k), x(j, l)).product(-1.0, x(j, l), x(i, k)).residual();
                        report.record(CROSS_COMMUTE, r, || format!("i={i} j={j} k={k} l={l}"));
                    }
                    if i > j {
                        let r = combo()
                            .product(1.0, x(i, k), x(j, l))
                            .product(-1.0, x(j, l), x(i, k))
                            .product(-(1.0 / q - q), x(i, l), x(j, k))
                            .residual();
                        report.record(CROSS_EXCHANGE, r, || format!("i={i} j={j} k={k} l={l}"));
                    }
                }
            }
        }
    }
    for &i in &rows {
        for &j in rows.iter().filter(|&&j| j != i) {
            for k in 1..=n {
                for l in (1..=n).filter(|&l| l != k) {
                    let r = combo().product(1.0, xa(i, k), x(j, l)).product(-1.0, x(j, l), xa(i, k)).residual();
                    report.record(ADJOINT_CROSS_COMMUTE, r, || format!("i={i} j={j} k={k} l={l}"));
                }
            }
        }
    }
    for &i in &rows {
        for k in 1..=n {
            for l in (1..=n).filter(|&l| l != k) {
                let mut c = combo().product(1.0, xa(i, k), x(i, l));
                for j in i + 1..=n {
                    c = c.product(s, xa(j, k), x(j, l));
                }
                let r = c.product(-q, x(i, l), xa(i, k)).residual();
                report.record(ADJOINT_ROW_EXCHANGE, r, || format!("i={i} k={k} l={l}"));
            }
        }
    }
    for &i in &rows {
        for &j in rows.iter().filter(|&&j| j != i) {
            for k in 1..=n {
                let mut c = combo().product(1.0, x(i, k), xa(j, k));
                for l in 1..k {
                    c = c.product(s, x(i, l), xa(j, l));
                }
                let r = c.product(-q, xa(j, k), x(i, k)).residual();
                report.record(ADJOINT_COLUMN_EXCHANGE, r, || format!("i={i} j={j} k={k}"));
            }
        }
    }
    for &i in &rows {
        for k in 1..=n {
            let mut c = combo().product(1.0, xa(i, k), x(i, k));
            for j in i + 1..=n {
                c = c.product(s, xa(j, k), x(j, k));
            }
            c = c.product(-1.0, x(i, k), xa(i, k));
            for l in (1..k).rev() {
                c = c.product(-s, x(i, l), xa(i, l));
            }
            report.record(NORM_BALANCE, c.residual(), || format!("i={i} k={k}"));
        }
    }
    for &i in &rows {
        for &j in &rows {
            let mut c = combo();
            for k in (1..=n).rev() {
                c = c.product(1.0, x(i, k), xa(j, k));
            }
            if i == j {
                c = c.identity(-1.0);
            }
            report.record(ROW_ORTHONORMALITY, c.residual(), || format!("i={i} j={j}"));
        }
    }
    Ok(report)
}

/// The tuple `T_k = w_{n−k+1}^i` of row `i`.
pub fn row_tuple(g: &StiefelGenerators, i: usize) -> Result<OpTuple, StiefelError> {
    let ops = (1..=g.n).map(|k| g.w(i, g.n - k + 1).clone()).collect();
    Ok(OpTuple::new(g.q, ops)?)
}

/// For `m = 1`, the largest disagreement between corresponding families of
/// the two engines on the row-`n` tuple.
///
/// The pairs are `q_commute` ↔ `row_q_commute`, `adjoint_q_commute` ↔
/// `adjoint_row_exchange`, `self_commutator` ↔ `norm_balance` and
/// `row_unitarity` ↔ `row_orthonormality`.
pub fn odqs_agreement(g: &StiefelGenerators, w: Window, tol: f64) -> Result<f64, StiefelError> {
    if g.m != 1 {
        return Err(StiefelError::InvalidParam("the odqs reduction needs m = 1".into()));
    }
    let ours = check_relations(g, w, tol)?;
    let theirs = check_odqs(&row_tuple(g, g.n)?, w, tol)?;
    let pairs = [
        (Q_COMMUTE, ROW_Q_COMMUTE),
        (ADJOINT_Q_COMMUTE, ADJOINT_ROW_EXCHANGE),
        (SELF_COMMUTATOR, NORM_BALANCE),
        (ROW_UNITARITY, ROW_ORTHONORMALITY),
    ];
    let mut worst = 0.0f64;
    for (a, b) in pairs {
        let x = theirs.get(a).expect("family present");
        let y = ours.get(b).expect("family present");
        worst = worst.max((x.residual - y.residual).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{QParam, C64};
    use crate::qgrp::AngleVector;
    use crate::stiefel::{build_generators, StiefelParam};

    fn gens(n: usize, a: Vec<usize>, d: usize) -> StiefelGenerators {
        let q = QParam::new(0.5).unwrap();
        let turns: Vec<f64> = (0..a.len()).map(|j| 0.125 * (j + 1) as f64).collect();
        let p = StiefelParam::new(n, a.len(), a, AngleVector::from_turns(&turns)).unwrap();
        build_generators(&p, q, d).unwrap()
    }

    #[test]
    fn three_two_passes() {
        for a in [vec![1, 1], vec![2, 1], vec![1, 2], vec![3, 2]] {
            let g = gens(3, a.clone(), 7);
            let r = check_relations(&g, Window::new(2), 1e-10).unwrap();
            assert!(r.pass(), "{a:?}: {:?}", r.failing());
            assert!(r.families.iter().all(|f| f.instances > 0));
        }
    }

    #[test]
    fn literal_column_exchange_fails() {
        // With the adjoint on the first factor of the right-hand side the
        // family does not hold.
        let g = gens(3, vec![1, 1], 7);
        let q = g.q().value();
        let frame = g.frame();
        let mask = Window::new(2).mask(frame).unwrap();
        let (i, j, k) = (2, 3, 2);
        let mut c = Combo::new(frame, &mask).product(1.0, g.w(i, k), &g.w(j, k).adjoint());
        for l in 1..k {
            c = c.product(1.0 - q * q, g.w(i, l), &g.w(j, l).adjoint());
        }
        let r = c.product(-q, &g.w(i, k).adjoint(), g.w(j, k)).residual();
        assert!(r > 1e-3);
    }

    #[test]
    fn perturbation_is_detected() {
        let g = gens(3, vec![1], 7);
        let bumped = g.w(3, 2) + &TruncOp::identity_on(g.frame().clone()).scaled(C64::new(1e-3, 0.0));
        let g2 = g.with_generator(3, 2, bumped).unwrap();
        let r = check_relations(&g2, Window::new(2), 1e-10).unwrap();
        assert!(r.max_residual() > 1e-4);
    }

    #[test]
    fn rank_one_reduction_agrees() {
        for a in 1..=3 {
            let g = gens(3, vec![a], 8);
            assert!(odqs_agreement(&g, Window::new(2), 1e-10).unwrap() <= 1e-12);
        }
    }
}

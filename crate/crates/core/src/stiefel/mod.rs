//! Quantum Stiefel manifolds `SU_q(n)/SU_q(n−m)`.
//!
//! The algebra is generated by `w_k^i` for rows `n−m+1 ≤ i ≤ n` and columns
//! `1 ≤ k ≤ n`. Irreducible representations are indexed by `a ∈ 𝒜_m` and
//! `t ∈ 𝕋^m`; [`build_generators`] realizes one on truncated Fock space and
//! [`classify`] reads `(a, t)` back off any representation through the
//! rank/angle tower.

mod closed_form;
mod relations;
mod tower;

pub use closed_form::{closed_form_t, verify_closed_form, ClosedFormLevel, ClosedFormReport};
pub use relations::{
    check_relations, odqs_agreement, row_tuple, ADJOINT_COLUMN_EXCHANGE, ADJOINT_CROSS_COMMUTE,
    ADJOINT_ROW_EXCHANGE, COLUMN_Q_COMMUTE, CROSS_COMMUTE, CROSS_EXCHANGE, NORM_BALANCE,
    ROW_ORTHONORMALITY, ROW_Q_COMMUTE,
};
pub use tower::{
    check_vanishing, classify, extract_tower, Classification, KernelCheck, Tower, TowerLevel,
    VanishingReport,
};

use thiserror::Error;

use crate::fock::{FockError, Frame, QParam, TruncOp, C64};
use crate::odqs::OdqsError;
use crate::qgrp::{check_admissible, full_rep, AngleVector, QgrpError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StiefelError {
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Qgrp(#[from] QgrpError),
    #[error(transparent)]
    Odqs(#[from] OdqsError),
    #[error("invalid parameters: {0}")]
    InvalidParam(String),
    #[error("level {level}: inconsistent representation: {reason}")]
    Inconsistent { level: usize, reason: String },
    #[error("level {level}: cutoff {cutoff} is too small; try at least {suggested}")]
    TruncationTooSmall {
        level: usize,
        cutoff: usize,
        suggested: usize,
    },
    #[error("level {level}: classification failed: {reason}")]
    ClassificationFailed { level: usize, reason: String },
}

/// The datum `(n, m, a, t)` of an irreducible representation.
#[derive(Debug, Clone, PartialEq)]
pub struct StiefelParam {
    n: usize,
    m: usize,
    a: Vec<usize>,
    t: AngleVector,
}

impl StiefelParam {
    pub fn new(n: usize, m: usize, a: Vec<usize>, t: AngleVector) -> Result<Self, StiefelError> {
        check_shape(n, m)?;
        if a.len() != m || t.len() != m {
            return Err(StiefelError::InvalidParam(format!(
                "a and t must have length m = {m}, got {} and {}",
                a.len(),
                t.len()
            )));
        }
        check_admissible(&a, n)?;
        Ok(StiefelParam { n, m, a, t })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn a(&self) -> &[usize] {
        &self.a
    }

    pub fn t(&self) -> &AngleVector {
        &self.t
    }

    /// `ℓ_i = n + 2 − i − a_i`.
    pub fn ranks(&self) -> Vec<usize> {
        self.a
            .iter()
            .enumerate()
            .map(|(j, &aj)| self.n + 1 - j - aj)
            .collect()
    }
}

fn check_shape(n: usize, m: usize) -> Result<(), StiefelError> {
    if n < 2 || m == 0 || m >= n {
        return Err(StiefelError::InvalidParam(format!(
            "need n ≥ 2 and 1 ≤ m ≤ n − 1, got n = {n}, m = {m}"
        )));
    }
    Ok(())
}

/// Images of the generators `w_k^i`, rows `n−m+1..=n`.
#[derive(Debug, Clone)]
pub struct StiefelGenerators {
    n: usize,
    m: usize,
    q: QParam,
    rows: Vec<Vec<TruncOp>>,
}

impl StiefelGenerators {
    /// `rows[0]` is row `n − m + 1`; each row lists columns `1..=n`.
    pub fn from_rows(n: usize, m: usize, q: QParam, rows: Vec<Vec<TruncOp>>) -> Result<Self, StiefelError> {
        check_shape(n, m)?;
        if rows.len() != m || rows.iter().any(|r| r.len() != n) {
            return Err(StiefelError::InvalidParam(format!(
                "expected {m} rows of {n} operators"
            )));
        }
        let frame = rows[0][0].frame();
        if rows.iter().flatten().any(|op| op.frame() != frame) {
            return Err(FockError::FrameMismatch("generators in different frames".into()).into());
        }
        Ok(StiefelGenerators { n, m, q, rows })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn q(&self) -> QParam {
        self.q
    }

    pub fn frame(&self) -> &Frame {
        self.rows[0][0].frame()
    }

    pub fn dim(&self) -> usize {
        self.frame().dim()
    }

    /// Row indices `n−m+1..=n`.
    pub fn row_range(&self) -> std::ops::RangeInclusive<usize> {
        self.n - self.m + 1..=self.n
    }

    /// `w_k^i`.
    pub fn w(&self, i: usize, k: usize) -> &TruncOp {
        assert!(
            self.row_range().contains(&i) && (1..=self.n).contains(&k),
            "generator w_{k}^{i} does not exist"
        );
        &self.rows[i + self.m - self.n - 1][k - 1]
    }

    pub fn rows(&self) -> &[Vec<TruncOp>] {
        &self.rows
    }

    /// `π ⊕ π′` generator by generator.
    pub fn direct_sum(&self, other: &StiefelGenerators) -> Result<Self, StiefelError> {
        if (self.n, self.m) != (other.n, other.m) || self.q != other.q {
            return Err(StiefelError::InvalidParam("direct sum of different algebras".into()));
        }
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| x.direct_sum(y))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(StiefelGenerators { rows, ..*self })
    }

    /// Multiplies every generator of row `i` by `phase`.
    pub fn row_scaled(&self, i: usize, phase: C64) -> Self {
        let mut out = self.clone();
        let r = i + self.m - self.n - 1;
        out.rows[r] = out.rows[r].iter().map(|op| op.scaled(phase)).collect();
        out
    }

    /// Replaces `w_k^i`.
    pub fn with_generator(&self, i: usize, k: usize, op: TruncOp) -> Result<Self, StiefelError> {
        if op.frame() != self.frame() {
            return Err(FockError::FrameMismatch("replacement in a different frame".into()).into());
        }
        let mut out = self.clone();
        out.rows[i + self.m - self.n - 1][k - 1] = op;
        Ok(out)
    }
}

/// Rows `n−m+1..=n` of the representation `τ_{[t]_n} * π_{w(a)}`.
pub fn build_generators(p: &StiefelParam, q: QParam, d: usize) -> Result<StiefelGenerators, StiefelError> {
    let rep = full_rep(&p.t, &p.a, p.n, q, d)?;
    let rows = (p.n - p.m + 1..=p.n)
        .map(|i| (1..=p.n).map(|k| rep.entry(i, k)).collect())
        .collect();
    StiefelGenerators::from_rows(p.n, p.m, q, rows)
}

//! Representations of `C(SU_q(n))` on truncated Fock spaces.
//!
//! A representation is stored as its image of the fundamental matrix:
//! `grid[r][c] = π(u_c^r)`, rows and columns numbered from 1. Entries that
//! vanish identically are kept as `None` so that convolution and the path
//! calculus can skip them without touching numerics.

use std::f64::consts::TAU;

use thiserror::Error;

use crate::fock::{
    lowering, neg_q_number_plus_one, q_number, raising, FactorShape, FockError, Frame, QParam,
    TruncOp, Window, C64,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QgrpError {
    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("{0:?} is not an admissible parameter tuple for n = {1}")]
    NotAdmissible(Vec<usize>, usize),
    #[error("angle {0} does not have unit modulus")]
    NonUnitAngle(C64),
    #[error("rank mismatch: representations of SU_q({0}) and SU_q({1})")]
    RankMismatch(usize, usize),
    #[error(transparent)]
    Fock(#[from] FockError),
}

/// Image of the fundamental matrix under a representation.
#[derive(Debug, Clone)]
pub struct GenRep {
    n: usize,
    shape: FactorShape,
    grid: Vec<Option<TruncOp>>,
}

impl GenRep {
    /// Builds a grid from row-major entries (row 1 first).
    pub fn new(n: usize, shape: FactorShape, grid: Vec<Option<TruncOp>>) -> Result<Self, QgrpError> {
        if grid.len() != n * n {
            return Err(QgrpError::LengthMismatch {
                expected: n * n,
                got: grid.len(),
            });
        }
        let frame = Frame::plain(shape.clone());
        for op in grid.iter().flatten() {
            if op.frame() != &frame {
                return Err(FockError::FrameMismatch(format!(
                    "grid entry on {} in a representation on {shape}",
                    op.shape()
                ))
                .into());
            }
        }
        Ok(GenRep { n, shape, grid })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn shape(&self) -> &FactorShape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.total()
    }

    fn slot(&self, r: usize, c: usize) -> usize {
        assert!(
            (1..=self.n).contains(&r) && (1..=self.n).contains(&c),
            "entry ({r}, {c}) outside a {}×{} grid",
            self.n,
            self.n
        );
        (r - 1) * self.n + (c - 1)
    }

    /// `π(u_c^r)`, or `None` when it vanishes identically.
    pub fn get(&self, r: usize, c: usize) -> Option<&TruncOp> {
        self.grid[self.slot(r, c)].as_ref()
    }

    /// `π(u_c^r)` with vanishing entries materialized.
    pub fn entry(&self, r: usize, c: usize) -> TruncOp {
        self.get(r, c)
            .cloned()
            .unwrap_or_else(|| TruncOp::zero(Frame::plain(self.shape.clone())))
    }

    /// Windowed residual of `U U* = 1` and `U* U = 1` for the fundamental
    /// matrix.
    pub fn unitarity_residual(&self, w: Window) -> Result<f64, QgrpError> {
        let frame = Frame::plain(self.shape.clone());
        let mask = w.mask(&frame)?;
        let mut worst = 0.0f64;
        let id = TruncOp::identity_on(frame.clone());
        for r in 1..=self.n {
            for r2 in 1..=self.n {
                let mut rows = TruncOp::zero(frame.clone());
                let mut cols = TruncOp::zero(frame.clone());
                for k in 1..=self.n {
                    if let (Some(a), Some(b)) = (self.get(r, k), self.get(r2, k)) {
                        rows = &rows + &(&a.restrict_rows(&mask) * &b.adjoint());
                    }
                    if let (Some(a), Some(b)) = (self.get(k, r), self.get(k, r2)) {
                        cols = &cols + &(&a.adjoint().restrict_rows(&mask) * b);
                    }
                }
                if r == r2 {
                    rows = &rows - &id;
                    cols = &cols - &id;
                }
                for op in [&rows, &cols] {
                    worst = worst.max(crate::fock::masked_max(op, &mask).0);
                }
            }
        }
        Ok(worst)
    }
}

/// A word in the simple reflections `s_1, …, s_{n−1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ReducedWord(Vec<usize>);

impl ReducedWord {
    pub fn new(letters: Vec<usize>, n: usize) -> Result<Self, QgrpError> {
        if let Some(&bad) = letters.iter().find(|&&s| s == 0 || s >= n) {
            return Err(QgrpError::IndexOutOfRange {
                index: bad,
                max: n - 1,
            });
        }
        Ok(ReducedWord(letters))
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A point of a torus: unit-modulus complex numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleVector(Vec<C64>);

impl AngleVector {
    pub fn new(t: Vec<C64>) -> Result<Self, QgrpError> {
        if let Some(&bad) = t.iter().find(|z| (z.norm() - 1.0).abs() > 1e-12) {
            return Err(QgrpError::NonUnitAngle(bad));
        }
        Ok(AngleVector(t))
    }

    /// `t_j = e^{2πi·turns_j}`.
    pub fn from_turns(turns: &[f64]) -> Self {
        AngleVector(turns.iter().map(|&x| C64::from_polar(1.0, TAU * x)).collect())
    }

    pub fn ones(len: usize) -> Self {
        AngleVector(vec![C64::new(1.0, 0.0); len])
    }

    /// Angles in turns, in `[0, 1)`.
    pub fn turns(&self) -> Vec<f64> {
        self.0.iter().map(|z| to_turns(*z)).collect()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `(t, 1, …, 1)` of length `len`.
    pub fn padded(&self, len: usize) -> Result<Self, QgrpError> {
        if self.0.len() > len {
            return Err(QgrpError::LengthMismatch {
                expected: len,
                got: self.0.len(),
            });
        }
        let mut t = self.0.clone();
        t.resize(len, C64::new(1.0, 0.0));
        Ok(AngleVector(t))
    }
}

/// Argument of a unit complex number in turns, in `[0, 1)`.
pub fn to_turns(z: C64) -> f64 {
    let x = z.arg() / TAU;
    let x = if x < 0.0 { x + 1.0 } else { x };
    if x >= 1.0 {
        0.0
    } else {
        x
    }
}

/// Distance between two angles measured in turns, on the circle.
pub fn turn_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

fn check_n(n: usize) -> Result<(), QgrpError> {
    if n < 2 {
        return Err(QgrpError::IndexOutOfRange { index: n, max: usize::MAX });
    }
    Ok(())
}

/// The representation `π_{s_i}` on a single Fock factor of dimension `d`.
pub fn elementary_rep(i: usize, n: usize, q: QParam, d: usize) -> Result<GenRep, QgrpError> {
    check_n(n)?;
    if i == 0 || i >= n {
        return Err(QgrpError::IndexOutOfRange { index: i, max: n - 1 });
    }
    let shape = FactorShape::fock(d)?;
    let mut grid = vec![None; n * n];
    let at = |r: usize, c: usize| (r - 1) * n + (c - 1);
    for k in 1..=n {
        grid[at(k, k)] = Some(TruncOp::identity(d));
    }
    grid[at(i, i)] = Some(lowering(q, d)?);
    grid[at(i + 1, i + 1)] = Some(raising(q, d)?);
    grid[at(i, i + 1)] = Some(neg_q_number_plus_one(q, d)?);
    grid[at(i + 1, i)] = Some(q_number(q, d)?);
    GenRep::new(n, shape, grid)
}

fn scalar_grid(n: usize, diag: impl Fn(usize) -> C64) -> Result<GenRep, QgrpError> {
    let mut grid = vec![None; n * n];
    for k in 1..=n {
        grid[(k - 1) * (n + 1)] = Some(TruncOp::scalar(diag(k)));
    }
    GenRep::new(n, FactorShape::scalar(), grid)
}

/// The one-dimensional torus representation `τ_t`, `t` of length `n − 1`.
pub fn torus_rep(t: &AngleVector, n: usize) -> Result<GenRep, QgrpError> {
    check_n(n)?;
    if t.len() != n - 1 {
        return Err(QgrpError::LengthMismatch {
            expected: n - 1,
            got: t.len(),
        });
    }
    let t = t.as_slice();
    let product: C64 = t.iter().product();
    scalar_grid(n, |k| if k == 1 { product.conj() } else { t[n - k] })
}

/// The counit: `u_l^k ↦ δ_{kl}` on `ℂ`.
pub fn counit_rep(n: usize) -> Result<GenRep, QgrpError> {
    check_n(n)?;
    scalar_grid(n, |_| C64::new(1.0, 0.0))
}

/// `A * B = (A ⊗ B)∘Δ`; `A`'s factors come first.
pub fn convolve(a: &GenRep, b: &GenRep) -> Result<GenRep, QgrpError> {
    if a.n != b.n {
        return Err(QgrpError::RankMismatch(a.n, b.n));
    }
    let n = a.n;
    let mut grid = Vec::with_capacity(n * n);
    for r in 1..=n {
        for c in 1..=n {
            let mut acc: Option<TruncOp> = None;
            for j in 1..=n {
                if let (Some(x), Some(y)) = (a.get(r, j), b.get(j, c)) {
                    let term = TruncOp::tensor(&[x.clone(), y.clone()])?;
                    acc = Some(match acc {
                        None => term,
                        Some(s) => &s + &term,
                    });
                }
            }
            grid.push(acc);
        }
    }
    GenRep::new(n, a.shape.concat(&b.shape), grid)
}

/// Checks `1 ≤ a_j ≤ n − j + 1` for every `j`.
pub fn check_admissible(a: &[usize], n: usize) -> Result<(), QgrpError> {
    let ok = a.len() <= n && a.iter().enumerate().all(|(j, &aj)| aj >= 1 && aj <= n - j);
    if ok {
        Ok(())
    } else {
        Err(QgrpError::NotAdmissible(a.to_vec(), n))
    }
}

/// The word `w(a)`: for `j = m` down to `1`, the descending block
/// `s_{n−j} s_{n−j−1} ⋯ s_{a_j}`, empty when `a_j = n − j + 1`.
pub fn weyl_word(a: &[usize], n: usize) -> Result<ReducedWord, QgrpError> {
    check_n(n)?;
    check_admissible(a, n)?;
    let mut letters = Vec::new();
    for j in (1..=a.len()).rev() {
        letters.extend((a[j - 1]..=n - j).rev());
    }
    ReducedWord::new(letters, n)
}

/// Letters of `w(a)` grouped by block, block `m` first.
pub fn weyl_blocks(a: &[usize], n: usize) -> Result<Vec<Vec<usize>>, QgrpError> {
    check_admissible(a, n)?;
    Ok((1..=a.len())
        .rev()
        .map(|j| (a[j - 1]..=n - j).rev().collect())
        .collect())
}

/// `π_{s_{i_1}} * ⋯ * π_{s_{i_k}}`; the empty word gives the counit.
pub fn word_rep(w: &ReducedWord, n: usize, q: QParam, d: usize) -> Result<GenRep, QgrpError> {
    let mut letters = w.letters().iter();
    let Some(&first) = letters.next() else {
        return counit_rep(n);
    };
    let mut rep = elementary_rep(first, n, q, d)?;
    for &s in letters {
        rep = convolve(&rep, &elementary_rep(s, n, q, d)?)?;
    }
    Ok(rep)
}

/// `τ_{[t]_n} * π_{w(a)}` with `[t]_n = (t, 1, …, 1)`.
///
/// The factors are `ℂ` followed by one Fock factor per letter of `w(a)`.
/// When the word is empty the result is the torus representation alone.
pub fn full_rep(t: &AngleVector, a: &[usize], n: usize, q: QParam, d: usize) -> Result<GenRep, QgrpError> {
    if t.len() != a.len() {
        return Err(QgrpError::LengthMismatch {
            expected: a.len(),
            got: t.len(),
        });
    }
    let torus = torus_rep(&t.padded(n - 1)?, n)?;
    let w = weyl_word(a, n)?;
    if w.is_empty() {
        return Ok(torus);
    }
    convolve(&torus, &word_rep(&w, n, q, d)?)
}

/// Edges of one diagram column as `(from, to, operator)`.
type Column = Vec<(usize, usize, TruncOp)>;

fn columns_of(rep: &GenRep) -> Column {
    let mut edges = Vec::new();
    for r in 1..=rep.n {
        for c in 1..=rep.n {
            if let Some(op) = rep.get(r, c) {
                edges.push((r, c, op.clone()));
            }
        }
    }
    edges
}

/// Sum over all paths from node `r` to node `c` through the concatenated
/// diagram columns (torus column first) of the tensor product of the edge
/// operators along each path. `None` when there is no path.
pub fn path_evaluate(
    word: &ReducedWord,
    t: &AngleVector,
    r: usize,
    c: usize,
    n: usize,
    q: QParam,
    d: usize,
) -> Result<Option<TruncOp>, QgrpError> {
    for idx in [r, c] {
        if idx == 0 || idx > n {
            return Err(QgrpError::IndexOutOfRange { index: idx, max: n });
        }
    }
    let mut columns = vec![columns_of(&torus_rep(&t.padded(n - 1)?, n)?)];
    for &s in word.letters() {
        columns.push(columns_of(&elementary_rep(s, n, q, d)?));
    }
    let mut total: Option<TruncOp> = None;
    let mut stack: Vec<TruncOp> = Vec::new();
    walk(&columns, 0, r, c, &mut stack, &mut total)?;
    Ok(total)
}

fn walk(
    columns: &[Column],
    depth: usize,
    node: usize,
    target: usize,
    stack: &mut Vec<TruncOp>,
    total: &mut Option<TruncOp>,
) -> Result<(), QgrpError> {
    if depth == columns.len() {
        if node == target {
            let term = TruncOp::tensor(stack)?;
            *total = Some(match total.take() {
                None => term,
                Some(s) => &s + &term,
            });
        }
        return Ok(());
    }
    for (from, to, op) in &columns[depth] {
        if *from == node {
            stack.push(op.clone());
            walk(columns, depth + 1, *to, target, stack, total)?;
            stack.pop();
        }
    }
    Ok(())
}

/// All admissible `a` of length `m` in lexicographic order.
pub fn enumerate_am(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if m > n {
        return out;
    }
    let mut cur = vec![1; m];
    loop {
        out.push(cur.clone());
        let mut j = m;
        loop {
            if j == 0 {
                return out;
            }
            j -= 1;
            if cur[j] < n - j {
                cur[j] += 1;
                for x in &mut cur[j + 1..] {
                    *x = 1;
                }
                break;
            }
        }
    }
}

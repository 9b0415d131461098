//! Operator tuples satisfying the odd quantum sphere relations.
//!
//! A tuple `(T_1, …, T_n)` is checked against four families:
//!
//! * `q_commute`: `T_i T_j = q T_j T_i` for `j < i`,
//! * `adjoint_q_commute`: `T_i* T_j = q T_j T_i*` for `i ≠ j`,
//! * `self_commutator`: `T_i* T_i − T_i T_i* = (1−q²) Σ_{j>i} T_j T_j*`,
//! * `row_unitarity`: `Σ_i T_i T_i* = 1`.
//!
//! Such a tuple has a rank `ℓ` (the last nonzero operator, which is normal),
//! a positive operator `ω = T_ℓ* T_ℓ` with spectrum in `{q^{2k}} ∪ {0}`,
//! and, when irreducible, an angle: the scalar by which `T_ℓ` acts on the
//! eigenspace `ℋ_0` of `ω` at 1.

mod ladder;

pub use ladder::{build_intertwiner, ladder, multi_exponents, Intertwiner, LadderBasis};

use thiserror::Error;

use crate::fock::{
    eigenspace, hermitian_eigen, masked_max, window_norm, FockError, Frame, QParam,
    RelationReport, Subspace, TruncOp, Window, C64, ZERO_THRESHOLD,
};

pub const Q_COMMUTE: &str = "q_commute";
pub const ADJOINT_Q_COMMUTE: &str = "adjoint_q_commute";
pub const SELF_COMMUTATOR: &str = "self_commutator";
pub const ROW_UNITARITY: &str = "row_unitarity";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdqsError {
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error("every operator of the tuple vanishes")]
    Degenerate,
    #[error("T_{rank} is not normal: windowed residual {residual:e}")]
    NotNormal { rank: usize, residual: f64 },
    #[error("eigenvalue {value} of ω lies in a spectral gap")]
    SpectrumViolation { value: f64 },
    #[error("ω has no eigenvalue 1")]
    EmptyGroundSpace,
    #[error("ground space has dimension {0}; the tuple is not irreducible")]
    NotIrreducible(usize),
    #[error("T_ℓ does not act as a scalar on the ground space: residual {0:e}")]
    NotScalar(f64),
    #[error("ladder vector for exponent {alpha:?} failed: {reason}")]
    Ladder { alpha: Vec<usize>, reason: String },
    #[error("ladder depth {needed} needs a cutoff of at least {} (have {cutoff})", .needed + 2)]
    TruncationTooSmall { needed: usize, cutoff: usize },
    #[error("tuples are not isomorphic: {0}")]
    NotIsomorphic(String),
    #[error("phase {0} does not have unit modulus")]
    NonUnitPhase(C64),
    #[error("expected {expected} phases, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

/// An ordered tuple `(T_1, …, T_n)` of operators in one frame.
#[derive(Debug, Clone)]
pub struct OpTuple {
    q: QParam,
    ops: Vec<TruncOp>,
}

impl OpTuple {
    pub fn new(q: QParam, ops: Vec<TruncOp>) -> Result<Self, OdqsError> {
        let first = ops.first().ok_or(FockError::EmptyList)?;
        if ops.iter().any(|op| op.frame() != first.frame()) {
            return Err(FockError::FrameMismatch("tuple entries in different frames".into()).into());
        }
        Ok(OpTuple { q, ops })
    }

    pub fn q(&self) -> QParam {
        self.q
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// `T_k`, numbered from 1.
    pub fn get(&self, k: usize) -> &TruncOp {
        &self.ops[k - 1]
    }

    pub fn ops(&self) -> &[TruncOp] {
        &self.ops
    }

    pub fn frame(&self) -> &Frame {
        self.ops[0].frame()
    }

    pub fn dim(&self) -> usize {
        self.ops[0].dim()
    }

    /// Smallest Fock dimension among the factors, if any.
    pub fn cutoff(&self) -> Option<usize> {
        self.frame().shape().min_fock_dim()
    }

    /// `(ω_1 T_1, …, ω_n T_n)`.
    pub fn phase_scale(&self, phases: &[C64]) -> Result<Self, OdqsError> {
        if phases.len() != self.len() {
            return Err(OdqsError::LengthMismatch {
                expected: self.len(),
                got: phases.len(),
            });
        }
        if let Some(&bad) = phases.iter().find(|z| (z.norm() - 1.0).abs() > 1e-12) {
            return Err(OdqsError::NonUnitPhase(bad));
        }
        let ops = self.ops.iter().zip(phases).map(|(op, &z)| op.scaled(z)).collect();
        Ok(OpTuple { q: self.q, ops })
    }

    /// Compression of every operator onto `basis`.
    pub fn compress(&self, basis: &Subspace) -> Result<Self, OdqsError> {
        let ops = self
            .ops
            .iter()
            .map(|op| op.compress(basis))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(OpTuple { q: self.q, ops })
    }

    /// `P T_k P*` for every `k`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, OdqsError> {
        let ops = self
            .ops
            .iter()
            .map(|op| op.permuted(perm))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(OpTuple { q: self.q, ops })
    }
}

/// Product `a · b` with only the rows inside `mask` computed.
pub(crate) fn row_product(a: &TruncOp, b: &TruncOp, mask: &[bool]) -> TruncOp {
    &a.restrict_rows(mask) * b
}

/// Accumulates `Σ c_k · x_k` where each term is a windowed product.
pub(crate) struct Combo<'a> {
    frame: &'a Frame,
    mask: &'a [bool],
    acc: Option<TruncOp>,
}

impl<'a> Combo<'a> {
    pub(crate) fn new(frame: &'a Frame, mask: &'a [bool]) -> Self {
        Combo { frame, mask, acc: None }
    }

    /// Adds `c · a b`.
    pub(crate) fn product(mut self, c: f64, a: &TruncOp, b: &TruncOp) -> Self {
        let mut term = row_product(a, b, self.mask);
        if c != 1.0 {
            term = term.scaled(C64::new(c, 0.0));
        }
        self.acc = Some(match self.acc {
            None => term,
            Some(s) => &s + &term,
        });
        self
    }

    /// Adds `c · 1`.
    pub(crate) fn identity(mut self, c: f64) -> Self {
        let term = TruncOp::scalar_identity_on(self.frame.clone(), C64::new(c, 0.0));
        self.acc = Some(match self.acc {
            None => term,
            Some(s) => &s + &term,
        });
        self
    }

    /// Windowed max-entry of the accumulated sum.
    pub(crate) fn residual(self) -> f64 {
        match self.acc {
            None => 0.0,
            Some(op) => masked_max(&op, self.mask).0,
        }
    }
}

/// Windowed residuals of the four relation families.
pub fn check_odqs(tuple: &OpTuple, w: Window, tol: f64) -> Result<RelationReport, OdqsError> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(FockError::InvalidTolerance(tol).into());
    }
    let q = tuple.q.value();
    let n = tuple.len();
    let frame = tuple.frame();
    let mask = w.mask(frame)?;
    let t = |k: usize| tuple.get(k);
    let adj: Vec<TruncOp> = tuple.ops.iter().map(TruncOp::adjoint).collect();
    let ta = |k: usize| &adj[k - 1];
    let mut report = RelationReport::new(w.margin(), tol);
    for name in [Q_COMMUTE, ADJOINT_Q_COMMUTE, SELF_COMMUTATOR, ROW_UNITARITY] {
        report.family(name);
    }
    for i in 1..=n {
        for j in 1..i {
            let r = Combo::new(frame, &mask)
                .product(1.0, t(i), t(j))
                .product(-q, t(j), t(i))
                .residual();
            report.record(Q_COMMUTE, r, || format!("i={i} j={j}"));
        }
    }
    for i in 1..=n {
        for j in (1..=n).filter(|&j| j != i) {
            let r = Combo::new(frame, &mask)
                .product(1.0, ta(i), t(j))
                .product(-q, t(j), ta(i))
                .residual();
            report.record(ADJOINT_Q_COMMUTE, r, || format!("i={i} j={j}"));
        }
    }
    for i in 1..=n {
        let mut c = Combo::new(frame, &mask)
            .product(1.0, ta(i), t(i))
            .product(-1.0, t(i), ta(i));
        for j in i + 1..=n {
            c = c.product(-(1.0 - q * q), t(j), ta(j));
        }
        report.record(SELF_COMMUTATOR, c.residual(), || format!("i={i}"));
    }
    let mut c = Combo::new(frame, &mask);
    for i in 1..=n {
        c = c.product(1.0, t(i), ta(i));
    }
    report.record(ROW_UNITARITY, c.identity(-1.0).residual(), String::new);
    Ok(report)
}

/// The rank: the largest index whose operator is nonzero inside the window.
/// The operator at that index must be normal within `tol`.
pub fn rank_of(tuple: &OpTuple, w: Window, tol: f64) -> Result<usize, OdqsError> {
    let mut rank = None;
    for k in (1..=tuple.len()).rev() {
        if window_norm(tuple.get(k), w)? > ZERO_THRESHOLD {
            rank = Some(k);
            break;
        }
    }
    let rank = rank.ok_or(OdqsError::Degenerate)?;
    let residual = normality_residual(tuple.get(rank), w)?;
    if residual > tol {
        return Err(OdqsError::NotNormal { rank, residual });
    }
    Ok(rank)
}

fn normality_residual(t: &TruncOp, w: Window) -> Result<f64, OdqsError> {
    let mask = w.mask(t.frame())?;
    let ta = t.adjoint();
    Ok(Combo::new(t.frame(), &mask)
        .product(1.0, &ta, t)
        .product(-1.0, t, &ta)
        .residual())
}

/// `ω = T_ℓ* T_ℓ`.
pub fn omega(tuple: &OpTuple, rank: usize) -> TruncOp {
    let t = tuple.get(rank);
    &t.adjoint() * t
}

/// Spectrum of `ω` matched against `{q^{2k}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaSpectrum {
    /// Eigenvalues, descending.
    pub values: Vec<f64>,
    /// Matched exponent `k` for each value, `None` below the floor.
    pub exponents: Vec<Option<u32>>,
    /// Values below this are attributed to truncation.
    pub floor: f64,
}

impl OmegaSpectrum {
    /// Multiplicity of `q^{2k}`.
    pub fn multiplicity(&self, k: u32) -> usize {
        self.exponents.iter().filter(|e| **e == Some(k)).count()
    }
}

/// Truncation floor `q^{2(D−2)}` for the smallest Fock factor `D`, or 0 on
/// a space without Fock factors.
pub fn truncation_floor(q: QParam, frame: &Frame) -> f64 {
    frame
        .shape()
        .min_fock_dim()
        .map_or(0.0, |d| q.pow(2 * (d as i32 - 2)))
}

/// Eigenvalues of `ω`; each must lie within `tol` of some `q^{2k}` above the
/// truncation floor, or below the floor.
pub fn omega_spectrum(tuple: &OpTuple, rank: usize, tol: f64) -> Result<OmegaSpectrum, OdqsError> {
    let q = tuple.q;
    let floor = truncation_floor(q, tuple.frame());
    let pairs = hermitian_eigen(&omega(tuple, rank))?;
    let mut values = Vec::with_capacity(pairs.len());
    let mut exponents = Vec::with_capacity(pairs.len());
    for p in pairs {
        let exponent = match_power(q, p.value, floor, tol);
        if exponent.is_none() && p.value >= floor {
            return Err(OdqsError::SpectrumViolation { value: p.value });
        }
        values.push(p.value);
        exponents.push(exponent);
    }
    Ok(OmegaSpectrum {
        values,
        exponents,
        floor,
    })
}

/// The `k` with `|x − q^{2k}| ≤ tol` and `q^{2k} ≥ floor`, if any.
fn match_power(q: QParam, x: f64, floor: f64, tol: f64) -> Option<u32> {
    let q2 = q.value() * q.value();
    let mut k = 0;
    loop {
        let p = q2.powi(k as i32);
        if p < floor * (1.0 - 1e-12) || p <= 0.0 {
            break;
        }
        if (x - p).abs() <= tol {
            return Some(k);
        }
        k += 1;
    }
    None
}

/// Deterministic orthonormal basis of `ℋ_0`, the eigenspace of `ω` at 1.
pub fn h0_space(tuple: &OpTuple, rank: usize, tol: f64) -> Result<Subspace, OdqsError> {
    let h0 = eigenspace(&omega(tuple, rank), 1.0, tol)?;
    if h0.is_empty() {
        return Err(OdqsError::EmptyGroundSpace);
    }
    Ok(h0)
}

/// The angle of an irreducible tuple: `T_ℓ h = t h` on the one-dimensional
/// ground space.
pub fn angle_of(tuple: &OpTuple, rank: usize, h0: &Subspace, tol: f64) -> Result<C64, OdqsError> {
    if h0.len() != 1 {
        return Err(OdqsError::NotIrreducible(h0.len()));
    }
    scalar_on(tuple.get(rank), h0, tol)
}

/// The scalar `t` with `T h = t h` for every `h` in `h0`, if `T` acts as a
/// scalar there.
pub fn scalar_on(t: &TruncOp, h0: &Subspace, tol: f64) -> Result<C64, OdqsError> {
    let mut acc = C64::new(0.0, 0.0);
    let vectors: Vec<Vec<C64>> = (0..h0.len()).map(|j| h0.vector(j)).collect();
    let images: Vec<Vec<C64>> = vectors.iter().map(|v| t.apply(v)).collect();
    for (v, tv) in vectors.iter().zip(&images) {
        acc += inner(v, tv);
    }
    let raw = acc / h0.len() as f64;
    if raw.norm() == 0.0 {
        return Err(OdqsError::NotScalar(1.0));
    }
    let angle = raw / raw.norm();
    let residual = vectors
        .iter()
        .zip(&images)
        .map(|(v, tv)| distance(tv, v, angle))
        .fold(0.0, f64::max);
    if residual > tol {
        return Err(OdqsError::NotScalar(residual));
    }
    Ok(angle)
}

/// `⟨u, v⟩`, conjugate-linear in `u`.
pub(crate) fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub(crate) fn norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖x − c·y‖`.
pub(crate) fn distance(x: &[C64], y: &[C64], c: C64) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - c * b).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Largest of `‖T_i* h‖` and `‖T_i* T_i h − (1−q²) h‖` over `i < ℓ` and the
/// ground-space basis.
pub fn ground_state_residual(tuple: &OpTuple, rank: usize, h0: &Subspace) -> f64 {
    let q2 = tuple.q.value() * tuple.q.value();
    let mut worst = 0.0f64;
    for j in 0..h0.len() {
        let h = h0.vector(j);
        for i in 1..rank {
            let t = tuple.get(i);
            worst = worst.max(norm(&t.apply_adjoint(&h)));
            let tth = t.apply_adjoint(&t.apply(&h));
            worst = worst.max(distance(&tth, &h, C64::new(1.0 - q2, 0.0)));
        }
    }
    worst
}

/// Windowed residual of
/// `T_i* T_i^m = T_i^m T_i* + (1−q^{2m}) Σ_{j>i} T_i^{m−1} T_j T_j*`.
pub fn check_power_identity(tuple: &OpTuple, i: usize, m: u32, w: Window) -> Result<f64, OdqsError> {
    assert!(m >= 1 && (1..=tuple.len()).contains(&i), "power identity index out of range");
    let frame = tuple.frame();
    let mask = w.mask(frame)?;
    let t = tuple.get(i);
    let ta = t.adjoint();
    let mut power = TruncOp::identity_on(frame.clone());
    for _ in 1..m {
        power = &power * t;
    }
    let power_m = &power * t;
    let coeff = 1.0 - tuple.q.pow(2 * m as i32);
    let mut c = Combo::new(frame, &mask)
        .product(1.0, &ta, &power_m)
        .product(-1.0, &power_m, &ta);
    for j in i + 1..=tuple.len() {
        let tj = tuple.get(j);
        let outer = &power * tj;
        c = c.product(-coeff, &outer, &tj.adjoint());
    }
    Ok(c.residual())
}

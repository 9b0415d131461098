use super::{StiefelError, StiefelParam, Tower};
use crate::fock::{
    hermitian_eigen, q_number, raising_closed, FactorShape, Frame, QParam, TruncOp, C64,
};

/// The level-`i` operators `T_1^i, …, T_{n−i+1}^i` in tensor form.
///
/// The model space carries `Σ_{j≥i} (ℓ_j − 1)` Fock factors of dimension `d`
/// (or is `ℂ` when that sum is 0): first the `Σ_{j>i} (ℓ_j − 1)` factors
/// belonging to deeper levels, then `ℓ_i − 1` active factors. For
/// `l < ℓ_i`, `T_l = t_i · 1 ⊗ (q^N)^{⊗(l−1)} ⊗ √(1−q^{2N}) S* ⊗ 1`; `T_{ℓ_i}`
/// is `t_i · 1 ⊗ (q^N)^{⊗(ℓ_i−1)}`; the rest vanish.
pub fn closed_form_t(level: usize, p: &StiefelParam, q: QParam, d: usize) -> Result<Vec<TruncOp>, StiefelError> {
    if level == 0 || level > p.m() {
        return Err(StiefelError::InvalidParam(format!("no level {level}")));
    }
    let ranks = p.ranks();
    let rank = ranks[level - 1];
    let lead: usize = ranks[level..].iter().map(|l| l - 1).sum();
    let active = rank - 1;
    let t = p.t().as_slice()[level - 1];
    let count = p.n() + 1 - level;
    let factors = lead + active;
    let id = TruncOp::identity(d);
    let shape = if factors == 0 {
        FactorShape::scalar()
    } else {
        FactorShape::new(vec![d; factors])?
    };
    let frame = Frame::plain(shape);
    let qn = q_number(q, d)?;
    let up = raising_closed(q, d)?;
    let mut out = Vec::with_capacity(count);
    for l in 1..=count {
        let op = if l > rank {
            TruncOp::zero(frame.clone())
        } else if factors == 0 {
            TruncOp::scalar(t)
        } else {
            let mut parts = vec![id.clone(); lead];
            for slot in 1..=active {
                parts.push(if slot < l {
                    qn.clone()
                } else if slot == l {
                    up.clone()
                } else {
                    id.clone()
                });
            }
            TruncOp::tensor(&parts)?.scaled(t)
        };
        out.push(op);
    }
    Ok(out)
}

/// Invariant comparison at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormLevel {
    pub level: usize,
    pub extracted_dim: usize,
    pub model_dim: usize,
    /// Max relative difference of `tr(T_a T_b*)` over all pairs.
    pub trace_residual: f64,
    /// Max difference of sorted singular values over all operators.
    pub singular_residual: f64,
    /// `(a, b)` attaining the trace residual.
    pub worst_pair: (usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormReport {
    pub levels: Vec<ClosedFormLevel>,
    pub tol: f64,
}

impl ClosedFormReport {
    pub fn pass(&self) -> bool {
        self.levels.iter().all(|l| {
            l.extracted_dim == l.model_dim
                && l.trace_residual <= self.tol
                && l.singular_residual <= self.tol
        })
    }
}

/// `Σ_{r,c} A[r,c] · conj(B[r,c])`.
fn frobenius(a: &TruncOp, b: &TruncOp) -> C64 {
    a.entries().map(|(r, c, v)| v * b.get(r, c).conj()).sum()
}

fn singular_values(t: &TruncOp) -> Result<Vec<f64>, StiefelError> {
    let gram = &t.adjoint() * t;
    let mut s: Vec<f64> = hermitian_eigen(&gram)?
        .into_iter()
        .map(|p| p.value.max(0.0).sqrt())
        .collect();
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s)
}

/// Compares each extracted level tuple with [`closed_form_t`] through
/// basis-independent invariants: all Frobenius products `tr(T_a T_b*)` and
/// the singular-value profile of every operator.
pub fn verify_closed_form(
    tower: &Tower,
    p: &StiefelParam,
    q: QParam,
    d: usize,
    tol: f64,
) -> Result<ClosedFormReport, StiefelError> {
    let mut levels = Vec::new();
    for lvl in &tower.levels {
        let model = closed_form_t(lvl.level, p, q, d)?;
        let ours = lvl.tuple.ops();
        let extracted_dim = lvl.tuple.dim();
        let model_dim = model[0].dim();
        let mut trace_residual = 0.0f64;
        let mut worst_pair = (1, 1);
        let mut singular_residual = 0.0f64;
        if extracted_dim == model_dim {
            for a in 0..ours.len() {
                for b in a..ours.len() {
                    let x = frobenius(&ours[a], &ours[b]);
                    let y = frobenius(&model[a], &model[b]);
                    let r = (x - y).norm() / y.norm().max(1.0);
                    if r > trace_residual {
                        trace_residual = r;
                        worst_pair = (a + 1, b + 1);
                    }
                }
                let sx = singular_values(&ours[a])?;
                let sy = singular_values(&model[a])?;
                for (x, y) in sx.iter().zip(&sy) {
                    singular_residual = singular_residual.max((x - y).abs());
                }
            }
        } else {
            trace_residual = f64::INFINITY;
            singular_residual = f64::INFINITY;
        }
        levels.push(ClosedFormLevel {
            level: lvl.level,
            extracted_dim,
            model_dim,
            trace_residual,
            singular_residual,
            worst_pair,
        });
    }
    Ok(ClosedFormReport { levels, tol })
}

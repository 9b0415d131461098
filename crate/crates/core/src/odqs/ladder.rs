use std::collections::HashMap;

use sprs::{CsMat, TriMat};

use super::{
    angle_of, distance, h0_space, inner, norm, omega, rank_of, OdqsError, OpTuple,
};
use crate::fock::{Window, C64, TOL_EIG};

/// All `α ∈ ℕ^k` with `|α| ≤ max`, ordered by `|α|` and then
/// lexicographically descending.
pub fn multi_exponents(k: usize, max: usize) -> Vec<Vec<usize>> {
    fn fill(prefix: &mut Vec<usize>, k: usize, remaining: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == k {
            if remaining == 0 {
                out.push(prefix.clone());
            }
            return;
        }
        for x in (0..=remaining).rev() {
            prefix.push(x);
            fill(prefix, k, remaining - x, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for total in 0..=max {
        if k == 0 && total > 0 {
            break;
        }
        fill(&mut Vec::with_capacity(k), k, total, &mut out);
    }
    out
}

/// Normalized vectors `T_1^{α_1} ⋯ T_{ℓ−1}^{α_{ℓ−1}} h` for `|α| ≤ A_max`.
#[derive(Debug, Clone)]
pub struct LadderBasis {
    rank: usize,
    depth: usize,
    entries: Vec<(Vec<usize>, Vec<C64>)>,
    index: HashMap<Vec<usize>, usize>,
}

impl LadderBasis {
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// The bound `A_max` on `|α|`.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, alpha: &[usize]) -> Option<&[C64]> {
        self.index.get(alpha).map(|&i| self.entries[i].1.as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[usize], &[C64])> {
        self.entries.iter().map(|(a, v)| (a.as_slice(), v.as_slice()))
    }

    /// Largest `|⟨v_α, v_β⟩ − δ_{αβ}|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, (_, u)) in self.entries.iter().enumerate() {
            for (j, (_, v)) in self.entries.iter().enumerate().skip(i) {
                let ip = inner(u, v);
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((ip - want).norm());
            }
        }
        worst
    }
}

/// Builds the ladder over the ground vector `h` and verifies orthonormality
/// and the `ω` eigenvalues `q^{2|α|}` within `tol`.
pub fn ladder(
    tuple: &OpTuple,
    rank: usize,
    h: &[C64],
    depth: usize,
    tol: f64,
) -> Result<LadderBasis, OdqsError> {
    if let Some(cutoff) = tuple.cutoff() {
        if depth + 2 > cutoff {
            return Err(OdqsError::TruncationTooSmall { needed: depth, cutoff });
        }
    }
    let w = omega(tuple, rank);
    let mut entries = Vec::new();
    let mut index = HashMap::new();
    for alpha in multi_exponents(rank - 1, depth) {
        let mut v = h.to_vec();
        for k in (1..rank).rev() {
            for _ in 0..alpha[k - 1] {
                v = tuple.get(k).apply(&v);
            }
        }
        let len = norm(&v);
        if len < tol {
            return Err(OdqsError::Ladder {
                alpha,
                reason: format!("vector vanishes (norm {len:e})"),
            });
        }
        for x in &mut v {
            *x /= len;
        }
        let total: usize = alpha.iter().sum();
        let eig = tuple.q().pow(2 * total as i32);
        let residual = distance(&w.apply(&v), &v, C64::new(eig, 0.0));
        if residual > tol {
            return Err(OdqsError::Ladder {
                alpha,
                reason: format!("not an ω eigenvector for q^{} (residual {residual:e})", 2 * total),
            });
        }
        index.insert(alpha.clone(), entries.len());
        entries.push((alpha, v));
    }
    let basis = LadderBasis {
        rank,
        depth,
        entries,
        index,
    };
    let defect = basis.orthonormality_defect();
    if defect > tol {
        return Err(OdqsError::Ladder {
            alpha: Vec::new(),
            reason: format!("ladder is not orthonormal (defect {defect:e})"),
        });
    }
    Ok(basis)
}

/// The partial isometry `U = Σ_α v′_α v_α*` between two ladder spans.
#[derive(Debug, Clone)]
pub struct Intertwiner {
    source: LadderBasis,
    target: LadderBasis,
    source_dim: usize,
    target_dim: usize,
    residual: f64,
}

impl Intertwiner {
    /// Largest `‖U T_i v_α − T′_i v′_α‖` or `‖U T_i* v_α − T′_i* v′_α‖`
    /// over `|α| < A_max`.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Dimension of the ladder span.
    pub fn span(&self) -> usize {
        self.source.len()
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.target_dim];
        for ((_, u), (_, v)) in self.source.iter().zip(self.target.iter()) {
            let c = inner(u, x);
            for (o, y) in out.iter_mut().zip(v) {
                *o += c * y;
            }
        }
        out
    }

    /// `U` as a `target × source` sparse matrix, entries below `1e−15`
    /// dropped.
    pub fn matrix(&self) -> CsMat<C64> {
        let mut tri = TriMat::new((self.target_dim, self.source_dim));
        let mut acc: HashMap<(usize, usize), C64> = HashMap::new();
        for ((_, u), (_, v)) in self.source.iter().zip(self.target.iter()) {
            let us: Vec<(usize, C64)> = sparse(u);
            for (r, y) in sparse(v) {
                for &(c, x) in &us {
                    *acc.entry((r, c)).or_default() += y * x.conj();
                }
            }
        }
        let mut keys: Vec<_> = acc.into_iter().filter(|(_, z)| z.norm() > 1e-15).collect();
        keys.sort_by_key(|(k, _)| *k);
        for ((r, c), z) in keys {
            tri.add_triplet(r, c, z);
        }
        tri.to_csr()
    }
}

fn sparse(v: &[C64]) -> Vec<(usize, C64)> {
    v.iter()
        .enumerate()
        .filter(|(_, z)| z.norm() > 1e-15)
        .map(|(i, &z)| (i, z))
        .collect()
}

/// Maps the ladder of `a` onto the ladder of `b`; both tuples must be
/// irreducible with the same rank and angle.
pub fn build_intertwiner(
    a: &OpTuple,
    b: &OpTuple,
    w: Window,
    depth: usize,
    tol: f64,
) -> Result<Intertwiner, OdqsError> {
    if a.len() != b.len() {
        return Err(OdqsError::NotIsomorphic(format!(
            "tuples of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    let rank = rank_of(a, w, tol.min(1e-10))?;
    let rank_b = rank_of(b, w, tol.min(1e-10))?;
    if rank != rank_b {
        return Err(OdqsError::NotIsomorphic(format!("ranks {rank} and {rank_b}")));
    }
    let ha = h0_space(a, rank, TOL_EIG)?;
    let hb = h0_space(b, rank, TOL_EIG)?;
    let ta = angle_of(a, rank, &ha, tol)?;
    let tb = angle_of(b, rank, &hb, tol)?;
    if (ta - tb).norm() > tol {
        return Err(OdqsError::NotIsomorphic(format!("angles {ta} and {tb}")));
    }
    let source = ladder(a, rank, &ha.vector(0), depth, tol)?;
    let target = ladder(b, rank, &hb.vector(0), depth, tol)?;
    let mut u = Intertwiner {
        source,
        target,
        source_dim: a.dim(),
        target_dim: b.dim(),
        residual: 0.0,
    };
    let mut worst = 0.0f64;
    for (alpha, v) in u.source.iter() {
        if alpha.iter().sum::<usize>() >= depth {
            continue;
        }
        let v2 = u.target.get(alpha).expect("ladders share exponents");
        for i in 1..=a.len() {
            let (t, t2) = (a.get(i), b.get(i));
            worst = worst.max(distance(&u.apply(&t.apply(v)), &t2.apply(v2), C64::new(1.0, 0.0)));
            worst = worst.max(distance(
                &u.apply(&t.apply_adjoint(v)),
                &t2.apply_adjoint(v2),
                C64::new(1.0, 0.0),
            ));
        }
    }
    u.residual = worst;
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::super::tests::model;
    use super::*;

    #[test]
    fn exponents_are_counted() {
        assert_eq!(multi_exponents(0, 3), vec![Vec::<usize>::new()]);
        assert_eq!(multi_exponents(1, 2), vec![vec![0], vec![1], vec![2]]);
        // C(k + max, k) exponents in total.
        assert_eq!(multi_exponents(3, 4).len(), 35);
        assert_eq!(multi_exponents(2, 1), vec![vec![0, 0], vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn model_ladder_is_number_basis() {
        let tup = model(0.5, 12, C64::new(1.0, 0.0));
        let h0 = h0_space(&tup, 2, 1e-8).unwrap();
        let l = ladder(&tup, 2, &h0.vector(0), 6, 1e-9).unwrap();
        for k in 0..=6 {
            let v = l.get(&[k]).unwrap();
            assert!((v[k] - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
        assert!(matches!(
            ladder(&tup, 2, &h0.vector(0), 11, 1e-9),
            Err(OdqsError::TruncationTooSmall { .. })
        ));
    }

    #[test]
    fn self_intertwiner() {
        let tup = model(0.6, 12, C64::from_polar(1.0, 0.3));
        let u = build_intertwiner(&tup, &tup, Window::new(2), 5, 1e-9).unwrap();
        assert!(u.residual() < 1e-12);
        let m = u.matrix();
        for k in 0..=5 {
            assert!((m.get(k, k).copied().unwrap_or_default() - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn different_angles_are_rejected() {
        let a = model(0.6, 12, C64::from_polar(1.0, 0.3));
        let b = model(0.6, 12, C64::from_polar(1.0, 0.4));
        assert!(matches!(
            build_intertwiner(&a, &b, Window::new(2), 4, 1e-9),
            Err(OdqsError::NotIsomorphic(_))
        ));
    }
}

use nalgebra::DMatrix;

use super::{FockError, Subspace, TruncOp, C64};

/// Largest coupled block handed to the dense eigensolver.
pub const MAX_DENSE_BLOCK: usize = 4096;

/// One eigenpair of a Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    /// Sparse unit eigenvector in local indices.
    pub vector: Vec<(usize, C64)>,
    /// Index of the coupled block the vector is supported on.
    pub block: usize,
}

/// Connected components of the sparsity graph, each sorted ascending and the
/// list ordered by smallest member.
fn coupled_blocks(op: &TruncOp) -> Vec<Vec<usize>> {
    let d = op.dim();
    let mut parent: Vec<usize> = (0..d).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (r, c, _) in op.entries() {
        let (a, b) = (find(&mut parent, r), find(&mut parent, c));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut slot = vec![usize::MAX; d];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for i in 0..d {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[root]].push(i);
    }
    blocks
}

fn hermiticity_defect(op: &TruncOp) -> f64 {
    op.entries()
        .map(|(r, c, v)| (v - op.get(c, r).conj()).norm())
        .fold(0.0, f64::max)
}

/// Dense matrix of `op` restricted to `block`.
fn block_matrix(op: &TruncOp, block: &[usize], pos: &[usize]) -> DMatrix<C64> {
    let k = block.len();
    let mut m = DMatrix::zeros(k, k);
    for (a, &r) in block.iter().enumerate() {
        if let Some(row) = op.matrix().outer_view(r) {
            for (c, &v) in row.iter() {
                m[(a, pos[c])] += v;
            }
        }
    }
    m
}

/// Visits every coupled block with its local eigen-decomposition.
fn for_each_block(
    op: &TruncOp,
    mut visit: impl FnMut(usize, &[usize], &[f64], &DMatrix<C64>),
) -> Result<(), FockError> {
    let scale = op.max_abs().max(1.0);
    let defect = hermiticity_defect(op);
    if defect > 1e-12 * scale {
        return Err(FockError::NotHermitian(defect));
    }
    let blocks = coupled_blocks(op);
    if let Some(big) = blocks.iter().map(Vec::len).find(|&k| k > MAX_DENSE_BLOCK) {
        return Err(FockError::BlockTooLarge(big));
    }
    let mut pos = vec![0; op.dim()];
    for (b, block) in blocks.iter().enumerate() {
        for (a, &i) in block.iter().enumerate() {
            pos[i] = a;
        }
        let m = block_matrix(op, block, &pos);
        if block.len() == 1 {
            visit(b, block, &[m[(0, 0)].re], &DMatrix::from_element(1, 1, C64::new(1.0, 0.0)));
        } else {
            let herm = (&m + m.adjoint()) * C64::new(0.5, 0.0);
            let eig = herm.symmetric_eigen();
            visit(b, block, eig.eigenvalues.as_slice(), &eig.eigenvectors);
        }
    }
    Ok(())
}

/// Full spectral decomposition of a Hermitian operator, sorted by eigenvalue
/// descending and then by the position of each vector's dominant entry.
pub fn hermitian_eigen(op: &TruncOp) -> Result<Vec<EigenPair>, FockError> {
    let mut pairs = Vec::with_capacity(op.dim());
    for_each_block(op, |b, block, values, vectors| {
        for (j, &value) in values.iter().enumerate() {
            let col = vectors.column(j);
            let mut vector: Vec<(usize, C64)> = block
                .iter()
                .zip(col.iter())
                .filter(|(_, v)| v.norm() > 0.0)
                .map(|(&i, &v)| (i, v))
                .collect();
            fix_phase(&mut vector);
            pairs.push(EigenPair { value, vector, block: b });
        }
    })?;
    pairs.sort_by(|x, y| {
        y.value
            .total_cmp(&x.value)
            .then(dominant(&x.vector).cmp(&dominant(&y.vector)))
    });
    Ok(pairs)
}

fn dominant(v: &[(usize, C64)]) -> usize {
    let mut best = (usize::MAX, -1.0);
    for &(i, x) in v {
        let m = x.norm();
        if m > best.1 || (m == best.1 && i < best.0) {
            best = (i, m);
        }
    }
    best.0
}

/// Rotates the phase so the dominant entry is real and positive.
fn fix_phase(v: &mut [(usize, C64)]) {
    let i = dominant(v);
    if let Some(&(_, x)) = v.iter().find(|(j, _)| *j == i) {
        let phase = x.conj() / x.norm();
        for (_, y) in v.iter_mut() {
            *y *= phase;
        }
    }
}

/// Orthonormal basis of the eigenspace of `op` for eigenvalues within `tol`
/// of `target`.
///
/// The basis is canonical: inside each coupled block the spectral projector
/// is orthonormalized column by column in index order, so the result does
/// not depend on how the eigensolver rotates a degenerate eigenspace.
pub fn eigenspace(op: &TruncOp, target: f64, tol: f64) -> Result<Subspace, FockError> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(FockError::InvalidTolerance(tol));
    }
    let mut columns: Vec<Vec<(usize, C64)>> = Vec::new();
    for_each_block(op, |_, block, values, vectors| {
        let picked: Vec<usize> = (0..values.len())
            .filter(|&j| (values[j] - target).abs() <= tol)
            .collect();
        if picked.is_empty() {
            return;
        }
        if block.len() == 1 {
            columns.push(vec![(block[0], C64::new(1.0, 0.0))]);
            return;
        }
        let k = block.len();
        let v = DMatrix::from_fn(k, picked.len(), |r, c| vectors[(r, picked[c])]);
        let projector = &v * v.adjoint();
        let mut basis: Vec<nalgebra::DVector<C64>> = Vec::with_capacity(picked.len());
        for c in 0..k {
            if basis.len() == picked.len() {
                break;
            }
            let mut w = projector.column(c).into_owned();
            for _ in 0..2 {
                for u in &basis {
                    let overlap = u.dotc(&w);
                    w -= u * overlap;
                }
            }
            let norm = w.norm();
            if norm > 1e-6 {
                basis.push(w / C64::new(norm, 0.0));
            }
        }
        for u in basis {
            let mut col: Vec<(usize, C64)> = block
                .iter()
                .zip(u.iter())
                .filter(|(_, x)| x.norm() > 1e-15)
                .map(|(&i, &x)| (i, x))
                .collect();
            fix_phase(&mut col);
            columns.push(col);
        }
    })?;
    columns.sort_by_key(|c| dominant(c));
    Subspace::from_columns(op.frame().clone(), columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{FactorShape, Frame};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn diagonal_spectrum_sorted() {
        let op = TruncOp::diagonal(4, |k| c([0.5, 2.0, 0.5, 1.0][k])).unwrap();
        let pairs = hermitian_eigen(&op).unwrap();
        let values: Vec<f64> = pairs.iter().map(|p| p.value).collect();
        assert_eq!(values, vec![2.0, 1.0, 0.5, 0.5]);
        assert_eq!(pairs[2].vector, vec![(0, c(1.0))]);
    }

    #[test]
    fn rejects_non_hermitian() {
        let s = TruncOp::shift_left(3).unwrap();
        assert!(matches!(hermitian_eigen(&s), Err(FockError::NotHermitian(_))));
    }

    #[test]
    fn coupled_pair() {
        let frame = Frame::plain(FactorShape::new(vec![3]).unwrap());
        let op = TruncOp::from_triplets(
            frame,
            vec![(0, 2, c(1.0)), (2, 0, c(1.0)), (1, 1, c(3.0))],
        )
        .unwrap();
        let pairs = hermitian_eigen(&op).unwrap();
        assert!((pairs[0].value - 3.0).abs() < 1e-14);
        assert!((pairs[1].value - 1.0).abs() < 1e-14);
        assert!((pairs[2].value + 1.0).abs() < 1e-14);
        let top = eigenspace(&op, 1.0, 1e-9).unwrap();
        assert_eq!(top.len(), 1);
        let v = top.vector(0);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((v[0] - c(r)).norm() < 1e-14 && (v[2] - c(r)).norm() < 1e-14);
    }

    #[test]
    fn degenerate_basis_is_canonical() {
        // Two-dimensional eigenspace of the all-ones 3x3 shifted by identity.
        let frame = Frame::plain(FactorShape::new(vec![3]).unwrap());
        let mut t = Vec::new();
        for r in 0..3 {
            for col in 0..3 {
                t.push((r, col, c(if r == col { 0.0 } else { -1.0 })));
            }
        }
        let op = TruncOp::from_triplets(frame, t).unwrap();
        let sub = eigenspace(&op, 1.0, 1e-9).unwrap();
        assert_eq!(sub.len(), 2);
        // First vector is the normalized projector column on e_0.
        let v = sub.vector(0);
        let n = (2.0f64 / 3.0).sqrt();
        assert!((v[0] - c(n)).norm() < 1e-12);
        assert!((v[1] + c(0.5 * n)).norm() < 1e-12);
        for i in 0..2 {
            for j in 0..2 {
                let a = sub.vector(i);
                let b = sub.vector(j);
                let ip: C64 = a.iter().zip(&b).map(|(x, y)| x.conj() * y).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip - c(want)).norm() < 1e-12);
            }
        }
    }
}

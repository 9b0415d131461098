use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use nalgebra::DMatrix;
use sprs::{CsMat, TriMat};

use super::{FactorShape, FockError, Subspace, C64};

/// The coordinate system an operator acts in.
///
/// A plain frame is the full tensor space of `shape`. A labeled frame is a
/// subspace (or a direct sum of copies) whose basis vectors each carry the
/// linear index, in `shape`, of the ambient basis vector they sit closest to.
/// Windows are evaluated through these labels.
#[derive(Debug, Clone)]
pub struct Frame {
    shape: FactorShape,
    labels: Option<Arc<[usize]>>,
}

impl Frame {
    pub fn plain(shape: FactorShape) -> Self {
        Frame { shape, labels: None }
    }

    pub fn labeled(shape: FactorShape, labels: Vec<usize>) -> Result<Self, FockError> {
        let total = shape.total();
        if let Some(&bad) = labels.iter().find(|&&l| l >= total) {
            return Err(FockError::InvalidShape(format!(
                "label {bad} outside shape {shape} of dimension {total}"
            )));
        }
        Ok(Frame {
            shape,
            labels: Some(labels.into()),
        })
    }

    pub fn shape(&self) -> &FactorShape {
        &self.shape
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn is_plain(&self) -> bool {
        self.labels.is_none()
    }

    pub fn dim(&self) -> usize {
        match &self.labels {
            Some(l) => l.len(),
            None => self.shape.total(),
        }
    }

    /// Ambient linear index of local basis vector `local`.
    #[inline]
    pub fn ambient(&self, local: usize) -> usize {
        match &self.labels {
            Some(l) => l[local],
            None => local,
        }
    }
}

impl PartialEq for Frame {
    fn eq(&self, other: &Self) -> bool {
        if self.shape != other.shape {
            return false;
        }
        match (&self.labels, &other.labels) {
            (None, None) => true,
            (Some(a), Some(b)) => Arc::ptr_eq(a, b) || a[..] == b[..],
            _ => false,
        }
    }
}

/// A truncated operator: a sparse complex matrix acting in a [`Frame`].
#[derive(Debug, Clone)]
pub struct TruncOp {
    frame: Frame,
    mat: CsMat<C64>,
}

impl TruncOp {
    pub fn from_csr(frame: Frame, mat: CsMat<C64>) -> Result<Self, FockError> {
        let d = frame.dim();
        if mat.rows() != d || mat.cols() != d {
            return Err(FockError::FrameMismatch(format!(
                "matrix is {}×{} but frame has dimension {d}",
                mat.rows(),
                mat.cols()
            )));
        }
        let mat = if mat.is_csr() { mat } else { mat.to_csr() };
        Ok(TruncOp { frame, mat })
    }

    /// Builds an operator from `(row, col, value)` triplets; repeated
    /// positions are summed.
    pub fn from_triplets(
        frame: Frame,
        entries: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Result<Self, FockError> {
        let d = frame.dim();
        let mut tri = TriMat::new((d, d));
        for (r, c, v) in entries {
            if r >= d || c >= d {
                return Err(FockError::FrameMismatch(format!(
                    "entry ({r}, {c}) outside dimension {d}"
                )));
            }
            if v != C64::new(0.0, 0.0) {
                tri.add_triplet(r, c, v);
            }
        }
        Ok(TruncOp {
            frame,
            mat: tri.to_csr(),
        })
    }

    pub fn from_dense(frame: Frame, dense: &DMatrix<C64>) -> Result<Self, FockError> {
        let entries = (0..dense.nrows())
            .flat_map(|r| (0..dense.ncols()).map(move |c| (r, c)))
            .map(|(r, c)| (r, c, dense[(r, c)]))
            .collect::<Vec<_>>();
        if dense.nrows() != frame.dim() || dense.ncols() != frame.dim() {
            return Err(FockError::FrameMismatch("dense matrix size".into()));
        }
        Self::from_triplets(frame, entries)
    }

    /// Identity on a single factor of dimension `d` (`d = 1` gives the scalar 1).
    pub fn identity(d: usize) -> Self {
        let shape = FactorShape::new(vec![d.max(1)]).expect("positive dimension");
        Self::identity_on(Frame::plain(shape))
    }

    pub fn identity_on(frame: Frame) -> Self {
        Self::scalar_identity_on(frame, C64::new(1.0, 0.0))
    }

    /// `c · I` on `frame`.
    pub fn scalar_identity_on(frame: Frame, c: C64) -> Self {
        let d = frame.dim();
        Self::from_triplets(frame, (0..d).map(|k| (k, k, c))).expect("diagonal fits")
    }

    pub fn zero(frame: Frame) -> Self {
        let d = frame.dim();
        TruncOp {
            frame,
            mat: CsMat::zero((d, d)),
        }
    }

    /// The 1×1 operator `c` on the scalar shape.
    pub fn scalar(c: C64) -> Self {
        Self::scalar_identity_on(Frame::plain(FactorShape::scalar()), c)
    }

    pub fn shift_left(d: usize) -> Result<Self, FockError> {
        let frame = Frame::plain(FactorShape::fock(d)?);
        Self::from_triplets(frame, (1..d).map(|k| (k - 1, k, C64::new(1.0, 0.0))))
    }

    pub fn diagonal(d: usize, f: impl Fn(usize) -> C64) -> Result<Self, FockError> {
        let frame = Frame::plain(FactorShape::fock(d)?);
        Self::from_triplets(frame, (0..d).map(|k| (k, k, f(k))))
    }

    /// Kronecker product, leftmost operator most significant.
    pub fn tensor(ops: &[TruncOp]) -> Result<Self, FockError> {
        let (first, rest) = ops.split_first().ok_or(FockError::EmptyList)?;
        if ops.iter().any(|op| !op.frame.is_plain()) {
            return Err(FockError::FrameMismatch(
                "tensor products need plain frames".into(),
            ));
        }
        let mut shape = first.frame.shape.clone();
        let mut mat = first.mat.clone();
        for op in rest {
            shape = shape.concat(&op.frame.shape);
            mat = sprs::kronecker_product(mat.view(), op.mat.view());
        }
        Ok(TruncOp {
            frame: Frame::plain(shape),
            mat,
        })
    }

    /// Reinterprets a plain operator on a shape with the same total dimension.
    pub fn reshaped(&self, shape: FactorShape) -> Result<Self, FockError> {
        if !self.frame.is_plain() || shape.total() != self.dim() {
            return Err(FockError::FrameMismatch(format!(
                "cannot reshape dimension {} to {shape}",
                self.dim()
            )));
        }
        Ok(TruncOp {
            frame: Frame::plain(shape),
            mat: self.mat.clone(),
        })
    }

    /// Same matrix in a different frame of equal dimension.
    pub fn with_frame(&self, frame: Frame) -> Result<Self, FockError> {
        Self::from_csr(frame, self.mat.clone())
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn shape(&self) -> &FactorShape {
        &self.frame.shape
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn nnz(&self) -> usize {
        self.mat.nnz()
    }

    pub fn matrix(&self) -> &CsMat<C64> {
        &self.mat
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.mat.get(row, col).copied().unwrap_or_default()
    }

    /// Stored entries as `(row, col, value)`, row-major.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        self.mat
            .outer_iterator()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |(c, &v)| (r, c, v)).collect::<Vec<_>>())
    }

    pub fn max_abs(&self) -> f64 {
        self.mat.data().iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn adjoint(&self) -> Self {
        let mat = self.mat.transpose_view().to_csr().map(|v| v.conj());
        TruncOp {
            frame: self.frame.clone(),
            mat,
        }
    }

    pub fn scaled(&self, c: C64) -> Self {
        TruncOp {
            frame: self.frame.clone(),
            mat: self.mat.map(|v| v * c),
        }
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim(), "vector length");
        self.mat
            .outer_iterator()
            .map(|row| row.iter().map(|(c, &a)| a * v[c]).sum())
            .collect()
    }

    pub fn apply_adjoint(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim(), "vector length");
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        for (r, row) in self.mat.outer_iterator().enumerate() {
            for (c, &a) in row.iter() {
                out[c] += a.conj() * v[r];
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let d = self.dim();
        let mut out = DMatrix::zeros(d, d);
        for (r, c, v) in self.entries() {
            out[(r, c)] += v;
        }
        out
    }

    /// `V* A V` for an orthonormal basis `V` of a subspace of this frame.
    ///
    /// The result acts in a labeled frame whose labels are the ambient
    /// indices of the basis vectors.
    pub fn compress(&self, basis: &Subspace) -> Result<Self, FockError> {
        if basis.frame() != &self.frame {
            return Err(FockError::FrameMismatch(
                "subspace lives in a different frame".into(),
            ));
        }
        let v = basis.vectors();
        let vh = v.transpose_view().to_csr().map(|x| x.conj());
        let av = &self.mat * v;
        let mat = &vh * &av;
        Ok(TruncOp {
            frame: basis.compressed_frame(),
            mat: drop_zeros(mat),
        })
    }

    /// Block-diagonal `self ⊕ other`; both must share a shape.
    pub fn direct_sum(&self, other: &TruncOp) -> Result<Self, FockError> {
        if self.frame.shape != other.frame.shape {
            return Err(FockError::FrameMismatch(
                "direct sum of operators on different shapes".into(),
            ));
        }
        let d1 = self.dim();
        let labels: Vec<usize> = (0..d1)
            .map(|k| self.frame.ambient(k))
            .chain((0..other.dim()).map(|k| other.frame.ambient(k)))
            .collect();
        let frame = Frame::labeled(self.frame.shape.clone(), labels)?;
        let entries = self
            .entries()
            .chain(other.entries().map(|(r, c, v)| (r + d1, c + d1, v)))
            .collect::<Vec<_>>();
        Self::from_triplets(frame, entries)
    }

    /// `P A P*` for the permutation `P e_k = e_{perm[k]}`; labels follow the
    /// basis vectors.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, FockError> {
        let d = self.dim();
        let mut seen = vec![false; d];
        if perm.len() != d || perm.iter().any(|&p| p >= d || std::mem::replace(&mut seen[p], true)) {
            return Err(FockError::FrameMismatch("not a permutation".into()));
        }
        let mut labels = vec![0; d];
        for (k, &p) in perm.iter().enumerate() {
            labels[p] = self.frame.ambient(k);
        }
        let frame = Frame::labeled(self.frame.shape.clone(), labels)?;
        let entries = self
            .entries()
            .map(|(r, c, v)| (perm[r], perm[c], v))
            .collect::<Vec<_>>();
        Self::from_triplets(frame, entries)
    }

    /// Keeps only the rows flagged in `mask`; all other rows become empty.
    pub fn restrict_rows(&self, mask: &[bool]) -> Self {
        let d = self.dim();
        let mut tri = TriMat::new((d, d));
        for (r, row) in self.mat.outer_iterator().enumerate() {
            if mask[r] {
                for (c, &v) in row.iter() {
                    tri.add_triplet(r, c, v);
                }
            }
        }
        TruncOp {
            frame: self.frame.clone(),
            mat: tri.to_csr(),
        }
    }

    fn check_same_frame(&self, other: &TruncOp, what: &str) {
        assert!(
            self.frame == other.frame,
            "{what} of operators in different frames ({} vs {})",
            self.frame.shape,
            other.frame.shape
        );
    }
}

fn drop_zeros(mat: CsMat<C64>) -> CsMat<C64> {
    if mat.data().iter().all(|v| v.norm() > 0.0) {
        return mat;
    }
    let mut tri = TriMat::new(mat.shape());
    for (r, row) in mat.outer_iterator().enumerate() {
        for (c, &v) in row.iter() {
            if v.norm() > 0.0 {
                tri.add_triplet(r, c, v);
            }
        }
    }
    tri.to_csr()
}

impl Mul<&TruncOp> for &TruncOp {
    type Output = TruncOp;

    /// Operator composition `self · rhs`.
    fn mul(self, rhs: &TruncOp) -> TruncOp {
        self.check_same_frame(rhs, "product");
        TruncOp {
            frame: self.frame.clone(),
            mat: &self.mat * &rhs.mat,
        }
    }
}

impl Add<&TruncOp> for &TruncOp {
    type Output = TruncOp;

    fn add(self, rhs: &TruncOp) -> TruncOp {
        self.check_same_frame(rhs, "sum");
        TruncOp {
            frame: self.frame.clone(),
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl Sub<&TruncOp> for &TruncOp {
    type Output = TruncOp;

    fn sub(self, rhs: &TruncOp) -> TruncOp {
        self.check_same_frame(rhs, "difference");
        TruncOp {
            frame: self.frame.clone(),
            mat: &self.mat - &rhs.mat,
        }
    }
}

impl Mul<C64> for &TruncOp {
    type Output = TruncOp;

    fn mul(self, c: C64) -> TruncOp {
        self.scaled(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn adjoint_conjugates() {
        let frame = Frame::plain(FactorShape::fock(2).unwrap());
        let a = TruncOp::from_triplets(frame, [(0, 1, C64::new(1.0, 2.0))]).unwrap();
        assert_eq!(a.adjoint().get(1, 0), C64::new(1.0, -2.0));
        assert_eq!(a.adjoint().get(0, 1), c(0.0));
    }

    #[test]
    fn direct_sum_labels_repeat() {
        let s = TruncOp::shift_left(3).unwrap();
        let sum = s.direct_sum(&s).unwrap();
        assert_eq!(sum.dim(), 6);
        assert_eq!(sum.frame().labels().unwrap(), &[0, 1, 2, 0, 1, 2]);
        assert_eq!(sum.get(3, 4), c(1.0));
        assert_eq!(sum.get(0, 4), c(0.0));
    }

    #[test]
    fn permutation_conjugates() {
        let s = TruncOp::shift_left(3).unwrap();
        let p = s.permuted(&[2, 0, 1]).unwrap();
        // S e_1 = e_0 becomes P S P* e_0 = e_2.
        assert_eq!(p.get(2, 0), c(1.0));
        assert_eq!(p.frame().labels().unwrap(), &[1, 2, 0]);
        assert!(s.permuted(&[0, 0, 1]).is_err());
    }

    #[test]
    fn from_csr_checks_size() {
        let frame = Frame::plain(FactorShape::fock(3).unwrap());
        assert!(TruncOp::from_csr(frame, CsMat::zero((2, 2))).is_err());
    }
}

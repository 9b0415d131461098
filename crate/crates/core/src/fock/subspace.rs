use sprs::{CsMat, TriMat};

use super::{FockError, Frame, C64};

/// An orthonormal family of vectors in a frame, stored as the columns of a
/// sparse `dim × k` matrix.
///
/// Each basis vector is labeled by the ambient index of its
/// largest-magnitude coefficient (smallest index on ties).
#[derive(Debug, Clone)]
pub struct Subspace {
    frame: Frame,
    vectors: CsMat<C64>,
    labels: Vec<usize>,
}

impl Subspace {
    /// Columns given as sparse `(index, value)` lists.
    pub fn from_columns(frame: Frame, columns: Vec<Vec<(usize, C64)>>) -> Result<Self, FockError> {
        let d = frame.dim();
        let mut tri = TriMat::new((d, columns.len()));
        let mut labels = Vec::with_capacity(columns.len());
        for (j, col) in columns.iter().enumerate() {
            let mut best: Option<(usize, f64)> = None;
            for &(i, v) in col {
                if i >= d {
                    return Err(FockError::FrameMismatch(format!(
                        "vector index {i} outside dimension {d}"
                    )));
                }
                if v.norm() > 0.0 {
                    tri.add_triplet(i, j, v);
                }
                let m = v.norm();
                match best {
                    Some((bi, bm)) if m < bm || (m == bm && i > bi) => {}
                    _ => best = Some((i, m)),
                }
            }
            let (dominant, _) = best.ok_or_else(|| {
                FockError::InvalidShape(format!("basis vector {j} is empty"))
            })?;
            labels.push(frame.ambient(dominant));
        }
        Ok(Subspace {
            frame,
            vectors: tri.to_csr(),
            labels,
        })
    }

    /// Span of the given local basis vectors.
    pub fn coordinate(frame: Frame, indices: &[usize]) -> Result<Self, FockError> {
        let cols = indices
            .iter()
            .map(|&i| vec![(i, C64::new(1.0, 0.0))])
            .collect();
        Self::from_columns(frame, cols)
    }

    /// The whole frame.
    pub fn full(frame: Frame) -> Self {
        let d = frame.dim();
        let idx: Vec<usize> = (0..d).collect();
        Self::coordinate(frame, &idx).expect("indices in range")
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn vectors(&self) -> &CsMat<C64> {
        &self.vectors
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.vectors.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Frame of operators compressed onto this subspace.
    pub fn compressed_frame(&self) -> Frame {
        Frame::labeled(self.frame.shape().clone(), self.labels.clone())
            .expect("labels come from the ambient frame")
    }

    /// Dense copy of basis vector `j`.
    pub fn vector(&self, j: usize) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); self.frame.dim()];
        for (r, row) in self.vectors.outer_iterator().enumerate() {
            if let Some(&x) = row.get(j) {
                v[r] = x;
            }
        }
        v
    }

    /// Expresses a subspace of the compressed frame in this subspace's frame.
    pub fn embed(&self, inner: &Subspace) -> Result<Subspace, FockError> {
        if inner.frame != self.compressed_frame() {
            return Err(FockError::FrameMismatch(
                "inner subspace does not live in the compressed frame".into(),
            ));
        }
        let product = &self.vectors * &inner.vectors;
        let product = if product.is_csc() { product } else { product.to_csc() };
        let columns = product
            .outer_iterator()
            .map(|col| col.iter().map(|(i, &v)| (i, v)).collect())
            .collect();
        Subspace::from_columns(self.frame.clone(), columns)
    }
}

//! Truncated Fock-space linear algebra.
//!
//! Every operator lives on a tensor product of truncated copies of
//! `L₂(ℕ)`. A factor of dimension `D` keeps the basis vectors
//! `e_0, …, e_{D-1}`; a factor of dimension 1 stands for a scalar (ℂ)
//! factor. Multi-indices are linearized row-major over the factor list,
//! leftmost factor most significant.
//!
//! Truncation breaks exact identities only near the top of each factor,
//! so comparisons are made inside a [`Window`] that drops the top
//! `margin` indices of every non-scalar factor.

mod op;
mod spectral;
mod subspace;
mod window;

pub use op::{Frame, TruncOp};
pub use spectral::{eigenspace, hermitian_eigen, EigenPair, MAX_DENSE_BLOCK};
pub use subspace::Subspace;
pub(crate) use window::masked_max;
pub use window::{window_equal, window_norm, RelationReport, RelationResidual, Window, WindowReport};

use num_complex::Complex64;
use thiserror::Error;

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;

/// Default Fock cutoff.
pub const DEFAULT_CUTOFF: usize = 12;
/// Default window margin for quadratic relations.
pub const DEFAULT_MARGIN: usize = 2;
/// Residual tolerance for relations that hold exactly inside the window.
pub const TOL_RELATION: f64 = 1e-10;
/// Tolerance for matching eigenvalues.
pub const TOL_EIG: f64 = 1e-8;
/// An operator whose windowed max-entry is below this is treated as zero.
pub const ZERO_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("invalid dimension {0}: a Fock factor needs at least 2 basis vectors")]
    InvalidDimension(usize),
    #[error("invalid factor shape: {0}")]
    InvalidShape(String),
    #[error("deformation parameter q = {0} must lie strictly between 0 and 1")]
    InvalidQ(f64),
    #[error("frame mismatch: {0}")]
    FrameMismatch(String),
    #[error("window margin {margin} leaves no room in a factor of dimension {min_dim}")]
    WindowTooWide { margin: usize, min_dim: usize },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("empty operator list")]
    EmptyList,
    #[error("coupled block of size {0} is too large for dense diagonalization")]
    BlockTooLarge(usize),
    #[error("operator is not Hermitian: max |A - A*| = {0:e}")]
    NotHermitian(f64),
}

/// The deformation parameter `q ∈ (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QParam(f64);

impl QParam {
    pub fn new(q: f64) -> Result<Self, FockError> {
        if q.is_finite() && q > 0.0 && q < 1.0 {
            Ok(QParam(q))
        } else {
            Err(FockError::InvalidQ(q))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// `q^k` for a (possibly negative) integer exponent.
    #[inline]
    pub fn pow(self, k: i32) -> f64 {
        self.0.powi(k)
    }
}

/// Dimensions of the truncated factors of a tensor-product space.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FactorShape {
    dims: Vec<usize>,
}

impl FactorShape {
    /// A factor of dimension 1 is a scalar factor; every other factor must
    /// have at least two basis vectors.
    pub fn new(dims: Vec<usize>) -> Result<Self, FockError> {
        if dims.is_empty() {
            return Err(FockError::InvalidShape("factor list is empty".into()));
        }
        if let Some(&d) = dims.iter().find(|&&d| d == 0) {
            return Err(FockError::InvalidDimension(d));
        }
        dims.iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| FockError::InvalidShape("total dimension overflows".into()))?;
        Ok(FactorShape { dims })
    }

    /// The one-dimensional shape `[1]`.
    pub fn scalar() -> Self {
        FactorShape { dims: vec![1] }
    }

    pub fn fock(d: usize) -> Result<Self, FockError> {
        if d < 2 {
            return Err(FockError::InvalidDimension(d));
        }
        Ok(FactorShape { dims: vec![d] })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn num_factors(&self) -> usize {
        self.dims.len()
    }

    /// Number of factors with dimension greater than one.
    pub fn fock_factors(&self) -> usize {
        self.dims.iter().filter(|&&d| d > 1).count()
    }

    /// Smallest non-scalar factor dimension, if any.
    pub fn min_fock_dim(&self) -> Option<usize> {
        self.dims.iter().copied().filter(|&d| d > 1).min()
    }

    pub fn concat(&self, other: &FactorShape) -> FactorShape {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        FactorShape { dims }
    }

    pub fn multi_index(&self, mut linear: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims.len()];
        for (slot, &d) in idx.iter_mut().zip(&self.dims).rev() {
            *slot = linear % d;
            linear /= d;
        }
        idx
    }

    pub fn linear_index(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.dims.len());
        multi
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&k, &d)| acc * d + k)
    }
}

impl std::fmt::Display for FactorShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        write!(f, "[{}]", parts.join("⊗"))
    }
}

/// Left shift `S e_k = e_{k-1}`, `S e_0 = 0` on a factor of dimension `d`.
pub fn shift_left(d: usize) -> Result<TruncOp, FockError> {
    TruncOp::shift_left(d)
}

/// Diagonal operator `e_k ↦ f(q, k) e_k`.
pub fn diag_weight(
    q: QParam,
    d: usize,
    f: impl Fn(f64, usize) -> C64,
) -> Result<TruncOp, FockError> {
    TruncOp::diagonal(d, |k| f(q.value(), k))
}

/// Kronecker product in the fixed linearization order.
pub fn tensor(ops: &[TruncOp]) -> Result<TruncOp, FockError> {
    TruncOp::tensor(ops)
}

/// `q^N`.
pub fn q_number(q: QParam, d: usize) -> Result<TruncOp, FockError> {
    diag_weight(q, d, |q, k| C64::new(q.powi(k as i32), 0.0))
}

/// `−q^{N+1}`.
pub fn neg_q_number_plus_one(q: QParam, d: usize) -> Result<TruncOp, FockError> {
    diag_weight(q, d, |q, k| C64::new(-q.powi(k as i32 + 1), 0.0))
}

/// `√(1−q^{2N})`.
pub fn defect_root(q: QParam, d: usize) -> Result<TruncOp, FockError> {
    diag_weight(q, d, |q, k| C64::new((1.0 - q.powi(2 * k as i32)).sqrt(), 0.0))
}

/// `√(1−q^{2N+2})`.
pub fn defect_root_shifted(q: QParam, d: usize) -> Result<TruncOp, FockError> {
    diag_weight(q, d, |q, k| {
        C64::new((1.0 - q.powi(2 * k as i32 + 2)).sqrt(), 0.0)
    })
}

/// The lowering arrow `√(1−q^{2N+2}) S`.
pub fn lowering(q: QParam, d: usize) -> Result<TruncOp, FockError> {
    Ok(&defect_root_shifted(q, d)? * &shift_left(d)?)
}

/// The raising arrow `S* √(1−q^{2N+2})`.
pub fn raising(q: QParam, d: usize) -> Result<TruncOp, FockError> {
    Ok(&shift_left(d)?.adjoint() * &defect_root_shifted(q, d)?)
}

/// `√(1−q^{2N}) S*`, which agrees with [`raising`] away from the cut.
pub fn raising_closed(q: QParam, d: usize) -> Result<TruncOp, FockError> {
    Ok(&defect_root(q, d)? * &shift_left(d)?.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(d: usize, k: usize) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); d];
        v[k] = C64::new(1.0, 0.0);
        v
    }

    fn close(a: &[C64], b: &[C64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol)
    }

    #[test]
    fn shift_left_moves_down() {
        let s = shift_left(3).unwrap();
        assert!(close(&s.apply(&basis(3, 1)), &basis(3, 0), 0.0));
        assert!(close(&s.apply(&basis(3, 0)), &[C64::new(0.0, 0.0); 3], 0.0));
        let sa = s.adjoint();
        assert!(close(&sa.apply(&basis(3, 2)), &[C64::new(0.0, 0.0); 3], 0.0));
        assert!(close(&sa.apply(&basis(3, 0)), &basis(3, 1), 0.0));
    }

    #[test]
    fn shift_left_rejects_small_dimension() {
        assert_eq!(shift_left(1).unwrap_err(), FockError::InvalidDimension(1));
        assert!(shift_left(0).is_err());
    }

    #[test]
    fn diag_weight_evaluates() {
        let q = QParam::new(0.5).unwrap();
        let op = q_number(q, 3).unwrap();
        for (k, want) in [1.0, 0.5, 0.25].into_iter().enumerate() {
            assert_eq!(op.get(k, k), C64::new(want, 0.0));
        }
    }

    #[test]
    fn arrow_operators_match_table() {
        let q = QParam::new(0.5).unwrap();
        let minus = lowering(q, 3).unwrap();
        let mut want = basis(3, 0);
        want[0] *= (1.0f64 - 0.25).sqrt();
        assert!(close(&minus.apply(&basis(3, 1)), &want, 1e-15));

        let plus = raising(q, 3).unwrap();
        let mut want = basis(3, 1);
        want[1] *= (1.0f64 - 0.25).sqrt();
        assert!(close(&plus.apply(&basis(3, 0)), &want, 1e-15));
    }

    #[test]
    fn raising_forms_agree_below_cut() {
        let q = QParam::new(0.3).unwrap();
        let a = raising(q, 8).unwrap();
        let b = raising_closed(q, 8).unwrap();
        assert!(window_equal(&a, &b, Window::new(0), 1e-15).unwrap().equal);
    }

    #[test]
    fn q_param_bounds() {
        assert!(QParam::new(0.0).is_err());
        assert!(QParam::new(1.0).is_err());
        assert!(QParam::new(f64::NAN).is_err());
        assert!(QParam::new(0.999).is_ok());
    }

    #[test]
    fn tensor_small_cases() {
        let id6 = tensor(&[TruncOp::identity(2), TruncOp::identity(3)]).unwrap();
        assert!(window_equal(&id6, &TruncOp::identity(6).reshaped(FactorShape::new(vec![2, 3]).unwrap()).unwrap(), Window::new(0), 0.0).unwrap().equal);

        let q = QParam::new(0.5).unwrap();
        let a = q_number(q, 2).unwrap();
        assert_eq!(tensor(std::slice::from_ref(&a)).unwrap().get(1, 1), a.get(1, 1));

        // (q^N ⊗ S) e_(0,1) = e_(0,0): entry (00, 01) is 1.
        let k = tensor(&[a, shift_left(2).unwrap()]).unwrap();
        assert_eq!(k.get(0, 1), C64::new(1.0, 0.0));
        assert_eq!(k.shape().dims(), &[2, 2]);
    }

    #[test]
    fn tensor_rejects_empty() {
        assert_eq!(tensor(&[]).unwrap_err(), FockError::EmptyList);
    }

    #[test]
    fn shift_products_in_window() {
        let s = shift_left(8).unwrap();
        let id = TruncOp::identity(8);
        let ss = &s * &s.adjoint();
        assert!(window_equal(&ss, &id, Window::new(1), 1e-12).unwrap().equal);
        let r = window_equal(&(&s.adjoint() * &s), &id, Window::new(0), 1e-12).unwrap();
        assert!(!r.equal);
        assert!((r.max_inside - 1.0).abs() < 1e-15);
    }

    #[test]
    fn multi_index_round_trip() {
        let shape = FactorShape::new(vec![1, 3, 4, 2]).unwrap();
        for lin in 0..shape.total() {
            assert_eq!(shape.linear_index(&shape.multi_index(lin)), lin);
        }
        assert_eq!(shape.multi_index(5), vec![0, 0, 2, 1]);
    }
}

use super::{FockError, Frame, TruncOp};

/// Drops the top `margin` indices of every non-scalar factor.
///
/// A relation built from words of length at most `d` in the elementary
/// operators can only be spoiled by the cut within `d` steps of the top, so
/// the window margin is the word length of the relation being checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    margin: usize,
}

impl Window {
    pub fn new(margin: usize) -> Self {
        Window { margin }
    }

    pub fn margin(self) -> usize {
        self.margin
    }

    /// Per local basis vector: does it lie inside the window?
    pub fn mask(self, frame: &Frame) -> Result<Vec<bool>, FockError> {
        let shape = frame.shape();
        if let Some(min_dim) = shape.min_fock_dim() {
            if self.margin >= min_dim {
                return Err(FockError::WindowTooWide {
                    margin: self.margin,
                    min_dim,
                });
            }
        }
        let inside_ambient = |lin: usize| {
            shape
                .multi_index(lin)
                .iter()
                .zip(shape.dims())
                .all(|(&k, &d)| d == 1 || k + self.margin < d)
        };
        Ok((0..frame.dim())
            .map(|local| inside_ambient(frame.ambient(local)))
            .collect())
    }
}

/// Outcome of a windowed comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowReport {
    pub equal: bool,
    pub max_inside: f64,
    pub max_overall: f64,
}

/// Entrywise comparison of `a` and `b` restricted to the window.
pub fn window_equal(a: &TruncOp, b: &TruncOp, w: Window, tol: f64) -> Result<WindowReport, FockError> {
    if tol.is_nan() || tol < 0.0 {
        return Err(FockError::InvalidTolerance(tol));
    }
    if a.frame() != b.frame() {
        return Err(FockError::FrameMismatch(format!(
            "cannot compare operators on {} and {}",
            a.shape(),
            b.shape()
        )));
    }
    let mask = w.mask(a.frame())?;
    let diff = a - b;
    let (inside, overall) = masked_max(&diff, &mask);
    Ok(WindowReport {
        equal: inside <= tol,
        max_inside: inside,
        max_overall: overall,
    })
}

/// Largest entry magnitude of `a` inside the window.
pub fn window_norm(a: &TruncOp, w: Window) -> Result<f64, FockError> {
    let mask = w.mask(a.frame())?;
    Ok(masked_max(a, &mask).0)
}

/// `(max inside mask, max overall)` of entry magnitudes.
pub(crate) fn masked_max(a: &TruncOp, mask: &[bool]) -> (f64, f64) {
    let mut inside = 0.0f64;
    let mut overall = 0.0f64;
    for (r, row) in a.matrix().outer_iterator().enumerate() {
        for (c, v) in row.iter() {
            let m = v.norm();
            overall = overall.max(m);
            if mask[r] && mask[c] {
                inside = inside.max(m);
            }
        }
    }
    (inside, overall)
}

/// Windowed residual of one family of relations.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationResidual {
    pub family: String,
    /// Number of index combinations checked.
    pub instances: usize,
    pub residual: f64,
    /// Index combination attaining the residual.
    pub worst: Option<String>,
}

/// Per-family residuals of a relation system.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationReport {
    pub margin: usize,
    pub tol: f64,
    pub families: Vec<RelationResidual>,
}

impl RelationReport {
    pub fn new(margin: usize, tol: f64) -> Self {
        RelationReport {
            margin,
            tol,
            families: Vec::new(),
        }
    }

    /// Adds a family with no instances yet.
    pub fn family(&mut self, name: &str) {
        if self.get(name).is_none() {
            self.families.push(RelationResidual {
                family: name.to_string(),
                instances: 0,
                residual: 0.0,
                worst: None,
            });
        }
    }

    /// Records one instance of `family`.
    pub fn record(&mut self, family: &str, residual: f64, instance: impl FnOnce() -> String) {
        self.family(family);
        let entry = self
            .families
            .iter_mut()
            .find(|f| f.family == family)
            .expect("family just added");
        entry.instances += 1;
        if residual > entry.residual || entry.worst.is_none() {
            entry.residual = entry.residual.max(residual);
            entry.worst = Some(instance());
        }
    }

    pub fn get(&self, family: &str) -> Option<&RelationResidual> {
        self.families.iter().find(|f| f.family == family)
    }

    pub fn max_residual(&self) -> f64 {
        self.families.iter().map(|f| f.residual).fold(0.0, f64::max)
    }

    pub fn pass(&self) -> bool {
        self.families.iter().all(|f| f.residual <= self.tol)
    }

    /// Names of the families over tolerance.
    pub fn failing(&self) -> Vec<&str> {
        self.families
            .iter()
            .filter(|f| f.residual > self.tol)
            .map(|f| f.family.as_str())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{FactorShape, C64};

    #[test]
    fn mask_skips_scalar_factors() {
        let frame = Frame::plain(FactorShape::new(vec![1, 4]).unwrap());
        assert_eq!(Window::new(1).mask(&frame).unwrap(), vec![true, true, true, false]);
    }

    #[test]
    fn mask_rejects_wide_margin() {
        let frame = Frame::plain(FactorShape::new(vec![3]).unwrap());
        assert!(matches!(
            Window::new(3).mask(&frame),
            Err(FockError::WindowTooWide { margin: 3, min_dim: 3 })
        ));
    }

    #[test]
    fn compare_requires_same_frame() {
        let a = TruncOp::identity(3);
        let b = TruncOp::identity(4);
        assert!(window_equal(&a, &b, Window::new(0), 1e-12).is_err());
    }

    #[test]
    fn report_tracks_worst() {
        let mut r = RelationReport::new(2, 1e-10);
        r.record("x", 1e-12, || "a".into());
        r.record("x", 1e-3, || "b".into());
        r.record("x", 1e-5, || "c".into());
        r.family("y");
        let x = r.get("x").unwrap();
        assert_eq!(x.instances, 3);
        assert_eq!(x.worst.as_deref(), Some("b"));
        assert!(!r.pass());
        assert_eq!(r.failing(), vec!["x"]);
        let _ = C64::new(0.0, 0.0);
    }
}

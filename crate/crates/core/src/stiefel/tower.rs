use super::{StiefelError, StiefelGenerators};
use crate::fock::{
    hermitian_eigen, window_norm, RelationReport, Subspace, TruncOp, Window, C64, TOL_EIG,
};
use crate::odqs::{
    check_odqs, ground_state_residual, h0_space, omega_spectrum, rank_of, scalar_on, OdqsError,
    OmegaSpectrum, OpTuple,
};
use crate::qgrp::AngleVector;

/// One level of the rank/angle tower.
#[derive(Debug, Clone)]
pub struct TowerLevel {
    pub level: usize,
    /// The rank `ℓ_i` of the level tuple.
    pub rank: usize,
    /// `c_i = f_{ℓ_i}`.
    pub c: usize,
    /// The angle `t_i`.
    pub angle: C64,
    /// Surviving columns, descending.
    pub columns: Vec<usize>,
    /// `g_i(f)` for each surviving column, in the same order.
    pub g: Vec<usize>,
    /// The level tuple `T_k^i` on `ℋ_0^i`.
    pub tuple: OpTuple,
    /// Relation residuals of the level tuple.
    pub relations: RelationReport,
    pub spectrum: OmegaSpectrum,
    /// Orthonormal basis of `ℋ_0^{i+1}` in the ambient frame.
    pub next_space: Subspace,
}

/// The full tower of a representation.
#[derive(Debug, Clone)]
pub struct Tower {
    pub levels: Vec<TowerLevel>,
    /// Basis of `ℋ_0^i` for `i = 1..=m`; `None` stands for the whole space.
    spaces: Vec<Option<Subspace>>,
}

impl Tower {
    /// Basis of `ℋ_0^i` (`None` for the whole space at level 1).
    pub fn space(&self, level: usize) -> Option<&Subspace> {
        self.spaces[level - 1].as_ref()
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.rank).collect()
    }

    /// Dimension of the final ground space `ℋ_0^{m+1}`.
    pub fn multiplicity(&self) -> usize {
        self.levels.last().map_or(0, |l| l.next_space.len())
    }
}

fn restrict(op: &TruncOp, space: Option<&Subspace>) -> Result<TruncOp, StiefelError> {
    Ok(match space {
        None => op.clone(),
        Some(s) => op.compress(s)?,
    })
}

/// Runs the extraction tower: at level `i` the surviving columns of row
/// `n − i + 1`, rescaled by `(−1)^g / q^g` and restricted to `ℋ_0^i`, form an
/// odd-sphere tuple whose rank, ground space and angle give `ℓ_i`, `ℋ_0^{i+1}`
/// and `t_i`.
pub fn extract_tower(
    g: &StiefelGenerators,
    w: Window,
    tol_relation: f64,
    tol_eig: f64,
) -> Result<Tower, StiefelError> {
    let n = g.n();
    let q = g.q();
    let cutoff = g.frame().shape().min_fock_dim();
    let mut chosen: Vec<usize> = Vec::new();
    let mut space: Option<Subspace> = None;
    let mut spaces = Vec::new();
    let mut levels = Vec::new();
    for level in 1..=g.m() {
        let row = n - level + 1;
        let columns: Vec<usize> = (1..=n).rev().filter(|f| !chosen.contains(f)).collect();
        let gs: Vec<usize> = columns
            .iter()
            .map(|&f| chosen.iter().filter(|&&c| c < f).count())
            .collect();
        let ops = columns
            .iter()
            .zip(&gs)
            .map(|(&f, &gf)| {
                let sign = if gf % 2 == 0 { 1.0 } else { -1.0 };
                let scale = C64::new(sign / q.pow(gf as i32), 0.0);
                Ok(restrict(g.w(row, f), space.as_ref())?.scaled(scale))
            })
            .collect::<Result<Vec<_>, StiefelError>>()?;
        let tuple = OpTuple::new(q, ops)?;
        let inconsistent = |reason: String| StiefelError::Inconsistent { level, reason };
        let relations = check_odqs(&tuple, w, tol_relation)?;
        if !relations.pass() {
            return Err(inconsistent(format!(
                "level tuple violates {} (max residual {:e})",
                relations.failing().join(", "),
                relations.max_residual()
            )));
        }
        let rank = rank_of(&tuple, w, tol_relation).map_err(|e| inconsistent(e.to_string()))?;
        let spectrum = omega_spectrum(&tuple, rank, tol_eig).map_err(|e| inconsistent(e.to_string()))?;
        let h0 = match h0_space(&tuple, rank, tol_eig) {
            Ok(h0) => h0,
            Err(OdqsError::EmptyGroundSpace) => {
                let c = cutoff.unwrap_or(2);
                return Err(StiefelError::TruncationTooSmall {
                    level,
                    cutoff: c,
                    suggested: c + 4,
                });
            }
            Err(e) => return Err(e.into()),
        };
        let angle = scalar_on(tuple.get(rank), &h0, tol_relation.max(1e-9)).map_err(|e| {
            StiefelError::ClassificationFailed {
                level,
                reason: e.to_string(),
            }
        })?;
        let next_space = match &space {
            None => h0,
            Some(s) => s.embed(&h0)?,
        };
        let c = columns[rank - 1];
        chosen.push(c);
        spaces.push(space.take());
        space = Some(next_space.clone());
        levels.push(TowerLevel {
            level,
            rank,
            c,
            angle,
            columns,
            g: gs,
            tuple,
            relations,
            spectrum,
            next_space,
        });
    }
    Ok(Tower { levels, spaces })
}

/// The recovered datum `(a, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub a: Vec<usize>,
    pub t: AngleVector,
    /// Dimension of the final ground space: 1 for an irreducible input,
    /// the number of summands for a direct sum of copies.
    pub multiplicity: usize,
}

/// `a_i = n + 2 − i − ℓ_i` and `t_i` from the tower.
pub fn classify(
    g: &StiefelGenerators,
    w: Window,
    tol_relation: f64,
    tol_eig: f64,
) -> Result<(Classification, Tower), StiefelError> {
    let tower = extract_tower(g, w, tol_relation, tol_eig)?;
    let n = g.n();
    let mut a = Vec::with_capacity(tower.levels.len());
    for lvl in &tower.levels {
        let i = lvl.level;
        if lvl.rank + i > n + 1 {
            return Err(StiefelError::ClassificationFailed {
                level: i,
                reason: format!("rank {} exceeds the {} available columns", lvl.rank, n + 1 - i),
            });
        }
        a.push(n + 2 - i - lvl.rank);
    }
    let t = AngleVector::new(tower.levels.iter().map(|l| l.angle).collect())?;
    let multiplicity = tower.multiplicity();
    Ok((Classification { a, t, multiplicity }, tower))
}

/// Smallest singular value of `T_{ℓ_j}^j` on the windowed part of `ℋ_0^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelCheck {
    pub level: usize,
    pub min_singular: f64,
    pub threshold: f64,
}

/// Vanishing identities on the tower.
#[derive(Debug, Clone, PartialEq)]
pub struct VanishingReport {
    /// Max over `k < j` of `‖π(u_{c_k}^{n−j+1})‖` on `ℋ_0^j`.
    pub chosen_columns: f64,
    /// Max over `k < c_j` of `‖π(u_k^{n−j+1})‖` on `ℋ_0^j`.
    pub low_columns: f64,
    /// Max over levels of `‖T_i* h‖`, `‖T_i*T_i h − (1−q²)h‖` for `i < ℓ`,
    /// `h ∈ ℋ_0^{j+1}`.
    pub ground_state: f64,
    pub kernels: Vec<KernelCheck>,
    /// Instances checked for the two vanishing families.
    pub instances: usize,
}

impl VanishingReport {
    pub fn pass(&self, tol: f64) -> bool {
        self.chosen_columns <= tol
            && self.low_columns <= tol
            && self.kernels.iter().all(|k| k.min_singular >= k.threshold)
    }
}

/// Checks that the generators the tower discards really vanish on each
/// `ℋ_0^j`, and that each `T_{ℓ_j}^j` is injective on the window.
///
/// Injectivity is measured against `q^{D·f}` with `D` the cutoff and `f` the
/// number of Fock factors, the smallest singular value an untruncated
/// product of `q^N` factors can reach inside the window.
pub fn check_vanishing(g: &StiefelGenerators, tower: &Tower, w: Window) -> Result<VanishingReport, StiefelError> {
    let n = g.n();
    let mut chosen_columns = 0.0f64;
    let mut low_columns = 0.0f64;
    let mut ground_state = 0.0f64;
    let mut instances = 0;
    let mut kernels = Vec::new();
    let shape = g.frame().shape();
    let threshold = match shape.min_fock_dim() {
        Some(d) => g.q().pow((d * shape.fock_factors()) as i32),
        None => 0.0,
    };
    for lvl in &tower.levels {
        let j = lvl.level;
        let space = tower.space(j);
        let row = n - j + 1;
        for prev in &tower.levels[..j - 1] {
            let op = restrict(g.w(row, prev.c), space)?;
            chosen_columns = chosen_columns.max(window_norm(&op, w)?);
            instances += 1;
        }
        for k in 1..lvl.c {
            let op = restrict(g.w(row, k), space)?;
            low_columns = low_columns.max(window_norm(&op, w)?);
            instances += 1;
        }
        let h0 = h0_space(&lvl.tuple, lvl.rank, TOL_EIG)?;
        ground_state = ground_state.max(ground_state_residual(&lvl.tuple, lvl.rank, &h0));
        let t = lvl.tuple.get(lvl.rank);
        let mask = w.mask(t.frame())?;
        let inside: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
        let window = Subspace::coordinate(t.frame().clone(), &inside)?;
        let gram = (&t.adjoint() * t).compress(&window)?;
        let min_eig = hermitian_eigen(&gram)?
            .last()
            .map_or(0.0, |p| p.value.max(0.0));
        kernels.push(KernelCheck {
            level: j,
            min_singular: min_eig.sqrt(),
            threshold,
        });
    }
    Ok(VanishingReport {
        chosen_columns,
        low_columns,
        ground_state,
        kernels,
        instances,
    })
}

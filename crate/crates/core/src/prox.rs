//! Closed-form proximal operators and distance-to-subdifferential formulas
//! for the supported nonsmooth terms.
//!
//! Every prox here returns a *global* minimizer of
//! `gamma/2 ||y - z||^2 + phi(y)`, separably per coordinate, which is what
//! the backtracking subproblem requires even for the nonconvex `l0` term.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::BoxSet;

#[derive(Debug, Error, PartialEq)]
pub enum ProxError {
    #[error("weight must be positive, got {0}")]
    NonPositiveWeight(f64),
    #[error("dimension mismatch: box has dimension {box_dim}, oracle wants {wanted}")]
    DimensionMismatch { box_dim: usize, wanted: usize },
    #[error("dimension must be at least 1")]
    ZeroDimension,
}

/// The nonsmooth term `phi` of the composite objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NonsmoothKind {
    /// `phi(x) = weight ||x||_1`
    L1 { weight: f64 },
    /// `phi(x) = weight #{i : x_i != 0}`
    L0 { weight: f64 },
    /// Indicator of a box.
    BoxIndicator { lower: Vec<f64>, upper: Vec<f64> },
    /// `phi == 0`
    Zero,
}

/// Componentwise shrinkage `sign(z_i) max(|z_i| - t, 0)`, the prox of
/// `t ||.||_1` with unit quadratic weight.
pub fn soft_threshold(z: &[f64], t: f64) -> Vec<f64> {
    assert!(t > 0.0);
    z.iter().map(|&zi| zi.signum() * (zi.abs() - t).max(0.0)).collect()
}

/// Prox of `lambda ||.||_0` at quadratic weight `gamma`: keep `z_i` when
/// `|z_i| > sqrt(2 lambda / gamma)`, zero it otherwise. The tie at equality
/// has two global minimizers; we return 0.
pub fn hard_threshold(z: &[f64], lambda: f64, gamma: f64) -> Vec<f64> {
    assert!(lambda > 0.0 && gamma > 0.0);
    let cut = (2.0 * lambda / gamma).sqrt();
    z.iter().map(|&zi| if zi.abs() > cut { zi } else { 0.0 }).collect()
}

/// Componentwise clamp onto the box; prox of its indicator for any `gamma`.
pub fn project_box(z: &[f64], set: &BoxSet) -> Vec<f64> {
    set.project(z)
}

/// Euclidean distance from `v` to the subdifferential of `lambda ||.||_1`
/// at `x`: per coordinate `|v_i - lambda sign(x_i)|` on the support and the
/// distance from `v_i` to `[-lambda, lambda]` off it.
pub fn subdiff_dist_l1(x: &[f64], v: &[f64], lambda: f64) -> f64 {
    assert!(lambda > 0.0);
    assert_eq!(x.len(), v.len());
    x.iter()
        .zip(v)
        .map(|(&xi, &vi)| {
            let d = if xi != 0.0 {
                vi - lambda * xi.signum()
            } else {
                (vi.abs() - lambda).max(0.0)
            };
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

pub trait NonsmoothOracle: Send + Sync {
    fn dim(&self) -> usize;
    /// Extended-real value; `+inf` outside the domain.
    fn eval(&self, x: &[f64]) -> f64;
    /// Global minimizer of `gamma/2 ||y - z||^2 + phi(y)`.
    fn prox(&self, z: &[f64], gamma: f64) -> Vec<f64>;
    /// Distance from `v` to the limiting subdifferential of `phi` at `x`,
    /// when a closed form is available.
    fn subdiff_dist(&self, x: &[f64], v: &[f64]) -> Option<f64>;
}

/// Library-backed nonsmooth oracle dispatching on [`NonsmoothKind`].
pub struct NonsmoothTerm {
    kind: NonsmoothKind,
    box_set: Option<BoxSet>,
    dim: usize,
}

pub fn make_nonsmooth(kind: NonsmoothKind, dim: usize) -> Result<NonsmoothTerm, ProxError> {
    if dim == 0 {
        return Err(ProxError::ZeroDimension);
    }
    let box_set = match &kind {
        NonsmoothKind::L1 { weight } | NonsmoothKind::L0 { weight } => {
            if *weight <= 0.0 {
                return Err(ProxError::NonPositiveWeight(*weight));
            }
            None
        }
        NonsmoothKind::BoxIndicator { lower, upper } => {
            if lower.len() != dim {
                return Err(ProxError::DimensionMismatch { box_dim: lower.len(), wanted: dim });
            }
            Some(
                BoxSet::new(lower.clone(), upper.clone())
                    .map_err(|_| ProxError::DimensionMismatch { box_dim: lower.len(), wanted: dim })?,
            )
        }
        NonsmoothKind::Zero => None,
    };
    Ok(NonsmoothTerm { kind, box_set, dim })
}

impl NonsmoothTerm {
    pub fn kind(&self) -> &NonsmoothKind {
        &self.kind
    }
}

impl NonsmoothOracle for NonsmoothTerm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim);
        match &self.kind {
            NonsmoothKind::L1 { weight } => weight * x.iter().map(|xi| xi.abs()).sum::<f64>(),
            NonsmoothKind::L0 { weight } => {
                weight * x.iter().filter(|xi| **xi != 0.0).count() as f64
            }
            NonsmoothKind::BoxIndicator { .. } => {
                let set = self.box_set.as_ref().expect("validated in make_nonsmooth");
                if set.contains(x) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            NonsmoothKind::Zero => 0.0,
        }
    }

    fn prox(&self, z: &[f64], gamma: f64) -> Vec<f64> {
        assert_eq!(z.len(), self.dim);
        assert!(gamma > 0.0);
        match &self.kind {
            NonsmoothKind::L1 { weight } => soft_threshold(z, weight / gamma),
            NonsmoothKind::L0 { weight } => hard_threshold(z, *weight, gamma),
            NonsmoothKind::BoxIndicator { .. } => {
                project_box(z, self.box_set.as_ref().expect("validated in make_nonsmooth"))
            }
            NonsmoothKind::Zero => z.to_vec(),
        }
    }

    fn subdiff_dist(&self, x: &[f64], v: &[f64]) -> Option<f64> {
        assert_eq!(x.len(), self.dim);
        assert_eq!(v.len(), self.dim);
        match &self.kind {
            NonsmoothKind::L1 { weight } => Some(subdiff_dist_l1(x, v, *weight)),
            // Limiting subdifferential of the counting term: {0} on the
            // support, the whole line at zero coordinates.
            NonsmoothKind::L0 { .. } => Some(
                x.iter()
                    .zip(v)
                    .map(|(&xi, &vi)| if xi != 0.0 { vi * vi } else { 0.0 })
                    .sum::<f64>()
                    .sqrt(),
            ),
            NonsmoothKind::BoxIndicator { .. } => {
                let set = self.box_set.as_ref().expect("validated in make_nonsmooth");
                if !set.contains(x) {
                    return None;
                }
                // Distance to the normal cone of the box at x, per coordinate.
                Some(
                    x.iter()
                        .zip(v)
                        .zip(set.lower().iter().zip(set.upper()))
                        .map(|((&xi, &vi), (&lo, &hi))| {
                            let at_lo = xi == lo;
                            let at_hi = xi == hi;
                            let d = match (at_lo, at_hi) {
                                (true, true) => 0.0,
                                (true, false) => vi.max(0.0),
                                (false, true) => (-vi).max(0.0),
                                (false, false) => vi.abs(),
                            };
                            d * d
                        })
                        .sum::<f64>()
                        .sqrt(),
                )
            }
            NonsmoothKind::Zero => Some(crate::linalg::norm(v)),
        }
    }
}

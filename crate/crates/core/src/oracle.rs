//! Smooth-part oracles for composite objectives `psi = f + phi`.
//!
//! An oracle evaluates `f` and its gradient. `f` is only required to have a
//! locally Lipschitz gradient; `lipschitz_hint` carries an exact global
//! constant when one is known and is consumed only by the diagnostics layer,
//! never by the solver itself.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dist, Matrix};

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("matrix is not symmetric (max |Q - Q^T| = {0:e})")]
    NotSymmetric(f64),
    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimensionMismatch { context: &'static str, expected: usize, got: usize },
    #[error("empty box: lower[{index}] = {lower} > upper[{index}] = {upper}")]
    EmptyBox { index: usize, lower: f64, upper: f64 },
    #[error("box bound at index {index} is not a valid interval endpoint")]
    BadBound { index: usize },
    #[error("scale must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("rho must be positive, got {0}")]
    NonPositiveRho(f64),
    #[error("dimension must be at least 1")]
    ZeroDimension,
}

pub trait SmoothOracle: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> f64;
    fn grad(&self, x: &[f64]) -> Vec<f64>;
    /// Exact global Lipschitz constant of the gradient, when known.
    fn lipschitz_hint(&self) -> Option<f64> {
        None
    }
}

/// Box `{x : lower <= x <= upper}` with `-inf`/`+inf` marking absent bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, OracleError> {
        if lower.len() != upper.len() {
            return Err(OracleError::DimensionMismatch {
                context: "box bounds",
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (i, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(OracleError::BadBound { index: i });
            }
            if lo > hi {
                return Err(OracleError::EmptyBox { index: i, lower: lo, upper: hi });
            }
        }
        Ok(BoxSet { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Componentwise clamp onto the box.
    pub fn project(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&zi, (&lo, &hi))| zi.max(lo).min(hi))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&xi, (&lo, &hi))| lo <= xi && xi <= hi)
    }
}

/// `f(x) = 1/2 x^T Q x + q^T x` with symmetric PSD `Q`.
pub struct Quadratic {
    q_matrix: Matrix,
    linear: Vec<f64>,
    hint: f64,
}

/// Builds a quadratic oracle; `lipschitz_hint` is the largest eigenvalue of
/// `Q`, computed by power iteration to relative tolerance 1e-10.
pub fn make_quadratic(q_matrix: Matrix, linear: Vec<f64>) -> Result<Quadratic, OracleError> {
    let n = linear.len();
    if n == 0 {
        return Err(OracleError::ZeroDimension);
    }
    if q_matrix.rows() != n || q_matrix.cols() != n {
        return Err(OracleError::DimensionMismatch {
            context: "Q vs linear term",
            expected: n,
            got: q_matrix.rows(),
        });
    }
    let asym = q_matrix.max_asymmetry().expect("square by construction");
    if asym > 1e-12 {
        return Err(OracleError::NotSymmetric(asym));
    }
    let hint = q_matrix.largest_eigenvalue_sym(1e-10).expect("square by construction");
    Ok(Quadratic { q_matrix, linear, hint })
}

impl SmoothOracle for Quadratic {
    fn dim(&self) -> usize {
        self.linear.len()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let qx = self.q_matrix.matvec(x);
        0.5 * crate::linalg::dot(x, &qx) + crate::linalg::dot(&self.linear, x)
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.q_matrix.matvec(x);
        for (gi, qi) in g.iter_mut().zip(&self.linear) {
            *gi += qi;
        }
        g
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        Some(self.hint)
    }
}

/// `f(x) = (scale/4) ||x||^4`; its gradient `scale ||x||^2 x` is locally but
/// not globally Lipschitz, so no hint is exposed.
pub struct Quartic {
    scale: f64,
    dim: usize,
}

pub fn make_quartic(scale: f64, dim: usize) -> Result<Quartic, OracleError> {
    if scale <= 0.0 {
        return Err(OracleError::NonPositiveScale(scale));
    }
    if dim == 0 {
        return Err(OracleError::ZeroDimension);
    }
    Ok(Quartic { scale, dim })
}

impl SmoothOracle for Quartic {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let n2 = crate::linalg::dot(x, x);
        0.25 * self.scale * n2 * n2
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let n2 = crate::linalg::dot(x, x);
        x.iter().map(|&xi| self.scale * n2 * xi).collect()
    }
}

/// Augmented Lagrangian penalty `f(x) = (rho/2) dist^2(Ax + u, C)` for a box
/// `C`; the shifted residual `u` plays the role of `lambda / rho`.
pub struct AlmPenalty {
    a_matrix: Matrix,
    shift: Vec<f64>,
    rho: f64,
    box_set: BoxSet,
    hint: f64,
}

pub fn make_alm_penalty(
    a_matrix: Matrix,
    shift: Vec<f64>,
    rho: f64,
    box_set: BoxSet,
) -> Result<AlmPenalty, OracleError> {
    if rho <= 0.0 {
        return Err(OracleError::NonPositiveRho(rho));
    }
    let m = a_matrix.rows();
    if a_matrix.cols() == 0 {
        return Err(OracleError::ZeroDimension);
    }
    if shift.len() != m {
        return Err(OracleError::DimensionMismatch {
            context: "shift vs A rows",
            expected: m,
            got: shift.len(),
        });
    }
    if box_set.dim() != m {
        return Err(OracleError::DimensionMismatch {
            context: "box vs A rows",
            expected: m,
            got: box_set.dim(),
        });
    }
    let hint = rho * a_matrix.spectral_norm(1e-10).powi(2);
    Ok(AlmPenalty { a_matrix, shift, rho, box_set, hint })
}

impl AlmPenalty {
    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r = self.a_matrix.matvec(x);
        for (ri, ui) in r.iter_mut().zip(&self.shift) {
            *ri += ui;
        }
        r
    }
}

impl SmoothOracle for AlmPenalty {
    fn dim(&self) -> usize {
        self.a_matrix.cols()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let r = self.residual(x);
        let p = self.box_set.project(&r);
        0.5 * self.rho * dist(&r, &p).powi(2)
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let r = self.residual(x);
        let p = self.box_set.project(&r);
        let defect: Vec<f64> = r.iter().zip(&p).map(|(ri, pi)| self.rho * (ri - pi)).collect();
        self.a_matrix.t_matvec(&defect)
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        Some(self.hint)
    }
}

/// Sum of smooth oracles of equal dimension.
pub struct SumSmooth {
    terms: Vec<Box<dyn SmoothOracle>>,
}

pub fn make_sum(terms: Vec<Box<dyn SmoothOracle>>) -> Result<SumSmooth, OracleError> {
    let Some(first) = terms.first() else {
        return Err(OracleError::ZeroDimension);
    };
    let n = first.dim();
    for t in &terms {
        if t.dim() != n {
            return Err(OracleError::DimensionMismatch {
                context: "sum terms",
                expected: n,
                got: t.dim(),
            });
        }
    }
    Ok(SumSmooth { terms })
}

impl SmoothOracle for SumSmooth {
    fn dim(&self) -> usize {
        self.terms[0].dim()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        for t in &self.terms {
            for (gi, ti) in g.iter_mut().zip(t.grad(x)) {
                *gi += ti;
            }
        }
        g
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        self.terms.iter().map(|t| t.lipschitz_hint()).sum()
    }
}

/// Max relative gap between `grad` and central finite differences of `eval`
/// over the given points, with step `h = 1e-6 (1 + |x_i|)` per coordinate.
pub fn finite_diff_check(oracle: &dyn SmoothOracle, points: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0f64;
    for x in points {
        assert_eq!(x.len(), oracle.dim());
        let g = oracle.grad(x);
        let mut xp = x.clone();
        for i in 0..x.len() {
            let h = 1e-6 * (1.0 + x[i].abs());
            xp[i] = x[i] + h;
            let fp = oracle.eval(&xp);
            xp[i] = x[i] - h;
            let fm = oracle.eval(&xp);
            xp[i] = x[i];
            let cd = (fp - fm) / (2.0 * h);
            worst = worst.max((g[i] - cd).abs() / (1.0 + g[i].abs()));
        }
    }
    worst
}

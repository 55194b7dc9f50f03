//! Monotone proximal gradient method with backtracking on the proximal
//! weight `gamma`.
//!
//! Each outer iteration seeds `gamma` with a clamped spectral estimate, then
//! multiplies it by `tau` until the trial point satisfies the sufficient
//! decrease test
//!
//! `psi(y) <= psi(x) - delta * gamma/2 * ||y - x||^2`.
//!
//! No global Lipschitz constant is consulted anywhere in the loop.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dist, dot, norm, sub};
use crate::oracle::SmoothOracle;
use crate::prox::NonsmoothOracle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Backtracking growth factor, > 1.
    pub tau: f64,
    /// Sufficient decrease fraction, in (0, 1).
    pub delta: f64,
    /// Lower bound for the initial proximal weight per iteration.
    pub gamma_min: f64,
    /// Upper bound for the initial proximal weight per iteration.
    pub gamma_max: f64,
    /// Safety cap on the backtracked weight; exceeding it aborts the run.
    pub gamma_cap: f64,
    /// Termination threshold on the fixed-weight prox-gradient residual.
    pub eps_tol: f64,
    pub max_iter: usize,
    /// Cap on backtracking steps within one iteration.
    pub max_inner: u32,
    /// Store the iterate in the trace every this many iterations
    /// (the final 20 iterates are always stored).
    pub snapshot_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tau: 2.0,
            delta: 1e-4,
            gamma_min: 1e-6,
            gamma_max: 1e6,
            gamma_cap: 1e14,
            eps_tol: 1e-8,
            max_iter: 100_000,
            max_inner: 60,
            snapshot_every: 10,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("tau must be > 1, got {0}")]
    BadTau(f64),
    #[error("delta must be in (0, 1), got {0}")]
    BadDelta(f64),
    #[error("need 0 < gamma_min <= gamma_max < gamma_cap, got {min}, {max}, {cap}")]
    BadGammaRange { min: f64, max: f64, cap: f64 },
    #[error("eps_tol must be > 0, got {0}")]
    BadEpsTol(f64),
    #[error("max_iter must be >= 1")]
    BadMaxIter,
    #[error("max_inner must be >= 1")]
    BadMaxInner,
    #[error("snapshot_every must be >= 1")]
    BadSnapshotEvery,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.tau > 1.0) {
            return Err(ConfigError::BadTau(self.tau));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(ConfigError::BadDelta(self.delta));
        }
        if !(self.gamma_min > 0.0
            && self.gamma_min <= self.gamma_max
            && self.gamma_max < self.gamma_cap)
        {
            return Err(ConfigError::BadGammaRange {
                min: self.gamma_min,
                max: self.gamma_max,
                cap: self.gamma_cap,
            });
        }
        if !(self.eps_tol > 0.0) {
            return Err(ConfigError::BadEpsTol(self.eps_tol));
        }
        if self.max_iter == 0 {
            return Err(ConfigError::BadMaxIter);
        }
        if self.max_inner == 0 {
            return Err(ConfigError::BadMaxInner);
        }
        if self.snapshot_every == 0 {
            return Err(ConfigError::BadSnapshotEvery);
        }
        Ok(())
    }
}

/// One outer iteration of a solve.
///
/// `psi` is the objective value *before* the step, `x_snapshot` holds the
/// iterate *after* it when stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub psi: f64,
    pub gamma: f64,
    pub inner_iters: u32,
    pub step_norm: f64,
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub x_snapshot: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    StepsizeOverflow,
    NonFiniteValue,
    InvalidStart,
}

impl SolveStatus {
    pub fn is_error(self) -> bool {
        matches!(
            self,
            SolveStatus::StepsizeOverflow | SolveStatus::NonFiniteValue | SolveStatus::InvalidStart
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub final_x: Vec<f64>,
    pub final_psi: f64,
    pub trace: Vec<IterationRecord>,
    pub wall_time: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum StepError {
    #[error("backtracked weight exceeded the safety cap")]
    StepsizeOverflow,
    #[error("objective evaluated to NaN or -inf")]
    NonFiniteValue,
}

/// Spectral (Barzilai-Borwein) seed for the proximal weight, clamped to
/// `[gamma_min, gamma_max]`. Falls back when the displacement is degenerate
/// or the curvature estimate is nonpositive.
pub fn initial_gamma(
    prev_x: &[f64],
    prev_grad: &[f64],
    cur_x: &[f64],
    cur_grad: &[f64],
    fallback: f64,
    cfg: &SolverConfig,
) -> f64 {
    debug_assert!(fallback >= cfg.gamma_min && fallback <= cfg.gamma_max);
    let s = sub(cur_x, prev_x);
    let y = sub(cur_grad, prev_grad);
    let ss = dot(&s, &s);
    if ss.sqrt() <= 1e-14 * (1.0 + norm(cur_x)) {
        return fallback;
    }
    let sy = dot(&s, &y);
    if sy <= 0.0 {
        return fallback;
    }
    (sy / ss).clamp(cfg.gamma_min, cfg.gamma_max)
}

/// One backtracked step from `x`, with `psi_x` and `grad_x` precomputed.
/// Returns the accepted point, the accepted weight, the number of rejected
/// trials, and the objective value at the new point.
pub(crate) fn backtracking_step_inner(
    x: &[f64],
    psi_x: f64,
    grad_x: &[f64],
    gamma0: f64,
    f: &dyn SmoothOracle,
    phi: &dyn NonsmoothOracle,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, f64, u32, f64), StepError> {
    let mut gamma = gamma0;
    let mut i: u32 = 0;
    loop {
        if gamma > cfg.gamma_cap || i > cfg.max_inner {
            return Err(StepError::StepsizeOverflow);
        }
        let z: Vec<f64> = x.iter().zip(grad_x).map(|(&xi, &gi)| xi - gi / gamma).collect();
        let y = phi.prox(&z, gamma);
        if y == *x {
            // Exact fixed point: the acceptance test holds with equality.
            return Ok((y, gamma, i, psi_x));
        }
        let psi_y = f.eval(&y) + phi.eval(&y);
        if psi_y.is_nan() || psi_y == f64::NEG_INFINITY {
            return Err(StepError::NonFiniteValue);
        }
        let d = dist(&y, x);
        if psi_y <= psi_x - cfg.delta * 0.5 * gamma * d * d {
            return Ok((y, gamma, i, psi_y));
        }
        gamma *= cfg.tau;
        i += 1;
    }
}

/// Backtracking inner loop: trial points `prox(x - grad/gamma, gamma)` with
/// `gamma = tau^i gamma0` until sufficient decrease holds.
pub fn backtracking_step(
    x: &[f64],
    gamma0: f64,
    f: &dyn SmoothOracle,
    phi: &dyn NonsmoothOracle,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, f64, u32), StepError> {
    let psi_x = f.eval(x) + phi.eval(x);
    let grad_x = f.grad(x);
    backtracking_step_inner(x, psi_x, &grad_x, gamma0, f, phi, cfg)
        .map(|(y, gamma, i, _)| (y, gamma, i))
}

/// Prox-gradient residual `gamma_ref ||x - prox(x - grad f(x)/gamma_ref, gamma_ref)||`;
/// zero exactly at M-stationary points of the supported terms.
pub fn stationarity_residual(
    x: &[f64],
    f: &dyn SmoothOracle,
    phi: &dyn NonsmoothOracle,
    gamma_ref: f64,
) -> f64 {
    assert!(gamma_ref > 0.0);
    let g = f.grad(x);
    let z: Vec<f64> = x.iter().zip(&g).map(|(&xi, &gi)| xi - gi / gamma_ref).collect();
    let p = phi.prox(&z, gamma_ref);
    gamma_ref * dist(x, &p)
}

/// Reference weight for the termination residual.
pub const RESIDUAL_GAMMA_REF: f64 = 1.0;

/// How many trailing iterates are always snapshotted.
const TAIL_SNAPSHOTS: usize = 20;

/// Full outer loop: iterate backtracked steps until the residual drops below
/// `eps_tol`, the iteration budget runs out, or a numerical failure occurs.
pub fn solve(
    f: &dyn SmoothOracle,
    phi: &dyn NonsmoothOracle,
    x0: &[f64],
    cfg: &SolverConfig,
) -> SolveReport {
    let start = Instant::now();
    assert_eq!(f.dim(), phi.dim());
    assert_eq!(x0.len(), f.dim());
    cfg.validate().expect("invalid solver configuration");

    let phi0 = phi.eval(x0);
    let psi0 = f.eval(x0) + phi0;
    if !phi0.is_finite() || !psi0.is_finite() {
        return SolveReport {
            status: SolveStatus::InvalidStart,
            final_x: x0.to_vec(),
            final_psi: psi0,
            trace: Vec::new(),
            wall_time: start.elapsed().as_secs_f64(),
        };
    }

    let mut trace: Vec<IterationRecord> = Vec::new();
    let mut x = x0.to_vec();
    let mut grad = f.grad(&x);
    let mut psi = psi0;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut fallback = 1.0f64.clamp(cfg.gamma_min, cfg.gamma_max);

    // Rolling buffer of the newest iterates, promoted to snapshots at the end.
    let mut tail: std::collections::VecDeque<(usize, Vec<f64>)> =
        std::collections::VecDeque::with_capacity(TAIL_SNAPSHOTS + 1);

    let mut status = SolveStatus::MaxIterations;
    for k in 0..cfg.max_iter {
        let gamma0 = match &prev {
            None => fallback,
            Some((px, pg)) => initial_gamma(px, pg, &x, &grad, fallback, cfg),
        };
        let step = backtracking_step_inner(&x, psi, &grad, gamma0, f, phi, cfg);
        let (x_next, gamma, inner, psi_next) = match step {
            Ok(t) => t,
            Err(StepError::StepsizeOverflow) => {
                status = SolveStatus::StepsizeOverflow;
                break;
            }
            Err(StepError::NonFiniteValue) => {
                status = SolveStatus::NonFiniteValue;
                break;
            }
        };
        let step_norm = dist(&x_next, &x);
        let residual = stationarity_residual(&x_next, f, phi, RESIDUAL_GAMMA_REF);
        let snapshot =
            if k % cfg.snapshot_every == 0 { Some(x_next.clone()) } else { None };
        trace.push(IterationRecord {
            k,
            psi,
            gamma,
            inner_iters: inner,
            step_norm,
            residual,
            x_snapshot: snapshot,
        });

        tail.push_back((k, x_next.clone()));
        if tail.len() > TAIL_SNAPSHOTS {
            tail.pop_front();
        }

        let grad_next = f.grad(&x_next);
        prev = Some((std::mem::replace(&mut x, x_next), std::mem::replace(&mut grad, grad_next)));
        psi = psi_next;
        fallback = gamma.clamp(cfg.gamma_min, cfg.gamma_max);

        if residual <= cfg.eps_tol {
            status = SolveStatus::Converged;
            break;
        }
    }

    // Promote the trailing iterates to snapshots so the subgradient-bound
    // check always has consecutive pairs near termination.
    for (k, xk) in tail {
        let rec = &mut trace[k];
        if rec.x_snapshot.is_none() {
            rec.x_snapshot = Some(xk);
        }
    }

    SolveReport {
        status,
        final_x: x,
        final_psi: psi,
        trace,
        wall_time: start.elapsed().as_secs_f64(),
    }
}

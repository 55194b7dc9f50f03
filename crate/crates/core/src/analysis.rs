//! Empirical certificates over recorded traces: descent margins, linear rate
//! estimation, subgradient-distance bounds, and a log-log fit of the
//! desingularization exponent.
//!
//! Everything here is diagnostic. The estimators work with observable
//! surrogates (max recorded `gamma`, a user-supplied Lipschitz estimate, a
//! high-accuracy reference optimum) and make no certification claims.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::SmoothOracle;
use crate::prox::NonsmoothOracle;
use crate::solver::IterationRecord;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("objective values increase at index {0}")]
    IncreasingSequence(usize),
    #[error("tail window must be at least 3, got {0}")]
    WindowTooSmall(usize),
    #[error("a zero error at index {0} is followed by a positive entry")]
    ZeroBeforePositive(usize),
    #[error("nonsmooth oracle does not provide a subdifferential distance")]
    SubdiffUnavailable,
    #[error("no usable snapshot pairs in the trace")]
    NoSnapshots,
    #[error("need at least {needed} usable samples, found {found}")]
    InsufficientData { needed: usize, found: usize },
}

/// Empirical fit of the desingularization `chi(t) = c t^kappa`, valid for
/// function-value gaps up to `eta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KLRateModel {
    pub kappa: f64,
    pub c: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub q_factor_psi: f64,
    pub r_factor_x: f64,
    pub tail_window: usize,
    pub psi_star_proxy: f64,
    pub x_star_proxy: Vec<f64>,
}

/// Median ratio of consecutive objective gaps over the tail of the run.
///
/// Ratios with denominator below `1e-14 (1 + |psi_star|)` are dropped;
/// fewer than 3 surviving ratios means finite termination and yields 0.
pub fn estimate_q_factor(
    psi_values: &[f64],
    psi_star: f64,
    tail_window: usize,
) -> Result<f64, AnalysisError> {
    if tail_window < 3 {
        return Err(AnalysisError::WindowTooSmall(tail_window));
    }
    for (i, w) in psi_values.windows(2).enumerate() {
        if w[1] > w[0] + 1e-12 * (1.0 + w[0].abs()) {
            return Err(AnalysisError::IncreasingSequence(i + 1));
        }
    }
    let floor = 1e-14 * (1.0 + psi_star.abs());
    let mut ratios: Vec<f64> = psi_values
        .windows(2)
        .filter_map(|w| {
            let denom = w[0] - psi_star;
            let numer = w[1] - psi_star;
            (denom > floor).then(|| numer / denom)
        })
        .collect();
    if ratios.len() > tail_window {
        ratios.drain(..ratios.len() - tail_window);
    }
    if ratios.len() < 3 {
        return Ok(0.0);
    }
    ratios.sort_by(|a, b| a.partial_cmp(b).expect("finite ratios"));
    Ok(ratios[ratios.len() / 2])
}

/// Geometric-mean ratio `(e_last / e_first)^(1/m)` over the tail window of an
/// error sequence; 0 when the tail has vanished identically.
pub fn estimate_r_factor(errors: &[f64], tail_window: usize) -> Result<f64, AnalysisError> {
    if tail_window < 3 {
        return Err(AnalysisError::WindowTooSmall(tail_window));
    }
    let start = errors.len().saturating_sub(tail_window);
    let tail = &errors[start..];
    for (i, w) in tail.windows(2).enumerate() {
        if w[0] == 0.0 && w[1] > 0.0 {
            return Err(AnalysisError::ZeroBeforePositive(start + i));
        }
    }
    let positive: Vec<(usize, f64)> =
        tail.iter().copied().enumerate().filter(|(_, e)| *e > 0.0).collect();
    let (Some(&(i0, e0)), Some(&(i1, e1))) = (positive.first(), positive.last()) else {
        return Ok(0.0);
    };
    if i0 == i1 {
        return Ok(0.0);
    }
    let m = (i1 - i0) as f64;
    Ok((e1 / e0).powf(1.0 / m))
}

/// Worst sufficient-decrease margin over the trace; nonnegative up to a few
/// ulps certifies every recorded step. Empty traces are vacuously certified
/// with `+inf`.
pub fn check_descent_certificate(trace: &[IterationRecord], delta: f64) -> f64 {
    trace
        .windows(2)
        .map(|w| w[0].psi - w[1].psi - delta * 0.5 * w[0].gamma * w[0].step_norm * w[0].step_norm)
        .fold(f64::INFINITY, f64::min)
}

/// Worst ratio of the subgradient distance at a snapshot against the bound
/// `(max gamma + L_est) ||step||`; at most `1 + 1e-6` supports the local
/// subgradient estimate with the chosen surrogates.
pub fn check_subgrad_bound(
    trace: &[IterationRecord],
    f: &dyn SmoothOracle,
    phi: &dyn NonsmoothOracle,
    l_est: f64,
) -> Result<f64, AnalysisError> {
    let gamma_bar = trace.iter().map(|r| r.gamma).fold(0.0f64, f64::max);
    let mut worst: Option<f64> = None;
    for r in trace {
        let Some(x_next) = &r.x_snapshot else { continue };
        if r.step_norm < 1e-14 {
            continue;
        }
        let g = f.grad(x_next);
        let v: Vec<f64> = g.iter().map(|gi| -gi).collect();
        let dist = phi.subdiff_dist(x_next, &v).ok_or(AnalysisError::SubdiffUnavailable)?;
        let ratio = dist / ((gamma_bar + l_est) * r.step_norm);
        worst = Some(worst.map_or(ratio, |w: f64| w.max(ratio)));
    }
    worst.ok_or(AnalysisError::NoSnapshots)
}

/// Least-squares fit of `log(residual) = a + (1 - kappa) log(gap)` over all
/// samples with positive residual and gap above `1e-12`.
pub fn fit_kl_model(
    psi_values: &[f64],
    residuals: &[f64],
    psi_star: f64,
) -> Result<KLRateModel, AnalysisError> {
    assert_eq!(psi_values.len(), residuals.len());
    let samples: Vec<(f64, f64)> = psi_values
        .iter()
        .zip(residuals)
        .filter_map(|(&p, &r)| {
            let gap = p - psi_star;
            (gap > 1e-12 && r > 0.0).then(|| (gap.ln(), r.ln()))
        })
        .collect();
    if samples.len() < 10 {
        return Err(AnalysisError::InsufficientData { needed: 10, found: samples.len() });
    }
    let n = samples.len() as f64;
    let sx: f64 = samples.iter().map(|s| s.0).sum();
    let sy: f64 = samples.iter().map(|s| s.1).sum();
    let sxx: f64 = samples.iter().map(|s| s.0 * s.0).sum();
    let sxy: f64 = samples.iter().map(|s| s.0 * s.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let kappa = (1.0 - slope).clamp(1e-6, 1.0);
    let c = (-intercept).exp() / kappa;
    let eta = psi_values
        .iter()
        .map(|p| p - psi_star)
        .fold(0.0f64, f64::max);
    Ok(KLRateModel { kappa, c, eta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::oracle::{make_quadratic, make_quartic};
    use crate::prox::{make_nonsmooth, NonsmoothKind};
    use crate::solver::{solve, SolveStatus, SolverConfig};

    #[test]
    fn q_factor_exact_geometric() {
        let psi: Vec<f64> = (0..40).map(|k| 2f64.powi(-k)).collect();
        let q = estimate_q_factor(&psi, 0.0, 10).unwrap();
        assert!((q - 0.5).abs() < 1e-12);
    }

    #[test]
    fn q_factor_flags_sublinear() {
        let psi: Vec<f64> = (10..200).map(|k| 1.0 / k as f64).collect();
        let q = estimate_q_factor(&psi, 0.0, 30).unwrap();
        assert!(q >= 0.9, "q = {q}");
    }

    #[test]
    fn q_factor_finite_termination() {
        let psi = vec![1.0, 0.5, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(estimate_q_factor(&psi, 0.0, 3).unwrap(), 0.0);
    }

    #[test]
    fn q_factor_rejects_increasing() {
        let psi = vec![1.0, 0.5, 0.7];
        assert!(matches!(
            estimate_q_factor(&psi, 0.0, 3),
            Err(AnalysisError::IncreasingSequence(2))
        ));
    }

    #[test]
    fn q_factor_invariant_under_gap_scaling() {
        let gaps: Vec<f64> = (0..50).map(|k| 0.7f64.powi(k)).collect();
        let scaled: Vec<f64> = gaps.iter().map(|g| 1234.5 * g).collect();
        let a = estimate_q_factor(&gaps, 0.0, 10).unwrap();
        let b = estimate_q_factor(&scaled, 0.0, 10).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn r_factor_dominating_geometric() {
        let e: Vec<f64> = (0..30).map(|k| 3.0 * 0.8f64.powi(k)).collect();
        let r = estimate_r_factor(&e, 10).unwrap();
        assert!((r - 0.8).abs() < 1e-12, "r = {r}");
    }

    #[test]
    fn r_factor_zero_tail_and_errors() {
        assert_eq!(estimate_r_factor(&[0.0; 12], 5).unwrap(), 0.0);
        assert!(matches!(
            estimate_r_factor(&[1.0, 0.0, 0.5], 3),
            Err(AnalysisError::ZeroBeforePositive(_))
        ));
    }

    #[test]
    fn r_factor_oscillating_envelope() {
        let e: Vec<f64> = (0..60)
            .map(|k| 0.9f64.powi(k) * (1.0 + 0.1 * if k % 2 == 0 { 1.0 } else { -1.0 }))
            .collect();
        let r = estimate_r_factor(&e, 12).unwrap();
        assert!((0.88..=0.92).contains(&r), "r = {r}");
    }

    #[test]
    fn descent_certificate_empty_and_violating() {
        assert_eq!(check_descent_certificate(&[], 0.5), f64::INFINITY);

        let mk = |k: usize, psi: f64| IterationRecord {
            k,
            psi,
            gamma: 1.0,
            inner_iters: 0,
            step_norm: 1.0,
            residual: 1.0,
            x_snapshot: None,
        };
        // Second step increases psi: margin must be negative.
        let trace = vec![mk(0, 1.0), mk(1, 0.5), mk(2, 0.9)];
        assert!(check_descent_certificate(&trace, 0.5) < 0.0);
    }

    #[test]
    fn descent_certificate_on_solver_trace() {
        let f = make_quadratic(Matrix::diagonal(&[1.0, 4.0]), vec![1.0, -2.0]).unwrap();
        let phi = make_nonsmooth(NonsmoothKind::L1 { weight: 0.5 }, 2).unwrap();
        let cfg = SolverConfig::default();
        let rep = solve(&f, &phi, &[3.0, -3.0], &cfg);
        let margin = check_descent_certificate(&rep.trace, cfg.delta);
        let psi0 = rep.trace[0].psi;
        assert!(margin >= -1e-10 * (1.0 + psi0.abs()), "margin = {margin}");
    }

    #[test]
    fn subgrad_bound_quadratic_l1_within_one() {
        let f = make_quadratic(Matrix::diagonal(&[1.0, 4.0]), vec![1.0, -2.0]).unwrap();
        let phi = make_nonsmooth(NonsmoothKind::L1 { weight: 0.5 }, 2).unwrap();
        let mut cfg = SolverConfig::default();
        cfg.snapshot_every = 1;
        let rep = solve(&f, &phi, &[3.0, -3.0], &cfg);
        assert_eq!(rep.status, SolveStatus::Converged);
        let l = f.lipschitz_hint().unwrap();
        let ratio = check_subgrad_bound(&rep.trace, &f, &phi, l).unwrap();
        assert!(ratio <= 1.0 + 1e-6, "ratio = {ratio}");
    }

    #[test]
    fn subgrad_bound_smooth_case_exact_identity() {
        let f = make_quadratic(Matrix::diagonal(&[1.0, 4.0]), vec![1.0, -2.0]).unwrap();
        let phi = make_nonsmooth(NonsmoothKind::Zero, 2).unwrap();
        let mut cfg = SolverConfig::default();
        cfg.snapshot_every = 1;
        let rep = solve(&f, &phi, &[3.0, -3.0], &cfg);
        let l = f.lipschitz_hint().unwrap();
        let ratio = check_subgrad_bound(&rep.trace, &f, &phi, l).unwrap();
        assert!(ratio <= 1.0 + 1e-6, "ratio = {ratio}");
    }

    #[test]
    fn subgrad_bound_underestimated_constant_inflates_ratio() {
        let f = make_quartic(1.0, 2).unwrap();
        let phi = make_nonsmooth(NonsmoothKind::L1 { weight: 0.2 }, 2).unwrap();
        let mut cfg = SolverConfig::default();
        cfg.snapshot_every = 1;
        let rep = solve(&f, &phi, &[2.0, -1.5], &cfg);
        let good = check_subgrad_bound(&rep.trace, &f, &phi, 50.0).unwrap();
        let bad = check_subgrad_bound(&rep.trace, &f, &phi, 0.0).unwrap();
        assert!(bad >= good, "bad = {bad}, good = {good}");
    }

    #[test]
    fn kl_fit_synthetic_half_exponent() {
        let psi: Vec<f64> = (0..20).map(|k| 4f64.powi(-k)).collect();
        let res: Vec<f64> = (0..20).map(|k| 2f64.powi(-k)).collect();
        let model = fit_kl_model(&psi, &res, 0.0).unwrap();
        assert!((model.kappa - 0.5).abs() <= 0.02, "kappa = {}", model.kappa);
    }

    #[test]
    fn kl_fit_constant_residual_clamps_to_one() {
        let psi: Vec<f64> = (0..20).map(|k| 2f64.powi(-k)).collect();
        let res = vec![0.3; 20];
        let model = fit_kl_model(&psi, &res, 0.0).unwrap();
        assert_eq!(model.kappa, 1.0);
    }

    #[test]
    fn kl_fit_insufficient_data() {
        assert!(matches!(
            fit_kl_model(&[1.0, 0.5], &[1.0, 0.5], 0.0),
            Err(AnalysisError::InsufficientData { .. })
        ));
    }

    #[test]
    fn kl_fit_strongly_convex_quadratic_half() {
        // phi = 0 on Q = diag(1, 4): residual ~ sqrt(gap), slope 1/2.
        let f = make_quadratic(Matrix::diagonal(&[1.0, 4.0]), vec![0.0, 0.0]).unwrap();
        let phi = make_nonsmooth(NonsmoothKind::Zero, 2).unwrap();
        let mut cfg = SolverConfig::default();
        cfg.eps_tol = 1e-12;
        let rep = solve(&f, &phi, &[5.0, 3.0], &cfg);
        assert_eq!(rep.status, SolveStatus::Converged);
        let psi: Vec<f64> = rep.trace.iter().map(|r| r.psi).collect();
        let res: Vec<f64> = std::iter::once(crate::solver::stationarity_residual(
            &[5.0, 3.0],
            &f,
            &phi,
            1.0,
        ))
        .chain(rep.trace.iter().map(|r| r.residual).take(psi.len() - 1))
        .collect();
        let model = fit_kl_model(&psi, &res, 0.0).unwrap();
        assert!(
            (0.45..=0.55).contains(&model.kappa),
            "kappa = {}, samples = {}",
            model.kappa,
            psi.len()
        );
    }
}

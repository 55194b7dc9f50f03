//! Property-based checks tying the prox library, the backtracking step, and
//! the solver to their defining inequalities.

use proptest::prelude::*;
use proxkl_core::{
    backtracking_step, hard_threshold, make_nonsmooth, make_quadratic, project_box, soft_threshold,
    solve, stationarity_residual, BoxSet, Matrix, NonsmoothKind, NonsmoothOracle, SolveStatus,
    SolverConfig,
};

fn small_f64() -> impl Strategy<Value = f64> {
    prop::num::f64::NORMAL.prop_map(|v| v % 10.0).prop_filter("finite", |v| v.is_finite())
}

proptest! {
    #[test]
    fn soft_threshold_is_nonexpansive(a in small_f64(), b in small_f64(), t in 0.0..5.0f64) {
        let pa = soft_threshold(&[a], t)[0];
        let pb = soft_threshold(&[b], t)[0];
        prop_assert!((pa - pb).abs() <= (a - b).abs() + 1e-15);
    }

    #[test]
    fn soft_threshold_minimizes_its_objective(
        z in small_f64(),
        y in small_f64(),
        lambda in 1e-3..5.0f64,
        gamma in 1e-2..1e2f64,
    ) {
        let p = soft_threshold(&[z], lambda / gamma)[0];
        let obj = |v: f64| 0.5 * gamma * (v - z) * (v - z) + lambda * v.abs();
        prop_assert!(obj(p) <= obj(y) + 1e-10 * (1.0 + obj(y).abs()));
    }

    #[test]
    fn hard_threshold_keeps_or_kills_each_coordinate(
        z in small_f64(),
        lambda in 1e-3..5.0f64,
        gamma in 1e-2..1e2f64,
    ) {
        let p = hard_threshold(&[z], lambda, gamma)[0];
        let cut = (2.0 * lambda / gamma).sqrt();
        if z.abs() > cut {
            prop_assert_eq!(p, z);
        } else {
            prop_assert_eq!(p, 0.0);
        }
    }

    #[test]
    fn hard_threshold_minimizes_its_objective(
        z in small_f64(),
        y in small_f64(),
        lambda in 1e-3..5.0f64,
        gamma in 1e-2..1e2f64,
    ) {
        let p = hard_threshold(&[z], lambda, gamma)[0];
        let nnz = |v: f64| if v != 0.0 { lambda } else { 0.0 };
        let obj = |v: f64| 0.5 * gamma * (v - z) * (v - z) + nnz(v);
        prop_assert!(obj(p) <= obj(y) + 1e-10 * (1.0 + obj(y).abs()));
    }

    #[test]
    fn box_projection_is_idempotent_and_nonexpansive(
        a in small_f64(),
        b in small_f64(),
        lo in -3.0..0.0f64,
        width in 0.0..4.0f64,
    ) {
        let set = BoxSet::new(vec![lo], vec![lo + width]).unwrap();
        let pa = project_box(&[a], &set);
        let pb = project_box(&[b], &set);
        prop_assert_eq!(project_box(&pa, &set), pa.clone());
        prop_assert!(lo <= pa[0] && pa[0] <= lo + width);
        prop_assert!((pa[0] - pb[0]).abs() <= (a - b).abs());
    }

    #[test]
    fn accepted_steps_satisfy_sufficient_decrease(
        x0 in prop::collection::vec(-5.0..5.0f64, 3),
        gamma0 in 1e-3..1e2f64,
        lambda in 1e-3..2.0f64,
    ) {
        let q = Matrix::from_rows(&[
            vec![2.0, 0.3, 0.0],
            vec![0.3, 1.0, 0.1],
            vec![0.0, 0.1, 0.5],
        ]).unwrap();
        let f = make_quadratic(q, vec![0.4, -1.0, 0.2]).unwrap();
        let phi = make_nonsmooth(NonsmoothKind::L1 { weight: lambda }, 3).unwrap();
        let cfg = SolverConfig::default();
        let (y, gamma, _) = backtracking_step(&x0, gamma0, &f, &phi, &cfg).unwrap();
        use proxkl_core::SmoothOracle;
        let psi = |v: &[f64]| f.eval(v) + phi.eval(v);
        let d2: f64 = y.iter().zip(&x0).map(|(a, b)| (a - b) * (a - b)).sum();
        let slack = 1e-12 * (1.0 + psi(&x0).abs());
        prop_assert!(psi(&y) <= psi(&x0) - cfg.delta * 0.5 * gamma * d2 + slack);
    }

    #[test]
    fn scalar_lasso_solution_matches_closed_form(
        a in 0.1..10.0f64,
        b in -5.0..5.0f64,
        lambda in 1e-3..3.0f64,
        x0 in -5.0..5.0f64,
    ) {
        // min_x a/2 (x - b)^2 + lambda |x| has the soft-threshold solution.
        let q = Matrix::from_rows(&[vec![a]]).unwrap();
        let f = make_quadratic(q, vec![-a * b]).unwrap();
        let phi = make_nonsmooth(NonsmoothKind::L1 { weight: lambda }, 1).unwrap();
        let report = solve(&f, &phi, &[x0], &SolverConfig::default());
        prop_assert_eq!(report.status, SolveStatus::Converged);
        let expected = soft_threshold(&[b], lambda / a)[0];
        prop_assert!((report.final_x[0] - expected).abs() <= 1e-6 * (1.0 + expected.abs()));
    }
}

#[test]
fn converged_runs_end_near_stationarity() {
    let q = Matrix::from_rows(&[vec![1.0, 0.2], vec![0.2, 2.0]]).unwrap();
    let f = make_quadratic(q, vec![-1.0, 0.5]).unwrap();
    for kind in [
        NonsmoothKind::L1 { weight: 0.3 },
        NonsmoothKind::Zero,
        NonsmoothKind::BoxIndicator { lower: vec![-0.4, -0.4], upper: vec![0.4, 0.4] },
    ] {
        let phi = make_nonsmooth(kind, 2).unwrap();
        let cfg = SolverConfig::default();
        let report = solve(&f, &phi, &[0.0, 0.0], &cfg);
        assert_eq!(report.status, SolveStatus::Converged);
        let res = stationarity_residual(&report.final_x, &f, &phi, 1.0);
        assert!(res <= cfg.eps_tol, "residual {res}");
    }
}

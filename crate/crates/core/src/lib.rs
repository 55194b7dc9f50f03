//! Proximal gradient solver for composite objectives `psi = f + phi` with a
//! backtracked proximal weight, closed-form prox library, and trace
//! diagnostics for descent margins, linear rates, and KL exponents.

pub mod analysis;
pub mod linalg;
pub mod oracle;
pub mod prox;
pub mod solver;

pub use analysis::{
    check_descent_certificate, check_subgrad_bound, estimate_q_factor, estimate_r_factor,
    fit_kl_model, AnalysisError, KLRateModel, RateReport,
};
pub use linalg::{Matrix, MatrixError};
pub use oracle::{
    finite_diff_check, make_alm_penalty, make_quadratic, make_quartic, make_sum, AlmPenalty,
    BoxSet, OracleError, Quadratic, Quartic, SmoothOracle, SumSmooth,
};
pub use prox::{
    hard_threshold, make_nonsmooth, project_box, soft_threshold, subdiff_dist_l1, NonsmoothKind,
    NonsmoothOracle, NonsmoothTerm, ProxError,
};
pub use solver::{
    backtracking_step, initial_gamma, solve, stationarity_residual, ConfigError, IterationRecord,
    SolveReport, SolveStatus, SolverConfig, StepError,
};

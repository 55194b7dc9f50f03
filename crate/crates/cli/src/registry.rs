//! Built-in problem suite and instantiation of configs into oracles.

use proxkl_core::{
    make_alm_penalty, make_nonsmooth, make_quadratic, make_quartic, make_sum, Matrix,
    NonsmoothOracle, NonsmoothTerm, SmoothOracle,
};
use thiserror::Error;

use crate::config::{bounds_to_box, NonsmoothSpec, ProblemSpec, SmoothSpec};
use crate::rng::Xoshiro256PlusPlus;

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("oracle construction failed: {0}")]
    Oracle(#[from] proxkl_core::OracleError),
    #[error("nonsmooth construction failed: {0}")]
    Prox(#[from] proxkl_core::ProxError),
    #[error("smooth/nonsmooth dimensions differ: {smooth} vs {nonsmooth}")]
    DimensionMismatch { smooth: usize, nonsmooth: usize },
}

pub struct BuiltProblem {
    pub smooth: Box<dyn SmoothOracle>,
    pub nonsmooth: NonsmoothTerm,
    pub x0: Vec<f64>,
}

/// Names of the built-in suite, in run order.
pub fn suite_names() -> Vec<&'static str> {
    vec!["lasso_small", "l0_small", "box_qp", "quartic_l1", "alm_sub"]
}

/// Returns the fully resolved spec for a built-in problem name.
pub fn lookup(name: &str) -> Option<ProblemSpec> {
    let spec = match name {
        "lasso_small" => ProblemSpec {
            name: name.into(),
            smooth: SmoothSpec::RandomQuadratic { dim: 50, cond: 100.0, nnz_fraction: 0.4 },
            nonsmooth: NonsmoothSpec::L1 { weight: 0.05 },
            x0: vec![0.0; 50],
            seed: Some(7),
        },
        "l0_small" => ProblemSpec {
            name: name.into(),
            smooth: SmoothSpec::RandomQuadratic { dim: 20, cond: 10.0, nnz_fraction: 0.3 },
            nonsmooth: NonsmoothSpec::L0 { weight: 0.01 },
            x0: vec![0.0; 20],
            seed: Some(11),
        },
        "box_qp" => ProblemSpec {
            name: name.into(),
            smooth: SmoothSpec::RandomQuadratic { dim: 30, cond: 50.0, nnz_fraction: 1.0 },
            nonsmooth: NonsmoothSpec::Box {
                lower: vec![Some(-0.5); 30],
                upper: vec![Some(0.5); 30],
            },
            x0: vec![0.0; 30],
            seed: Some(13),
        },
        "quartic_l1" => {
            // Tilted quartic: without the linear term the minimizer sits
            // exactly on the L1 kink at the origin and the prox snaps there
            // in one finite jump, which hides the asymptotic step decay the
            // diagnostics are meant to observe. The tilt puts the minimizer
            // at a point with mixed zero/nonzero coordinates instead.
            let tilt: Vec<f64> =
                (0..10).map(|i| if i < 5 { -1.0 } else { 0.2 }).collect();
            ProblemSpec {
                name: name.into(),
                smooth: SmoothSpec::Sum {
                    terms: vec![
                        SmoothSpec::Quartic { scale: 1.0, dim: 10 },
                        SmoothSpec::Quadratic {
                            matrix: Matrix::identity(10)
                                .to_rows()
                                .iter()
                                .map(|r| r.iter().map(|v| 0.05 * v).collect())
                                .collect(),
                            linear: tilt,
                        },
                    ],
                },
                nonsmooth: NonsmoothSpec::L1 { weight: 0.5 },
                x0: vec![3.0; 10],
                seed: None,
            }
        }
        "alm_sub" => {
            // Example structure of an augmented Lagrangian subproblem:
            // smooth quadratic objective plus the box-constraint penalty.
            let (a, shift) = alm_constraint_data(24, 16, 17);
            ProblemSpec {
                name: name.into(),
                smooth: SmoothSpec::Sum {
                    terms: vec![
                        SmoothSpec::Quadratic {
                            matrix: Matrix::identity(16)
                                .to_rows()
                                .iter()
                                .map(|r| r.iter().map(|v| 0.5 * v).collect())
                                .collect(),
                            linear: vec![-0.2; 16],
                        },
                        SmoothSpec::AlmPenalty {
                            matrix: a,
                            shift,
                            rho: 1.0,
                            lower: vec![Some(-1.0); 24],
                            upper: vec![Some(1.0); 24],
                        },
                    ],
                },
                nonsmooth: NonsmoothSpec::L1 { weight: 0.1 },
                x0: vec![0.0; 16],
                seed: Some(17),
            }
        }
        _ => return None,
    };
    Some(spec)
}

fn alm_constraint_data(m: usize, n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let a: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| rng.uniform(-0.5, 0.5)).collect())
        .collect();
    let shift: Vec<f64> = (0..m).map(|_| rng.uniform(-2.0, 2.0)).collect();
    (a, shift)
}

/// Rotated quadratic with log-spaced spectrum `[1/cond, 1]`; the linear term
/// is `-Q x_true` for a sparse `x_true`, so `x_true` is the unconstrained
/// minimizer.
fn random_quadratic(dim: usize, cond: f64, nnz_fraction: f64, seed: u64) -> (Matrix, Vec<f64>) {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    // Orthonormal basis from modified Gram-Schmidt on a random matrix.
    let mut basis: Vec<Vec<f64>> = (0..dim)
        .map(|_| (0..dim).map(|_| rng.uniform(-1.0, 1.0)).collect())
        .collect();
    for i in 0..dim {
        for j in 0..i {
            let proj: f64 = basis[i].iter().zip(&basis[j]).map(|(a, b)| a * b).sum();
            let bj = basis[j].clone();
            for (vi, bji) in basis[i].iter_mut().zip(bj) {
                *vi -= proj * bji;
            }
        }
        let nrm: f64 = basis[i].iter().map(|v| v * v).sum::<f64>().sqrt();
        for vi in basis[i].iter_mut() {
            *vi /= nrm;
        }
    }
    // Log-spaced spectrum in [1/cond, 1]: unit top eigenvalue keeps the
    // fixed-weight residual on the same scale as the iterate error.
    let eigs: Vec<f64> = (0..dim)
        .map(|i| {
            if dim == 1 {
                1.0
            } else {
                cond.powf(i as f64 / (dim - 1) as f64) / cond
            }
        })
        .collect();
    // Q = B^T diag(eigs) B with rows of `basis` as eigenvectors; symmetrize
    // exactly so the construction gate on |Q - Q^T| passes.
    let mut q = Matrix::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let mut v = 0.0;
            for (b, &e) in basis.iter().zip(&eigs) {
                v += e * b[i] * b[j];
            }
            q.set(i, j, v);
            q.set(j, i, v);
        }
    }

    let mut x_true = vec![0.0; dim];
    let mut indices: Vec<usize> = (0..dim).collect();
    // Fisher-Yates off the same stream.
    for i in (1..dim).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        indices.swap(i, j);
    }
    let nnz = (nnz_fraction * dim as f64).round() as usize;
    for &idx in indices.iter().take(nnz) {
        let sign = if rng.next_f64() < 0.5 { -1.0 } else { 1.0 };
        x_true[idx] = sign * rng.uniform(0.5, 1.5);
    }
    let qx = q.matvec(&x_true);
    let linear: Vec<f64> = qx.iter().map(|v| -v).collect();
    (q, linear)
}

fn build_smooth(spec: &SmoothSpec, seed: u64) -> Result<Box<dyn SmoothOracle>, BuildError> {
    Ok(match spec {
        SmoothSpec::Quadratic { matrix, linear } => {
            let q = Matrix::from_rows(matrix).map_err(|_| BuildError::DimensionMismatch {
                smooth: matrix.len(),
                nonsmooth: linear.len(),
            })?;
            Box::new(make_quadratic(q, linear.clone())?)
        }
        SmoothSpec::Quartic { scale, dim } => Box::new(make_quartic(*scale, *dim)?),
        SmoothSpec::AlmPenalty { matrix, shift, rho, lower, upper } => {
            let a = Matrix::from_rows(matrix).map_err(|_| BuildError::DimensionMismatch {
                smooth: matrix.len(),
                nonsmooth: shift.len(),
            })?;
            let box_set = bounds_to_box(lower, upper)?;
            Box::new(make_alm_penalty(a, shift.clone(), *rho, box_set)?)
        }
        SmoothSpec::RandomQuadratic { dim, cond, nnz_fraction } => {
            let (q, linear) = random_quadratic(*dim, *cond, *nnz_fraction, seed);
            Box::new(make_quadratic(q, linear)?)
        }
        SmoothSpec::Sum { terms } => {
            let built: Result<Vec<_>, _> = terms.iter().map(|t| build_smooth(t, seed)).collect();
            Box::new(make_sum(built?)?)
        }
    })
}

/// Instantiates oracles and the start point from a resolved spec.
pub fn build(spec: &ProblemSpec) -> Result<BuiltProblem, BuildError> {
    let seed = spec.seed.unwrap_or(0);
    let smooth = build_smooth(&spec.smooth, seed)?;
    let nonsmooth = make_nonsmooth(spec.nonsmooth.to_kind(), smooth.dim())?;
    if smooth.dim() != nonsmooth.dim() {
        return Err(BuildError::DimensionMismatch {
            smooth: smooth.dim(),
            nonsmooth: nonsmooth.dim(),
        });
    }
    Ok(BuiltProblem { smooth, nonsmooth, x0: spec.x0.clone() })
}

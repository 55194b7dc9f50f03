//! JSON config ingestion: problem descriptions, solver parameters, defaults,
//! and validation with JSON-pointer-style error paths.

use std::fs;
use std::path::Path;

use proxkl_core::{BoxSet, NonsmoothKind, SolverConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigFileError {
    #[error("cannot read {path}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid JSON in {path}")]
    Parse { path: String, source: serde_json::Error },
    #[error("{pointer}: {message}")]
    Invalid { pointer: String, message: String },
    #[error("unknown registry problem '{0}'")]
    UnknownProblem(String),
}

fn invalid(pointer: &str, message: impl Into<String>) -> ConfigFileError {
    ConfigFileError::Invalid { pointer: pointer.to_string(), message: message.into() }
}

/// Smooth part of a problem, as written in configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SmoothSpec {
    Quadratic {
        matrix: Vec<Vec<f64>>,
        linear: Vec<f64>,
    },
    Quartic {
        scale: f64,
        dim: usize,
    },
    AlmPenalty {
        matrix: Vec<Vec<f64>>,
        shift: Vec<f64>,
        rho: f64,
        /// `null` entries mean unbounded below.
        lower: Vec<Option<f64>>,
        /// `null` entries mean unbounded above.
        upper: Vec<Option<f64>>,
    },
    /// Rotated quadratic with log-spaced spectrum in `[1/cond, 1]` and linear
    /// term `-Q x_true` for a sparse `x_true`; all entries derive from the
    /// problem seed via xoshiro256++ (see `rng`).
    RandomQuadratic {
        dim: usize,
        cond: f64,
        nnz_fraction: f64,
    },
    Sum {
        terms: Vec<SmoothSpec>,
    },
}

/// Nonsmooth part; box bounds use `null` for missing bounds so configs stay
/// plain JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonsmoothSpec {
    L1 { weight: f64 },
    L0 { weight: f64 },
    Box { lower: Vec<Option<f64>>, upper: Vec<Option<f64>> },
    Zero,
}

impl NonsmoothSpec {
    pub fn to_kind(&self) -> NonsmoothKind {
        match self {
            NonsmoothSpec::L1 { weight } => NonsmoothKind::L1 { weight: *weight },
            NonsmoothSpec::L0 { weight } => NonsmoothKind::L0 { weight: *weight },
            NonsmoothSpec::Box { lower, upper } => NonsmoothKind::BoxIndicator {
                lower: lower.iter().map(|b| b.unwrap_or(f64::NEG_INFINITY)).collect(),
                upper: upper.iter().map(|b| b.unwrap_or(f64::INFINITY)).collect(),
            },
            NonsmoothSpec::Zero => NonsmoothKind::Zero,
        }
    }
}

pub fn bounds_to_box(
    lower: &[Option<f64>],
    upper: &[Option<f64>],
) -> Result<BoxSet, proxkl_core::OracleError> {
    BoxSet::new(
        lower.iter().map(|b| b.unwrap_or(f64::NEG_INFINITY)).collect(),
        upper.iter().map(|b| b.unwrap_or(f64::INFINITY)).collect(),
    )
}

/// A fully resolved problem instance description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub name: String,
    pub smooth: SmoothSpec,
    pub nonsmooth: NonsmoothSpec,
    pub x0: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
}

/// Raw on-disk form before registry resolution and defaulting.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    problem: ProblemSection,
    #[serde(default)]
    solver: SolverSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemSection {
    name: String,
    #[serde(default)]
    smooth: Option<SmoothSpec>,
    #[serde(default)]
    nonsmooth: Option<NonsmoothSpec>,
    #[serde(default)]
    x0: Option<Vec<f64>>,
    #[serde(default)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverSection {
    tau: Option<f64>,
    delta: Option<f64>,
    gamma_min: Option<f64>,
    gamma_max: Option<f64>,
    gamma_cap: Option<f64>,
    eps_tol: Option<f64>,
    max_iter: Option<usize>,
    max_inner: Option<u32>,
    snapshot_every: Option<usize>,
}

impl SolverSection {
    fn resolve(&self) -> Result<SolverConfig, ConfigFileError> {
        let d = SolverConfig::default();
        let cfg = SolverConfig {
            tau: self.tau.unwrap_or(d.tau),
            delta: self.delta.unwrap_or(d.delta),
            gamma_min: self.gamma_min.unwrap_or(d.gamma_min),
            gamma_max: self.gamma_max.unwrap_or(d.gamma_max),
            gamma_cap: self.gamma_cap.unwrap_or(d.gamma_cap),
            eps_tol: self.eps_tol.unwrap_or(d.eps_tol),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            max_inner: self.max_inner.unwrap_or(d.max_inner),
            snapshot_every: self.snapshot_every.unwrap_or(d.snapshot_every),
        };
        cfg.validate().map_err(|e| {
            use proxkl_core::ConfigError::*;
            let pointer = match e {
                BadTau(_) => "/solver/tau",
                BadDelta(_) => "/solver/delta",
                BadGammaRange { .. } => "/solver/gamma_min",
                BadEpsTol(_) => "/solver/eps_tol",
                BadMaxIter => "/solver/max_iter",
                BadMaxInner => "/solver/max_inner",
                BadSnapshotEvery => "/solver/snapshot_every",
            };
            invalid(pointer, e.to_string())
        })?;
        Ok(cfg)
    }
}

fn validate_smooth(spec: &SmoothSpec, pointer: &str) -> Result<usize, ConfigFileError> {
    match spec {
        SmoothSpec::Quadratic { matrix, linear } => {
            let n = linear.len();
            if matrix.len() != n || matrix.iter().any(|row| row.len() != n) {
                return Err(invalid(
                    &format!("{pointer}/matrix"),
                    format!("expected a {n}x{n} matrix matching the linear term"),
                ));
            }
            Ok(n)
        }
        SmoothSpec::Quartic { scale, dim } => {
            if *scale <= 0.0 {
                return Err(invalid(&format!("{pointer}/scale"), "must be positive"));
            }
            if *dim == 0 {
                return Err(invalid(&format!("{pointer}/dim"), "must be at least 1"));
            }
            Ok(*dim)
        }
        SmoothSpec::AlmPenalty { matrix, shift, rho, lower, upper } => {
            let m = matrix.len();
            let n = matrix.first().map_or(0, Vec::len);
            if n == 0 || matrix.iter().any(|row| row.len() != n) {
                return Err(invalid(&format!("{pointer}/matrix"), "ragged or empty matrix"));
            }
            if shift.len() != m {
                return Err(invalid(
                    &format!("{pointer}/shift"),
                    format!("expected length {m} to match matrix rows"),
                ));
            }
            if *rho <= 0.0 {
                return Err(invalid(&format!("{pointer}/rho"), "must be positive"));
            }
            if lower.len() != m || upper.len() != m {
                return Err(invalid(
                    &format!("{pointer}/lower"),
                    format!("box bounds must have length {m}"),
                ));
            }
            bounds_to_box(lower, upper)
                .map_err(|e| invalid(&format!("{pointer}/lower"), e.to_string()))?;
            Ok(n)
        }
        SmoothSpec::RandomQuadratic { dim, cond, nnz_fraction } => {
            if *dim == 0 {
                return Err(invalid(&format!("{pointer}/dim"), "must be at least 1"));
            }
            if *cond < 1.0 {
                return Err(invalid(&format!("{pointer}/cond"), "must be at least 1"));
            }
            if !(0.0..=1.0).contains(nnz_fraction) {
                return Err(invalid(&format!("{pointer}/nnz_fraction"), "must be in [0, 1]"));
            }
            Ok(*dim)
        }
        SmoothSpec::Sum { terms } => {
            if terms.is_empty() {
                return Err(invalid(&format!("{pointer}/terms"), "sum needs at least one term"));
            }
            let mut dim = None;
            for (i, t) in terms.iter().enumerate() {
                let n = validate_smooth(t, &format!("{pointer}/terms/{i}"))?;
                if let Some(d) = dim {
                    if d != n {
                        return Err(invalid(
                            &format!("{pointer}/terms/{i}"),
                            format!("dimension {n} differs from {d}"),
                        ));
                    }
                }
                dim = Some(n);
            }
            Ok(dim.expect("nonempty"))
        }
    }
}

fn validate_nonsmooth(spec: &NonsmoothSpec, dim: usize, pointer: &str) -> Result<(), ConfigFileError> {
    match spec {
        NonsmoothSpec::L1 { weight } | NonsmoothSpec::L0 { weight } => {
            if *weight <= 0.0 {
                return Err(invalid(&format!("{pointer}/weight"), "must be positive"));
            }
        }
        NonsmoothSpec::Box { lower, upper } => {
            if lower.len() != dim || upper.len() != dim {
                return Err(invalid(
                    &format!("{pointer}/lower"),
                    format!("box bounds must have length {dim}"),
                ));
            }
            bounds_to_box(lower, upper)
                .map_err(|e| invalid(&format!("{pointer}/lower"), e.to_string()))?;
        }
        NonsmoothSpec::Zero => {}
    }
    Ok(())
}

pub fn validate_problem(spec: &ProblemSpec) -> Result<(), ConfigFileError> {
    let dim = validate_smooth(&spec.smooth, "/problem/smooth")?;
    validate_nonsmooth(&spec.nonsmooth, dim, "/problem/nonsmooth")?;
    if spec.x0.len() != dim {
        return Err(invalid(
            "/problem/x0",
            format!("expected length {dim}, got {}", spec.x0.len()),
        ));
    }
    Ok(())
}

/// Loads and fully validates a config file; omitted solver fields get their
/// defaults and a bare problem name resolves through the registry.
pub fn load_config(path: &Path) -> Result<(ProblemSpec, SolverConfig), ConfigFileError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file: ConfigFile = serde_json::from_str(&text).map_err(|source| ConfigFileError::Parse {
        path: path.display().to_string(),
        source,
    })?;
    let solver = file.solver.resolve()?;

    let problem = match (file.problem.smooth, file.problem.nonsmooth) {
        (Some(smooth), Some(nonsmooth)) => {
            let dim = validate_smooth(&smooth, "/problem/smooth")?;
            ProblemSpec {
                name: file.problem.name,
                smooth,
                nonsmooth,
                x0: file.problem.x0.unwrap_or_else(|| vec![0.0; dim]),
                seed: file.problem.seed,
            }
        }
        (None, None) => {
            let mut spec = crate::registry::lookup(&file.problem.name)
                .ok_or_else(|| ConfigFileError::UnknownProblem(file.problem.name.clone()))?;
            if let Some(x0) = file.problem.x0 {
                spec.x0 = x0;
            }
            if file.problem.seed.is_some() {
                spec.seed = file.problem.seed;
            }
            spec
        }
        _ => {
            return Err(invalid(
                "/problem",
                "smooth and nonsmooth must be given together (or both omitted for a registry problem)",
            ));
        }
    };
    validate_problem(&problem)?;
    Ok((problem, solver))
}

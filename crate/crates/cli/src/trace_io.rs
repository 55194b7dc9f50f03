//! Trace CSV and report JSON serialization.
//!
//! CSV floats use Rust's shortest round-trip formatting, so
//! `parse(write(trace)) == trace` bit-for-bit, subnormals included.

use std::fs;
use std::io::Write;
use std::path::Path;

use proxkl_core::{IterationRecord, KLRateModel, RateReport, SolveReport, SolverConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ProblemSpec;

pub const TRACE_HEADER: &str = "k,psi,gamma,inner_iters,step_norm,residual";

#[derive(Debug, Error)]
pub enum TraceIoError {
    #[error("cannot write {path}")]
    Write { path: String, source: std::io::Error },
    #[error("cannot read {path}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: bad header {got:?}")]
    BadHeader { path: String, got: String },
    #[error("{path}, line {line}: {message}")]
    BadRow { path: String, line: usize, message: String },
    #[error("invalid JSON in {path}")]
    Json { path: String, source: serde_json::Error },
}

/// Everything needed to reproduce and audit one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunArtifact {
    pub report: SolveReport,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rate: Option<RateReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kl_model: Option<KLRateModel>,
    pub config_echo: SolverConfig,
    pub problem_echo: ProblemSpec,
}

pub fn write_trace_csv(trace: &[IterationRecord], path: &Path) -> Result<(), TraceIoError> {
    let mut out = String::with_capacity(64 * (trace.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in trace {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.k, r.psi, r.gamma, r.inner_iters, r.step_norm, r.residual
        ));
    }
    fs::write(path, out).map_err(|source| TraceIoError::Write {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<IterationRecord>, TraceIoError> {
    let text = fs::read_to_string(path).map_err(|source| TraceIoError::Read {
        path: path.display().to_string(),
        source,
    })?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != TRACE_HEADER {
        return Err(TraceIoError::BadHeader {
            path: path.display().to_string(),
            got: header.to_string(),
        });
    }
    let mut trace = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let bad_row = |message: String| TraceIoError::BadRow {
            path: path.display().to_string(),
            line: idx + 2,
            message,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(bad_row(format!("expected 6 fields, got {}", fields.len())));
        }
        let parse_f = |s: &str| s.parse::<f64>().map_err(|e| bad_row(format!("{s:?}: {e}")));
        trace.push(IterationRecord {
            k: fields[0].parse().map_err(|e| bad_row(format!("k: {e}")))?,
            psi: parse_f(fields[1])?,
            gamma: parse_f(fields[2])?,
            inner_iters: fields[3].parse().map_err(|e| bad_row(format!("inner_iters: {e}")))?,
            step_norm: parse_f(fields[4])?,
            residual: parse_f(fields[5])?,
            x_snapshot: None,
        });
    }
    Ok(trace)
}

pub fn write_report_json(artifact: &RunArtifact, path: &Path) -> Result<(), TraceIoError> {
    let mut file = fs::File::create(path).map_err(|source| TraceIoError::Write {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::to_writer_pretty(&mut file, artifact).map_err(|source| TraceIoError::Json {
        path: path.display().to_string(),
        source,
    })?;
    file.write_all(b"\n").map_err(|source| TraceIoError::Write {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_report_json(path: &Path) -> Result<RunArtifact, TraceIoError> {
    let text = fs::read_to_string(path).map_err(|source| TraceIoError::Read {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| TraceIoError::Json {
        path: path.display().to_string(),
        source,
    })
}

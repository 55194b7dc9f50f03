//! Command-line harness: problem registry, config ingestion, batch runs, and
//! trace/report serialization.

pub mod config;
pub mod registry;
pub mod rng;
pub mod runner;
pub mod trace_io;

pub use runner::run_cli;

//! Experiment runner for coarse extrinsic curvature sweeps.
//!
//! A TOML config names a manifold, a base point and direction, a dyadic δ schedule with
//! σ/ε rules `c * delta^p`, the estimators to run and optional pass/fail criteria.
//! [`runner::run`] executes it and writes `records.jsonl`, `records.csv` and
//! `summary.json`.

pub mod config;
pub mod records;
pub mod runner;

pub use config::{ConfigError, ExperimentConfig, Plan};
pub use records::ExperimentRecord;
pub use runner::{run, RunError, RunOutcome};

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const RUNTIME_ERROR: i32 = 1;
    pub const CONFIG_ERROR: i32 = 2;
    pub const CRITERION_FAILED: i32 = 3;
}

//! Experiment harness: JSON configs, a name-keyed component registry,
//! deterministic parallel batches, diagnostic checks and SVG plots.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod check;
pub mod config;
pub mod error;
pub mod plot;
pub mod registry;
pub mod runner;

pub use check::{default_checks, run_check, run_checks, CheckResult, CheckSpec};
pub use config::ExperimentConfig;
pub use error::HarnessError;
pub use registry::{Experiment, Registry};
pub use runner::{execute, load_trajectories, run, AggregateReport};

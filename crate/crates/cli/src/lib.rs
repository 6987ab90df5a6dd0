//! Experiment runner for the hyperlab toolkit.
//!
//! [`run`] turns an [`ExperimentConfig`] into deterministic artifacts: a JSON
//! report that embeds the config hash and every finite grid or horizon that
//! stood in for a limit, plus a plot-ready CSV companion.

pub mod config;
mod run;
pub mod syntax;

pub use config::{ConfigError, Experiment, ExperimentConfig, Format};
pub use run::{run, Artifact, Outcome, RunError, EXIT_VIOLATION};

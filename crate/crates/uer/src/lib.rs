//! Experiment driver for `uer-core`.
//!
//! This crate owns everything that touches the file system: the CSV dataset
//! format, the binary checkpoint and buffer container, newline-delimited
//! JSON metrics, the key-value experiment config, and the orchestration
//! behind the `uer` command line.

pub mod config;
pub mod container;
pub mod csv;
pub mod error;
pub mod metrics;
pub mod runner;

pub use config::{DatasetSpec, ExperimentConfig};
pub use error::{ConfigError, IoError, RunError};
pub use runner::{RunSummary, SweepRow, Table1Row};

//! Config-driven experiment harness: declarative TOML experiment
//! descriptions, topology files, weather-data ingestion, and CSV/summary
//! outputs with airtight provenance.

// validation comparisons are written `!(x > 0.0)` so that NaN inputs
// fail them too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod outputs;
pub mod topology;
pub mod weather;

pub use cli::cli_main;
pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};

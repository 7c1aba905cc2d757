//! Orchestration of the detection pipeline: configuration, staged
//! artifacts with manifests, and the `stackdetect` command line.

pub mod cli;
pub mod config;
pub mod error;
pub mod manifest;
pub mod pipeline;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
pub use pipeline::{Pipeline, Stage};

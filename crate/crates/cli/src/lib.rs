//! Library side of the `qtrack` command: config loading, design checks,
//! simulation runs with CSV/SVG output, and scan planning.

pub mod check;
pub mod config;
pub mod plan;
pub mod plot;
pub mod run;

use qtrack_core::sim::SimError;
use qtrack_core::tf::TfError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("simulation diverged: {0}")]
    Divergence(SimError),
    #[error("{0}")]
    CheckFailed(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Divergence(_) => 2,
            CliError::CheckFailed(_) => 3,
        }
    }
}

impl From<TfError> for CliError {
    fn from(e: TfError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidConfig(msg) => CliError::Config(msg),
            SimError::Axis { axis, source } if matches!(*source, SimError::InvalidConfig(_)) => {
                CliError::Config(format!("axis {axis}: {source}"))
            }
            other => CliError::Divergence(other),
        }
    }
}

//! Library side of the `grating` command: configuration, task execution and
//! output writing. The binary in `main.rs` only parses flags.

pub mod config;
pub mod report;
pub mod run;

use grating_core::GratingError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Numerical(GratingError),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<GratingError> for CliError {
    fn from(e: GratingError) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e)
        } else {
            CliError::Config(e.to_string())
        }
    }
}

pub use config::{load_run_spec, parse_run_spec, Overrides, RunSpec, Task};
pub use run::{execute, run, write_outputs, RunOutput};

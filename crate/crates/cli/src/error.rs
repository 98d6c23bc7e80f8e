use thiserror::Error;

use crate::scenario::ScenarioError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Scenario(#[from] ScenarioError),

    #[error("{0}")]
    Model(#[from] privacy_pricing::Error),

    #[error("{0}")]
    Usage(String),

    #[error("{path}: {message}")]
    Input { path: String, message: String },

    #[error("failed to write output: {0}")]
    Output(String),

    /// The solver left the closed form and `--strict` was given.
    #[error("{0}")]
    Fallback(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Fallback(_) => 3,
            CliError::Output(_) => 1,
            _ => 2,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

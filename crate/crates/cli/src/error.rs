//! Error type mapping every failure to the process exit contract:
//! input and configuration problems exit 1, completed-but-unconverged
//! retrievals exit 2.

use std::fmt;

use crate::config::ConfigError;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, configuration, or input files — exit code 1.
    Input(String),
    /// The retrieval ran to its budget without meeting the error
    /// tolerance — exit code 2.
    NonConvergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::NonConvergence(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::NonConvergence(m) => m,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.message())
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(error: ConfigError) -> Self {
        CliError::Input(error.0)
    }
}

impl From<homret_core::Error> for CliError {
    fn from(error: homret_core::Error) -> Self {
        CliError::Input(error.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(error: std::io::Error) -> Self {
        CliError::Input(error.to_string())
    }
}

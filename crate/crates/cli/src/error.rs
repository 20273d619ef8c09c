use std::fmt;

use budgeval_core::budget::BudgetError;
use budgeval_core::corpus::CorpusError;
use budgeval_core::estimators::EstimatorError;
use budgeval_core::ranking::RankingError;
use budgeval_core::sandbox::SandboxError;

/// Failure of a command, split by the exit status it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Bad input data, flags or a failed check. Exit status 1.
    Validation(String),
    /// The execution machinery or the filesystem failed. Exit status 2.
    Infrastructure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Infrastructure(_) => 2,
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    pub fn infra(msg: impl Into<String>) -> Self {
        CliError::Infrastructure(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Infrastructure(m) => f.write_str(m),
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<BudgetError> for CliError {
    fn from(e: BudgetError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<EstimatorError> for CliError {
    fn from(e: EstimatorError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<RankingError> for CliError {
    fn from(e: RankingError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<SandboxError> for CliError {
    fn from(e: SandboxError) -> Self {
        match e {
            // malformed verdict files are bad input, not broken machinery
            SandboxError::Parse { .. } | SandboxError::DuplicateResult { .. } | SandboxError::InvalidLimits(_) => {
                CliError::Validation(e.to_string())
            }
            SandboxError::InvalidParallelism => CliError::Validation(e.to_string()),
            SandboxError::Io { .. } | SandboxError::Interrupted { .. } => CliError::Infrastructure(e.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

use thiserror::Error;

use crate::config::ConfigIssue;

/// Front-end failure, mapped onto the process exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n{}", list(.0))]
    Config(Vec<ConfigIssue>),

    #[error("{scenario}: {source}")]
    Numeric {
        scenario: &'static str,
        #[source]
        source: twistlab::Error,
    },

    #[error("{0}")]
    Io(String),

    #[error("{failed} of {total} checks failed")]
    Validation { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } => 1,
            CliError::Config(_) => 2,
            CliError::Numeric { .. } | CliError::Io(_) => 3,
        }
    }
}

fn list(issues: &[ConfigIssue]) -> String {
    issues.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n")
}

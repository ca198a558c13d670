//! Failure categories of the harness, each mapped to a process exit code.

use std::fmt;

/// Everything that can abort a command, grouped by exit code.
///
/// * exit 2 — invalid input: flags, config file, unknown names, invalid
///   coefficient vectors, budgets too small to run;
/// * exit 3 — a numeric routine stopped before reaching its tolerance
///   (adaptive quadrature or the simplex solver);
/// * exit 4 — an emitted table violated an internal invariant that the
///   underlying theory guarantees, which signals a bug, not bad input.
#[derive(Clone, Debug)]
pub enum CliError {
    /// Bad input; exit code 2.
    Validation(String),
    /// Quadrature or solver non-convergence; exit code 3.
    Convergence(String),
    /// A result failed its pre-emission consistency check; exit code 4.
    SelfCheck(String),
}

impl CliError {
    /// The process exit code for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Convergence(_) => 3,
            CliError::SelfCheck(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(msg) => write!(f, "{msg}"),
            CliError::Convergence(msg) => write!(f, "{msg}"),
            CliError::SelfCheck(msg) => write!(f, "self-check failed: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<mis_core::Error> for CliError {
    fn from(e: mis_core::Error) -> Self {
        match e {
            mis_core::Error::NonConvergence { .. } | mis_core::Error::DidNotConverge { .. } => {
                CliError::Convergence(e.to_string())
            }
            other => CliError::Validation(other.to_string()),
        }
    }
}

use std::fmt;

use netrisk::model::Violation;
use serde::Serialize;

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_MC_CHECK: i32 = 3;

/// Error printed to stderr as a single JSON object.
#[derive(Debug, Serialize)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<Violation>,
    #[serde(skip)]
    pub exit_code: i32,
}

impl CliError {
    pub fn invalid(kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
            violations: Vec::new(),
            exit_code: EXIT_INVALID,
        }
    }

    pub fn failure(kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            exit_code: EXIT_FAILURE,
            ..Self::invalid(kind, message)
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl From<netrisk::Error> for CliError {
    fn from(e: netrisk::Error) -> Self {
        use netrisk::Error as E;
        let message = e.to_string();
        match e {
            E::InvalidScenario(violations) => Self {
                violations,
                ..Self::invalid("invalid_scenario", message)
            },
            E::InvalidArgument(_) | E::IndexOutOfRange { .. } => Self::invalid("invalid_argument", message),
            E::Unsupported(_) => Self::invalid("unsupported", message),
            E::CapExceeded { .. } => Self::failure("cap_exceeded", message),
            _ => Self::failure("computation", message),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::failure("io", e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::failure("io", e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::failure("io", e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

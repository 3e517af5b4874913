use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{origin}: cannot read scenario: {message}")]
    Io { origin: String, message: String },

    #[error("{origin}: malformed scenario: {message}")]
    Parse { origin: String, message: String },

    #[error("{origin}: scenario failed validation:\n  {}", violations.join("\n  "))]
    Validation { origin: String, violations: Vec<String> },

    #[error("{origin}: {context}: {source}")]
    Runtime {
        origin: String,
        context: String,
        #[source]
        source: objectify::Error,
    },

    #[error("unknown bundled scenario {0:?}")]
    UnknownExample(String),
}

impl CliError {
    /// Process exit code: 1 for input that does not validate, 2 for failures
    /// while running a valid scenario.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Validation { .. } | CliError::UnknownExample(_) => 1,
            CliError::Io { .. } | CliError::Runtime { .. } => 2,
        }
    }
}

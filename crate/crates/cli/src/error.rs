use std::fmt;
use std::process::ExitCode;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Unreadable or invalid configuration, or a request the solver cannot take.
    Config(String),
    Io(String),
    /// A solver failed; partial outputs may have been written.
    NonConvergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) | CliError::Io(_) => ExitCode::from(2),
            CliError::NonConvergence(_) => ExitCode::from(3),
        }
    }

    pub fn from_config(e: bratu_vqa::Error) -> Self {
        CliError::Config(e.to_string())
    }

    pub fn from_solver(e: bratu_vqa::Error) -> Self {
        use bratu_vqa::Error as E;
        match e {
            E::InvalidConfig(_) | E::BeyondFold { .. } | E::NonPositiveLambda(_) | E::InvalidQubitCount(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::NonConvergence(other.to_string()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
            CliError::NonConvergence(m) => write!(f, "solver did not converge: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

use std::fmt;

/// Failure classes of the command-line tool, each with a fixed exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
    Infeasible(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    /// Stable machine-readable tag printed with the message.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Infeasible(_) => "infeasible",
            CliError::Numerical(_) => "numerical",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Infeasible(m) | CliError::Numerical(m) => m,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.kind(), self.message())
    }
}

impl std::error::Error for CliError {}

impl From<pathopt::ControlError> for CliError {
    fn from(e: pathopt::ControlError) -> Self {
        match e {
            pathopt::ControlError::NoFeasiblePoint(_) => CliError::Infeasible(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<pathopt::FilterError> for CliError {
    fn from(e: pathopt::FilterError) -> Self {
        match e {
            pathopt::FilterError::GammaTooSmall { .. } => CliError::Infeasible(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<pathopt::sim::SimError> for CliError {
    fn from(e: pathopt::sim::SimError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

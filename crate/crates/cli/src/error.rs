use std::fmt;

/// Failure classes, one per exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
    Infeasible(String),
    Numerical(String),
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Verification(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<shortfall::Error> for CliError {
    fn from(e: shortfall::Error) -> Self {
        use shortfall::Error as E;
        match e {
            E::InvalidParameter { .. } | E::WrongKind { .. } => CliError::Config(e.to_string()),
            e if e.is_infeasible() => CliError::Infeasible(e.to_string()),
            e => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("i/o: {e}"))
    }
}

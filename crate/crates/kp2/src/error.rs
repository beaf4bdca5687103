use std::path::Path;

/// Failure classes of the front end, mapped to exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad input, missing file, violated precondition.
    #[error("{0}")]
    Precondition(String),
    /// Guard trips, divergence and other numerical regime failures.
    #[error("{0}")]
    Regime(String),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Precondition(msg.into())
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Precondition(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Precondition(_) => 1,
            CliError::Regime(_) => 2,
        }
    }
}

impl From<kp2_core::Error> for CliError {
    fn from(e: kp2_core::Error) -> Self {
        if e.is_regime() {
            CliError::Regime(e.to_string())
        } else {
            CliError::Precondition(e.to_string())
        }
    }
}

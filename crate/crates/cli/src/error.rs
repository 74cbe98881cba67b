//! Errors carrying the documented exit codes.

use std::fmt;

/// A failed command and the exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// A verification command ran and found violations (exit 1).
    Verification(String),
    /// Anything else that went wrong at run time (exit 1).
    Runtime(String),
    /// Bad input: unreadable or malformed spec, invalid flag values (exit 2).
    Input(String),
    /// A schedule or bound precondition does not hold (exit 3).
    Schedule(String),
    /// The solver did not certify its result (exit 4).
    NonConvergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) | CliError::Runtime(_) => 1,
            CliError::Input(_) => 2,
            CliError::Schedule(_) => 3,
            CliError::NonConvergence(_) => 4,
        }
    }

    pub fn input(message: impl Into<String>) -> Self {
        CliError::Input(message.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
            CliError::Runtime(m) => write!(f, "{m}"),
            CliError::Input(m) => write!(f, "invalid input: {m}"),
            CliError::Schedule(m) => write!(f, "{m}"),
            CliError::NonConvergence(m) => write!(f, "solver did not converge: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<softpen::Error> for CliError {
    fn from(e: softpen::Error) -> Self {
        use softpen::Error as E;
        match e {
            E::Schema { .. }
            | E::UnsupportedNorm(_)
            | E::DimensionMismatch { .. }
            | E::InvalidParameter { .. } => CliError::Input(e.to_string()),
            E::Schedule(_) => CliError::Schedule(e.to_string()),
            E::Stalled { .. } => CliError::NonConvergence(e.to_string()),
            E::Generation(_) => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_errors_map_to_documented_codes() {
        let code = |e: softpen::Error| CliError::from(e).exit_code();
        assert_eq!(code(softpen::Error::Schedule("x".into())), 3);
        assert_eq!(code(softpen::Error::UnsupportedNorm("3".into())), 2);
        assert_eq!(
            code(softpen::Error::Schema {
                field: "f".into(),
                reason: "r".into()
            }),
            2
        );
        assert_eq!(
            code(softpen::Error::Stalled {
                stage: 1,
                reason: "r".into()
            }),
            4
        );
        assert_eq!(CliError::Verification("v".into()).exit_code(), 1);
    }
}

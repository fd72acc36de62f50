use thiserror::Error;

pub type Result<T> = std::result::Result<T, ZoError>;

#[derive(Debug, Error)]
pub enum ZoError {
    /// Inconsistent or unsupported configuration (bad pairing, unknown key, empty grid).
    #[error("configuration error: {0}")]
    Config(String),

    /// A caller broke an operation's precondition (dimension mismatch, u <= 0, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("numerical error{}: {message}{}",
        .iteration.map(|t| format!(" at iteration {t}")).unwrap_or_default(),
        .residual.map(|r| format!(" (residual {r:e})")).unwrap_or_default())]
    Numerical {
        message: String,
        iteration: Option<usize>,
        residual: Option<f64>,
    },

    #[error("problem evaluation error: {0}")]
    ProblemEval(String),

    /// Malformed or unusable data (CSV schema, non-positive gaps for a log fit).
    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ZoError {
    pub fn numerical(message: impl Into<String>) -> Self {
        ZoError::Numerical {
            message: message.into(),
            iteration: None,
            residual: None,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            ZoError::Config(_) | ZoError::Contract(_) | ZoError::Input(_) => 2,
            ZoError::Numerical { .. } | ZoError::ProblemEval(_) => 3,
            ZoError::Data(_) => 4,
            ZoError::Io(_) => 1,
        }
    }
}

impl From<csv::Error> for ZoError {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => ZoError::Io(io),
            other => ZoError::Data(format!("{other:?}")),
        }
    }
}

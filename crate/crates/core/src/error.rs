use thiserror::Error;

/// Errors produced by the solver stack.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular argument: {0}")]
    SingularArgument(String),

    #[error("lattice sum did not converge: {0}")]
    Convergence(String),

    /// A dense solve whose matrix is numerically singular or whose
    /// condition number exceeds the reporting threshold.
    #[error("singular system in {context} (condition number {condition:.3e})")]
    Singular { context: String, condition: f64 },

    #[error("eigen-solver failure: {0}")]
    Eigen(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("at omega = {omega}, theta = {theta}: {source}")]
    AtPoint {
        omega: f64,
        theta: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("{0}")]
    ConfigList(ConfigErrors),

    #[error("i/o error: {0}")]
    Io(String),
}

/// Collected configuration errors, each with its line number.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<(usize, String)>);

impl std::fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, (line, msg)) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            if *line == 0 {
                write!(f, "{msg}")?;
            } else {
                write!(f, "line {line}: {msg}")?;
            }
        }
        Ok(())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Attach sweep coordinates to an error.
    pub fn at(self, omega: f64, theta: f64) -> Self {
        match self {
            e @ Error::AtPoint { .. } => e,
            e => Error::AtPoint {
                omega,
                theta,
                source: Box::new(e),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

//! Crate-wide error type and exit-code mapping.

use std::fmt;

/// Error returned by simulation, design, and I/O routines.
#[derive(Debug, Clone)]
pub enum Error {
    /// Invalid input or a violated precondition.
    Domain(String),
    /// A numerical routine failed to reach its accuracy target.
    Numerical {
        message: String,
        /// Best estimate produced before giving up, when one exists.
        achieved: Option<f64>,
        /// Estimated error bound on `achieved`.
        error_bound: Option<f64>,
    },
    /// A design request cannot be satisfied within the given bounds.
    Infeasible(String),
    /// Device-file syntax or schema violation. `line` is 1-based.
    Parse { line: usize, message: String },
    /// Underlying file-system failure.
    Io(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical {
            message: msg.into(),
            achieved: None,
            error_bound: None,
        }
    }

    pub fn infeasible(msg: impl Into<String>) -> Self {
        Error::Infeasible(msg.into())
    }

    /// Machine-readable category tag, printed as `error[<category>]` on the
    /// diagnostic stream.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Numerical { .. } => "numerical",
            Error::Infeasible(_) => "infeasible",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
        }
    }

    /// Process exit code: 2 parse/validation, 3 infeasible design,
    /// 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Parse { .. } | Error::Io(_) => 2,
            Error::Infeasible(_) => 3,
            Error::Numerical { .. } => 4,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "{msg}"),
            Error::Numerical {
                message,
                achieved,
                error_bound,
            } => {
                write!(f, "{message}")?;
                if let Some(v) = achieved {
                    write!(f, " (achieved estimate {v:e}")?;
                    if let Some(e) = error_bound {
                        write!(f, ", error bound {e:e}")?;
                    }
                    write!(f, ")")?;
                }
                Ok(())
            }
            Error::Infeasible(msg) => write!(f, "{msg}"),
            Error::Parse { line: 0, message } => write!(f, "{message}"),
            Error::Parse { line, message } => write!(f, "line {line}: {message}"),
            Error::Io(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Parameters outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A sampling grid too coarse for the requested transform.
    #[error("grid error: {0}")]
    Grid(String),

    #[error("degenerate system: {0}")]
    Degenerate(String),

    /// A bracketing scan found no sign change.
    #[error("no root: {0}")]
    NoRoot(String),

    #[error("no zero located: {0}")]
    NoZero(String),

    #[error("found {count} distinct zeros where exactly one was expected")]
    MultipleZero { count: usize },

    /// The function vanished (numerically) on a winding contour.
    #[error("contour error: {0}")]
    Contour(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numeric_failure(&self) -> bool {
        matches!(
            self,
            Error::NoRoot(_) | Error::NoZero(_) | Error::MultipleZero { .. } | Error::Contour(_)
        )
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        if self.is_numeric_failure() {
            3
        } else {
            2
        }
    }
}

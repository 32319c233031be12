use thiserror::Error;

/// Errors shared by every module in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the documented domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Mismatched or malformed input structure (lengths, grids, matrices).
    #[error("shape error: {0}")]
    Shape(String),

    /// A distribution failed its normalization / positivity contract.
    #[error("normalization error: {0}")]
    Normalization(String),

    /// An input exceeded a hard size cap (e.g. enumeration limits).
    #[error("size error: {0}")]
    Size(String),

    /// An iterative routine failed to bracket or converge.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// A numerical quadrature failed to reach its tolerance.
    #[error("quadrature failure: {0}")]
    Quadrature(String),

    /// A structural assumption required by a formula does not hold.
    #[error("assumption violated: {0}")]
    Assumption(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code convention used by the CLI: 2 for bad inputs,
    /// 3 for numerical non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_)
            | Error::Shape(_)
            | Error::Normalization(_)
            | Error::Size(_)
            | Error::Assumption(_) => 2,
            Error::Convergence(_) | Error::Quadrature(_) => 3,
        }
    }
}

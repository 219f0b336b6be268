//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by mesh construction, factorizations and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation received an argument outside its domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Special-function evaluation outside the supported domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The matrix handed to the interpolative decomposition is identically zero.
    #[error("zero matrix: interpolative decomposition undefined")]
    ZeroMatrix,

    /// A modal 2x2 interface system is numerically singular (physical resonance).
    #[error("singular mode {mode}: |det| = {det:.3e}")]
    SingularMode { mode: usize, det: f64 },

    /// Boundary data requested on a mesh that does not match the solved geometry.
    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),

    /// A skeleton was built for a different unit-cell layout.
    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),

    /// A proxy surface fails to strictly enclose its cluster or cell.
    #[error("proxy enclosure violated: {0}")]
    Enclosure(String),

    /// Evaluation point too close to (or on the wrong side of) the boundary.
    #[error("evaluation point rejected: {0}")]
    PointRejected(String),

    /// Configuration file or override rejected.
    #[error("config error: {0}")]
    Config(String),

    /// A numerical postcondition failed (non-finite field values, no convergence).
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: config problems exit 2, numerics exit 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) => 2,
            _ => 3,
        }
    }
}

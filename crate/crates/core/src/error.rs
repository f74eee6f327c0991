use thiserror::Error;

/// Errors raised by the library.
///
/// The variants map onto the command-line exit codes: domain and structural
/// problems are input errors, degeneracies and refused moves are reported
/// separately.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A point configuration or coordinate set is degenerate.
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    /// The combinatorial data of a triangulation is inconsistent.
    #[error("structural error: {0}")]
    Structural(String),
    /// A Pachner move cannot be applied to the requested face or edge.
    #[error("move refused: {0}")]
    MoveRefused(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid Laplacian: {0}")]
    InvalidLaplacian(String),

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("agent is not passive: {0}")]
    NotPassive(String),

    #[error("system is not asymptotically stable: {0}")]
    Unstable(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("matrix is not diagonalizable with real spectrum: {0}")]
    NotDiagonalizable(String),

    #[error(
        "inadmissible {what} order {requested}: splits a cluster of equal singular values (admissible: {admissible:?})"
    )]
    InadmissibleOrder { what: &'static str, requested: usize, admissible: Vec<usize> },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

use thiserror::Error;

/// Errors surfaced by the library. Construction-time checks (dimensions,
/// model shape) are separated from runtime failures (solver divergence) so
/// callers can map them to distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("model mismatch: {0}")]
    Model(String),

    #[error("model validation failed: {}", .0.join("; "))]
    InvalidModel(Vec<String>),

    #[error("invalid input: {0}")]
    Input(String),

    #[error(
        "implicit midpoint did not converge after {iterations} iterations \
         (t = {t}, dt = {dt}, last increment = {increment:.3e})"
    )]
    MidpointDiverged {
        iterations: usize,
        t: f64,
        dt: f64,
        increment: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

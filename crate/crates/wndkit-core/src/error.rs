use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid system data: {0}")]
    InvalidSpec(String),
    #[error("entropy Hessian is not symmetric positive definite (smallest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),
    #[error("Hermitian eigenvalue iteration did not converge within {0} sweeps")]
    NoConvergence(usize),
    #[error("matrix is singular or ill-conditioned (condition estimate {0:e})")]
    IllConditioned(f64),
    #[error("states or operators live on different lattices")]
    LatticeMismatch,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid equation of state: {0}")]
    InvalidEos(String),
    #[error("blow-up at t = {time}: coefficient magnitude {magnitude:e} at mode {mode:?}")]
    BlowUp {
        time: f64,
        mode: Vec<i64>,
        magnitude: f64,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

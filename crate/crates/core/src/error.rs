use thiserror::Error;

/// Errors surfaced by the simulation and analysis layers.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("time separation {sep} not inside memory window tau_c = {tau_c}")]
    OutOfWindow { sep: f64, tau_c: f64 },
    #[error("size guard: {0}")]
    Guard(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(
        "fixed point not converged after {iterations} iterations \
         (last spectrum distance {last_distance:.3e}, tol {tol:.3e})"
    )]
    Convergence {
        iterations: usize,
        last_distance: f64,
        tol: f64,
    },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("fit failure: {0}")]
    Fit(String),
    #[error("linear algebra backend: {0}")]
    Linalg(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<ndarray_linalg::error::LinalgError> for CoreError {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        CoreError::Linalg(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;

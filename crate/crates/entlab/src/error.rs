use thiserror::Error;

/// Errors reported by the numerical kernels and propagators.
///
/// Variants are grouped by failure class rather than by module: callers
/// (in particular the CLI) map `Dim*`/`Not*` input rejections and the
/// step/grid preconditions onto distinct process exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("matrix is not Hermitian (max deviation {deviation:.3e}, tolerance {tolerance:.3e})")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("matrix is not unitary (max deviation {deviation:.3e}, tolerance {tolerance:.3e})")]
    NotUnitary { deviation: f64, tolerance: f64 },

    #[error("state is not normalised (norm {norm}, tolerance {tolerance:.3e})")]
    NotNormalised { norm: f64, tolerance: f64 },

    #[error("not a density matrix: {0}")]
    NotDensity(String),

    #[error("Kronecker product would hold {entries} entries (limit {limit})")]
    KronTooLarge { entries: u128, limit: usize },

    #[error("invalid schedule: {0}")]
    BadSchedule(String),

    #[error("time step violates a stability precondition: {0}")]
    StepTooLarge(String),

    #[error("invalid grid: {0}")]
    BadGrid(String),

    #[error("wave packet violates a precondition: {0}")]
    BadPacket(String),

    #[error("scenario precondition violated: {0}")]
    BadScenario(String),

    #[error("linear algebra backend failure: {0}")]
    Backend(String),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Backend(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

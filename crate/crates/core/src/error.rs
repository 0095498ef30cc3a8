//! Crate-wide error type.
//!
//! One enum covers all fallible operations so binaries can map each failure
//! class onto a process exit code without digging through nested sources.

use thiserror::Error;

/// Everything that can go wrong in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A spin string or value was not a positive half-integer.
    #[error(
        "invalid spin {0:?}: expected a positive half-integer such as \"5/2\", \"2.5\" or \"3\""
    )]
    InvalidSpin(String),

    /// A product-space operator would exceed the dimension cap.
    #[error("dimer Hilbert space dimension {dim} exceeds the cap of {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },

    /// `diagonalize` was handed a matrix that is not Hermitian.
    #[error("matrix is not Hermitian: max |H - H^dagger| element is {max_dev:e}")]
    NotHermitian { max_dev: f64 },

    /// A thermodynamic evaluation was requested at T <= 0.
    #[error("temperature must be > 0 K, got {0}")]
    NonPositiveTemperature(f64),

    /// A temperature grid was empty, non-positive, or not strictly increasing.
    #[error("temperature grid must be non-empty, positive, and strictly increasing")]
    InvalidGrid,

    /// Model parameters outside their domain (e.g. rho not in [0, 1]).
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    /// The witness never changes sign on the probed bracket.
    #[error(
        "witness is non-negative over the probed temperature range; no entanglement temperature"
    )]
    NoEntanglementTemperature,

    /// A CSV row could not be parsed.
    #[error("{path}:{line}: malformed row: {reason}")]
    MalformedRow {
        path: String,
        line: usize,
        reason: String,
    },

    /// A CSV row carried a temperature <= 0.
    #[error("{path}:{line}: non-positive temperature {t_k}")]
    NonPositiveTemperatureRow { path: String, line: usize, t_k: f64 },

    /// Two rows share a temperature after sorting.
    #[error("{path}:{line}: duplicate temperature {t_k} K")]
    DuplicateTemperature { path: String, line: usize, t_k: f64 },

    /// The file contained a header but no data rows.
    #[error("{path}: no data rows")]
    EmptyDataset { path: String },

    /// Too few points for the requested number of free parameters.
    #[error(
        "dataset has {points} points; need more than {free} free parameters and at least 4 points"
    )]
    InsufficientData { points: usize, free: usize },

    /// The Gauss-Newton normal matrix is singular: some free parameter has
    /// no independent effect on the model over the supplied data.
    #[error("normal matrix is singular; a free parameter is unidentifiable on this dataset")]
    SingularNormalMatrix,

    /// Underlying I/O failure.
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

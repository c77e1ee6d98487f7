use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate constraint matrix: smallest/largest singular value ratio {ratio:e} below {rcond:e}")]
    DegenerateConstraint { ratio: f64, rcond: f64 },

    #[error("degenerate distribution basis: smallest/largest singular value ratio {ratio:e} below {rcond:e}")]
    DegenerateBasis { ratio: f64, rcond: f64 },

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),

    #[error("kernel matrix is ill-conditioned: Cholesky failed with jitter up to {jitter:e}")]
    IllConditioned { jitter: f64 },

    #[error("hyperparameter optimization failed: {0}")]
    OptimizationFailed(String),

    #[error("integration diverged after t = {last_valid_time}")]
    Divergence { last_valid_time: f64 },

    #[error("insufficient data: requested {requested} samples, only {available} available")]
    InsufficientData { requested: usize, available: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("{context}: {source}")]
    Csv {
        context: String,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    /// True for failures of the numerics rather than of the inputs or files.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateConstraint { .. }
                | Error::DegenerateBasis { .. }
                | Error::IllConditioned { .. }
                | Error::OptimizationFailed(_)
                | Error::Divergence { .. }
        )
    }
}

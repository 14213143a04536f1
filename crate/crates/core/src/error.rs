use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("time step must be positive and finite, got {0}")]
    InvalidTimeStep(f64),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("innovation covariance is not positive definite")]
    SingularInnovation,

    #[error("measurement noise must be positive, got {0}")]
    InvalidNoise(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("timestamps must be strictly increasing (sample {index}: {previous} then {current})")]
    UnorderedTimestamps {
        index: usize,
        previous: f64,
        current: f64,
    },

    #[error("initial alignment failed: accel gate rejected {rejected} of {total} samples")]
    Alignment { rejected: usize, total: usize },

    #[error("sequences must be non-empty and of equal length (got {0} and {1})")]
    LengthMismatch(usize, usize),

    #[error("{0}")]
    Domain(String),

    #[error("sample {index}: {source}")]
    AtSample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {message}")]
    Parse { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn at_sample(self, index: usize) -> Self {
        Error::AtSample {
            index,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

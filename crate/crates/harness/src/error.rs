use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad configuration or arguments; nothing was written.
    #[error("invalid configuration: {0}")]
    Validation(String),
    /// A module refused the inputs on numerical grounds.
    #[error("numerical conditioning: {0}")]
    Conditioning(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Validation(_) => 2,
            Error::Conditioning(_) => 3,
            Error::Io(_) | Error::Json(_) | Error::Csv(_) => 1,
        }
    }
}

impl From<meanforce_core::Error> for Error {
    fn from(e: meanforce_core::Error) -> Self {
        use meanforce_core::Error as E;
        match e {
            E::DimensionMismatch { .. } | E::InvalidLayout(_) | E::InvalidArgument(_) | E::DimensionBudget(..) => {
                Error::Validation(e.to_string())
            }
            E::NotHermitian(_) | E::InvalidDensity(_) => Error::Validation(e.to_string()),
            E::NonFinite(_)
            | E::IllConditioned { .. }
            | E::NotPositiveDefinite(_)
            | E::QuadratureNonConvergence(_)
            | E::SingularMap { .. } => Error::Conditioning(e.to_string()),
        }
    }
}

impl From<meanforce_classical::Error> for Error {
    fn from(e: meanforce_classical::Error) -> Self {
        use meanforce_classical::Error as E;
        match e {
            E::InvalidArgument(_) | E::Unsupported(_) | E::GridMismatch(_) => Error::Validation(e.to_string()),
            E::Core(inner) => inner.into(),
            E::Csv(inner) => Error::Csv(inner),
            E::Io(inner) => Error::Io(inner),
            E::NonFinite(_) | E::Unstable(_) | E::Acceptance { .. } | E::Coverage { .. } | E::Resolution { .. } => {
                Error::Conditioning(e.to_string())
            }
        }
    }
}

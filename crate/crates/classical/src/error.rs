use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("unstable system: {0}")]
    Unstable(String),
    #[error("chain {chain}: acceptance rate {rate:.3} outside [0.1, 0.9] after tuning; set the proposal step explicitly")]
    Acceptance { chain: usize, rate: f64 },
    #[error("grid covers only {inside_fraction:.4} of the samples (need at least 0.99)")]
    Coverage { inside_fraction: f64 },
    #[error("{empty} of {interior} interior bins are empty (limit 20%); coarsen the grid or add samples")]
    Resolution { empty: usize, interior: usize },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error(transparent)]
    Core(#[from] meanforce_core::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

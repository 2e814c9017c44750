use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpbError {
    #[error("parameter `{name}` out of range: {value}")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("non-informative point at phi = {phi}")]
    NonInformative { phi: f64 },
    #[error("grid too coarse: Nyquist wavenumber {nyquist:.4e} below inner-scale wavenumber {km:.4e}")]
    GridTooCoarse { nyquist: f64, km: f64 },
    #[error("extent too small: {0:.3e} of the mode energy falls outside the grid")]
    ExtentTooSmall(f64),
    #[error("rank-deficient design matrix")]
    RankDeficient,
    #[error("inconsistent input: {0}")]
    Inconsistent(String),
    #[error("iteration diverged: MSE {mse:.4e} exceeds ten times the initial {initial:.4e}")]
    Diverged { mse: f64, initial: f64 },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("ensemble too small: {found} frames, need at least {required}")]
    EnsembleTooSmall { found: usize, required: usize },
}

pub type Result<T> = std::result::Result<T, QpbError>;

pub(crate) fn check_range(name: &'static str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(())
    } else {
        Err(QpbError::OutOfRange { name, value })
    }
}

use thiserror::Error;

/// Errors produced anywhere in the estimation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("degenerate posterior: {0}")]
    DegeneratePosterior(String),

    #[error("singular Fisher information: {0}")]
    SingularInformation(String),

    #[error("invalid bounds: {0}")]
    InvalidBounds(String),

    #[error("bin width too coarse: 1/(2hG) = {ratio} < 1 (h = {h}, G = {g})")]
    BinWidthTooCoarse { h: f64, g: f64, ratio: f64 },

    #[error("every bin is at or below its collapsing threshold")]
    AllCollapsed,

    #[error("degenerate sample: every gap between sorted values is zero")]
    DegenerateSample,

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    /// True for failures caused by numerically degenerate inputs rather than
    /// malformed requests.
    pub fn is_numeric_degeneracy(&self) -> bool {
        matches!(
            self,
            Error::DegeneratePosterior(_)
                | Error::SingularInformation(_)
                | Error::DegenerateSample
                | Error::AllCollapsed
                | Error::BinWidthTooCoarse { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

pub(crate) fn probability_open(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(invalid(format!("{name} must lie in (0, 1), got {v}")))
    }
}

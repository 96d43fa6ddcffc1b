use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("exceptional parameter: |gamma/2| = |t1| = {t1}")]
    ExceptionalParameter { t1: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("eigenvector matrix is numerically defective (condition estimate {condition:.3e})")]
    DefectiveMatrix { condition: f64 },

    #[error("eigensolver did not converge")]
    NoConvergence,

    #[error("numerical overflow in {0}")]
    NumericalOverflow(&'static str),

    #[error("density frame has no positive finite maximum")]
    DegenerateDensity,

    #[error("half-maximum crossing lies outside the domain")]
    WidthUnavailable,

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("frame {index}: {source}")]
    Frame {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn at_frame(self, index: usize) -> Self {
        Error::Frame {
            index,
            source: Box::new(self),
        }
    }
}

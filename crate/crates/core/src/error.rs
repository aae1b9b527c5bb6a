use thiserror::Error;

use crate::rules::HypothesisReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("net-profit condition violated: intensity {intensity} with claim mean {mean} against premium rate {premium}")]
    NetProfitViolation {
        intensity: f64,
        mean: f64,
        premium: f64,
    },

    #[error("no adjustment coefficient: {0}")]
    NoRoot(String),

    #[error("quadrature did not reach tolerance: estimated error {error:e} after {subdivisions} subdivisions")]
    QuadratureFailure { error: f64, subdivisions: usize },

    #[error("degenerate denominator in Cramér constant: {0}")]
    DegenerateDenominator(String),

    #[error("hypothesis violation: {0}")]
    HypothesisViolation(HypothesisReport),

    #[error("numeric derivative unstable: {0}")]
    DerivativeUnstable(String),

    #[error("stratification refinement proxy {proxy:e} exceeds tolerance {tolerance:e}")]
    Stratification { proxy: f64, tolerance: f64 },

    #[error("tilted sampler acceptance rate {rate:.4} below floor {floor}")]
    AcceptanceRate { rate: f64, floor: f64 },

    /// A computed quantity fell outside its admissible range.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the command-line harness.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) => 2,
            Error::HypothesisViolation(_) | Error::NetProfitViolation { .. } => 3,
            Error::NoRoot(_)
            | Error::QuadratureFailure { .. }
            | Error::DegenerateDenominator(_)
            | Error::DerivativeUnstable(_)
            | Error::Stratification { .. }
            | Error::AcceptanceRate { .. }
            | Error::Numeric(_) => 4,
            Error::Io(_) => 1,
        }
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

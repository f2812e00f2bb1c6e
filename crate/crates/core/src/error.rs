use thiserror::Error;

/// Failures of the log-domain quadrature engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("quadrature did not converge: achieved relative error {achieved_rel_err:.3e}")]
    NonConvergence { achieved_rel_err: f64 },
    #[error("invalid integration domain [{lower}, {upper}]")]
    InvalidDomain { lower: f64, upper: f64 },
    #[error("integrand evaluated to NaN at r = {at}")]
    NonFiniteIntegrand { at: f64 },
    #[error("integrand does not decay on the semi-infinite domain starting at {lower}")]
    NoDecay { lower: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degenerate fitting grid: {0}")]
    DegenerateGrid(String),
    #[error("perimeter bracket inverted at epsilon = {epsilon}: lower {lower_log} > upper {upper_log} (log scale)")]
    BracketInverted {
        epsilon: f64,
        lower_log: f64,
        upper_log: f64,
    },
    #[error("quantile solver did not converge for r = {r}, log t = {log_t}")]
    QuantileNonConvergence { r: f64, log_t: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported group: {0}")]
    UnsupportedGroup(String),
}

impl Error {
    /// True for failures caused by the numerics rather than by the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Quadrature(_) | Error::BracketInverted { .. } | Error::QuantileNonConvergence { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

/// Errors produced by the pricing library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("time {0} is outside the curve domain")]
    Domain(f64),

    #[error("arithmetic error: {0}")]
    Arithmetic(String),

    #[error("negative density {density:.3e} at rate {strike:.6}: butterfly arbitrage in the smile")]
    Arbitrage { strike: f64, density: f64 },

    #[error("invalid marginal: {0}")]
    InvalidMarginal(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("implied volatility inversion failed: price {price:.6e} {bound}")]
    Inversion { price: f64, bound: String },

    #[error("drift recursion has no root in [-1, 1] for period {period}")]
    Calibration { period: usize },

    #[error("covariance system is ill-conditioned (determinant {det:.3e}, scale {scale:.3e})")]
    Conditioning { det: f64, scale: f64 },

    #[error("root finding failed: {0}")]
    RootFinding(String),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to bad inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Arithmetic(_)
                | Error::Inversion { .. }
                | Error::Calibration { .. }
                | Error::Conditioning { .. }
                | Error::RootFinding(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

pub(crate) fn ensure_finite(value: f64, name: &str) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite, got {value}")))
    }
}

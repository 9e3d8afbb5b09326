use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("precondition {0} violated")]
    Precondition(&'static str),

    #[error(
        "no extinction case applies: sigma^2 = {sigma_sq} lies in (beta/N, beta^2/(2(mu+gamma))]"
    )]
    NoExtinctionCase { sigma_sq: f64 },

    #[error("bisection stalled after {iterations} iterations with residual {residual:e}")]
    RootNotConverged { iterations: usize, residual: f64 },

    #[error("non-finite input to {0}")]
    NonFinite(&'static str),

    #[error("level {level} does not divide a grid of {fine_steps} fine steps")]
    LevelMismatch { level: u32, fine_steps: usize },

    #[error("truncation level log N - alpha*h^theta is not representable below log N (alpha*h^theta = {0:e})")]
    UnrepresentableTruncation(f64),

    #[error("{0}")]
    Fit(&'static str),

    #[error("malformed path dump: {0}")]
    Dump(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("must be finite and > 0, got {value}"),
        })
    }
}

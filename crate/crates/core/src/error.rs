use thiserror::Error;

use crate::quantum::MeasurementSetting;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("target ket is not normalized (norm² = {0})")]
    UnnormalizedKet(f64),

    #[error("matrix is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("count table is missing setting {0}")]
    MissingSetting(MeasurementSetting),

    #[error("setting {0} has no recorded coincidences")]
    EmptySetting(MeasurementSetting),

    #[error("fit rejected: {0}")]
    FitRejected(String),

    #[error(
        "optimizer did not converge after {iterations} iterations \
         (best log-likelihood {best_log_likelihood:.6}, last improvement {last_improvement:.3e})"
    )]
    NonConvergence {
        iterations: usize,
        best_log_likelihood: f64,
        last_improvement: f64,
        best_rho: Box<crate::quantum::TwoQubitState>,
    },

    #[error("malformed count table: {0}")]
    Format(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("{value} is outside [0, 1]"),
        })
    }
}

pub(crate) fn check_non_negative(name: &'static str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("{value} must be finite and non-negative"),
        })
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!("{value} must be finite and positive"),
        })
    }
}

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("truncation leakage {leakage:.3e} exceeds tolerance {tolerance:.1e}")]
    Truncation { leakage: f64, tolerance: f64 },
    #[error("zero-probability branch (norm {0:.3e})")]
    ZeroProbability(f64),
    #[error("effective squeezing undefined: |Tr D(u) rho| = {0:.3e}")]
    UndefinedMetric(f64),
    #[error("numerical inconsistency: {0}")]
    NumericalConsistency(String),
    #[error("degenerate noise channel: epsilon = {0}")]
    DegenerateChannel(f64),
    #[error("angle schedule overflow: theta[{index}] = {theta:.3} deg")]
    ScheduleOverflow { index: usize, theta: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite")))
    }
}

use thiserror::Error;

use crate::linalg::LinalgError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),

    #[error("grid has {found} points but at least {required} are needed")]
    TooFewPoints { required: usize, found: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("boundary data mismatch: {0}")]
    Boundary(String),

    #[error("vector length {found} does not match system size {expected}")]
    Length { expected: usize, found: usize },

    #[error("time step must be positive and finite, got {0}")]
    InvalidTimeStep(f64),

    #[error("final time {t_final} is not an integer multiple of the step {k}")]
    StepCount { t_final: f64, k: f64 },

    #[error("workspace was prepared for k = {prepared}, not k = {requested}")]
    StaleWorkspace { prepared: f64, requested: f64 },

    #[error("non-finite state in step {step} (towards t = {time}); max |U| before the step was {max_abs:e}")]
    Unstable { step: usize, time: f64, max_abs: f64 },

    #[error("argument {0} is too close to a pole of the rational propagator")]
    PoleProximity(String),
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Length { expected, found })
    }
}

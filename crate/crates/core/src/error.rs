use std::io;

use thiserror::Error;

/// Errors raised by the numerical kernels, the forward solver and the locators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("coefficient fit residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    FitResidual { residual: f64, tolerance: f64 },

    #[error("mesh generation failed: {0}")]
    Mesh(String),

    #[error("linear solver failed: {0}")]
    Solver(String),

    #[error("time grid mismatch: {0}")]
    GridMismatch(String),

    #[error("no sign change of the probe on segment {segment}: f(start) = {start:.3e}, f(end) = {end:.3e}")]
    NoSignChange { segment: usize, start: f64, end: f64 },

    #[error("probe axes are parallel")]
    ParallelAxes,

    #[error("requested {requested} peaks but only {found} local maxima were found")]
    NotEnoughPeaks { requested: usize, found: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

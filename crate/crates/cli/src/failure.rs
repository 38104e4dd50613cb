use std::fmt;

use subdiff_core::Error;

/// Failure class, mapped to the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Config,
    Solver,
    Reconstruction,
}

impl Kind {
    pub fn exit_code(self) -> i32 {
        match self {
            Kind::Config => 2,
            Kind::Solver => 3,
            Kind::Reconstruction => 4,
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub stage: String,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self { kind: Kind::Config, stage: "config".into(), message: message.into() }
    }

    pub fn io(stage: &str, err: std::io::Error) -> Self {
        Self { kind: Kind::Solver, stage: stage.into(), message: err.to_string() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} failed: {}", self.stage, self.message)
    }
}

impl std::error::Error for Failure {}

/// Attaches the failing stage to a core error and classifies it.
pub trait Stage<T> {
    fn stage(self, stage: &str) -> Result<T, Failure>;
}

impl<T> Stage<T> for Result<T, Error> {
    fn stage(self, stage: &str) -> Result<T, Failure> {
        self.map_err(|e| {
            let kind = match e {
                Error::NoSignChange { .. } | Error::ParallelAxes | Error::NotEnoughPeaks { .. } => Kind::Reconstruction,
                _ => Kind::Solver,
            };
            Failure { kind, stage: stage.into(), message: e.to_string() }
        })
    }
}

impl<T> Stage<T> for std::io::Result<T> {
    fn stage(self, stage: &str) -> Result<T, Failure> {
        self.map_err(|e| Failure::io(stage, e))
    }
}

impl<T> Stage<T> for csv::Result<T> {
    fn stage(self, stage: &str) -> Result<T, Failure> {
        self.map_err(|e| Failure { kind: Kind::Solver, stage: stage.into(), message: e.to_string() })
    }
}

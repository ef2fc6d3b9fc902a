use thiserror::Error;

/// Coarse failure class, used by front ends to map errors onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Solver,
    Construction,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: expected n={expected}, got n={got}")]
    GridMismatch { expected: usize, got: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("source mean {0:e} is not zero")]
    NonZeroMean(f64),
    #[error("weight {0} is nowhere positive")]
    WeightNotPositive(usize),
    #[error("state is not admissible: {0}")]
    Inadmissible(String),
    #[error("initial state is not admissible: {0}")]
    InadmissibleInit(String),
    #[error("line search stalled at step {step:e} after {iters} iterations")]
    LineSearchStall { step: f64, iters: usize },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("poles {0} and {1} are closer than two grid cells")]
    PoleCoincidence(usize, usize),
    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),
    #[error("iteration did not converge: {0}")]
    NonConvergence(String),
    #[error("weighted exponential integral lost positivity: {0}")]
    AdmissibilityLoss(String),
    #[error("least-squares fit is ill conditioned (condition number {0:e})")]
    IllConditionedFit(f64),
    #[error("positive set of the weight is empty")]
    EmptyPositiveSet,
    #[error("gluing mismatch {jump:e} exceeds tolerance {tol:e}")]
    GluingMismatch { jump: f64, tol: f64 },
    #[error("radii must satisfy 0 < r_in < r_out, got ({0}, {1})")]
    BadRadii(f64, f64),
    #[error("unknown {kind} '{name}'")]
    UnknownStrategy { kind: &'static str, name: String },
    #[error("io: {0}")]
    Io(String),
    #[error("format: {0}")]
    Format(String),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InadmissibleInit(_)
            | Error::LineSearchStall { .. }
            | Error::Inadmissible(_)
            | Error::TooFewSamples { .. } => ErrorClass::Solver,
            Error::PoleCoincidence(..)
            | Error::InsufficientResolution(_)
            | Error::NonConvergence(_)
            | Error::AdmissibilityLoss(_)
            | Error::IllConditionedFit(_)
            | Error::EmptyPositiveSet
            | Error::GluingMismatch { .. } => ErrorClass::Construction,
            _ => ErrorClass::Input,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

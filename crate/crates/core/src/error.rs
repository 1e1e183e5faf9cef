use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degree distribution is empty")]
    EmptyDistribution,
    #[error("negative fraction {fraction} for degree {degree}")]
    NegativeFraction { degree: u32, fraction: f64 },
    #[error("fractions sum to {sum}, deviation exceeds {tolerance}")]
    SumNotOne { sum: f64, tolerance: f64 },
    #[error("degree 0 is not allowed")]
    ZeroDegree,
    #[error("check-node distribution has a degree-1 entry")]
    DegreeOneCheck,
    #[error("expected a {expected} distribution")]
    SideMismatch { expected: &'static str },
    #[error("design rate {0} is outside (0, 1)")]
    RateOutOfRange(f64),
    #[error("argument {0} is outside [0, 1]")]
    DomainError(f64),

    #[error("no distribution satisfies the convergence constraints at this slack")]
    Infeasible,
    #[error("optimizer stalled without an improving feasible point")]
    Stalled,
    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(String),

    #[error("cannot balance sockets: {0}")]
    DegreeAssignmentOverflow(String),
    #[error("tau {tau} outside [0, {n}]")]
    TauOutOfRange { tau: usize, n: usize },
    #[error("no expurgated graph found within {budget} resamples")]
    ExpurgationBudgetExceeded { budget: usize },

    #[error("observation is inconsistent with the code: {0}")]
    ObservationInconsistent(String),
    #[error("malformed observation: {0}")]
    MalformedObservation(String),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("parity-check corank {corank} is smaller than the {info} information bits")]
    RankDeficient { corank: usize, info: usize },

    #[error("duplicate seed stream label {0:?}")]
    DuplicateLabel(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

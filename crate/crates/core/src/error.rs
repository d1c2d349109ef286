use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("inadmissible parameters: {0}")]
    InadmissibleParams(String),
    #[error("grid too small: N = {0}, need N >= 3")]
    DimensionTooSmall(usize),
    #[error("requested {requested} longitudinal modes but the grid supports at most {max}")]
    TooManyModes { requested: usize, max: usize },
    #[error("dimension mismatch: expected length {expected}, got {got} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("degenerate stretch at interval {index}: |stretch| = {value:e}")]
    DegenerateStretch { index: usize, value: f64 },
    #[error("update matrix is not positive definite ({0})")]
    SingularUpdate(&'static str),
    #[error("linear solve failed: {0}")]
    SolveFailure(String),
    #[error("non-finite state at step {step}")]
    NonFiniteState { step: u64 },
    #[error("contact point must be strictly inside the grid (node {node} of {n})")]
    ContactAtBoundary { node: isize, n: usize },
    #[error("theta_u = {0} is out of range (must exceed 1/2)")]
    ThetaOutOfRange(f64),
    #[error("theta_v = {0} violates 2(1 - theta_v) rho A + T0 > 0")]
    ThetaVOutOfRange(f64),
    #[error("unstable configuration: {0}")]
    UnstableConfiguration(String),
    #[error("minimisation bracket failed: {0}")]
    BracketFailure(String),
    #[error("initial energy is zero; relative energy error undefined")]
    ZeroInitialEnergy,
    #[error("elliptic parameter {0} out of range [0, 1)")]
    ParameterOutOfRange(f64),
    #[error("convergence study needs even N, got {0}")]
    OddN(usize),
    #[error("{0}")]
    Convergence(String),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: unknown key `{key}` in section [{section}]")]
    UnknownKey {
        path: String,
        line: usize,
        section: String,
        key: String,
    },
    #[error("missing key `{0}`")]
    MissingKey(String),
    #[error("{path}:{line}: bad unit for `{key}`: {message}")]
    UnitError {
        path: String,
        line: usize,
        key: String,
        message: String,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("wav encoding failed: {0}")]
    Wav(#[from] hound::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("contraction mismatch: axis {axis_a} of a has extent {extent_a}, axis {axis_b} of b has extent {extent_b}")]
    Contract {
        axis_a: usize,
        axis_b: usize,
        extent_a: usize,
        extent_b: usize,
    },
    #[error("invalid axis specification: {0}")]
    Axes(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("krylov propagator did not converge within {dim} vectors (residual {residual:e}); reduce the time step or raise the subspace size")]
    KrylovNotConverged { dim: usize, residual: f64 },
    #[error("linear algebra failure: {0}")]
    LinAlg(String),
    #[error("invalid state: {0}")]
    State(String),
    #[error("refusing dense conversion of dimension {dim} (limit {limit})")]
    TooLarge { dim: usize, limit: usize },
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("MPO block chain breaks at bond {bond}: {detail}")]
    BlockChain { bond: usize, detail: String },
    #[error("bond dimension mismatch at bond {bond}: have {have}, expected {expected}; call enlarge_bonds before one-site TDVP")]
    BondMismatch {
        bond: usize,
        have: usize,
        expected: usize,
    },
    #[error("unstable recurrence at index {index}: {detail}")]
    Unstable { index: usize, detail: String },
    #[error("observable error: {0}")]
    Observable(String),
    #[error("parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

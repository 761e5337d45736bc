use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{a} is not coprime to {n}")]
    NotCoprime { a: u64, n: u64 },
    #[error("{0} is not an odd square-free semiprime")]
    NotSemiprime(u64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no odd square-free semiprime has {0} bits")]
    NoSemiprimes(u32),
    #[error("qubit {qubit} out of range for width {width}")]
    QubitOutOfRange { qubit: usize, width: usize },
    #[error("gate targets must be distinct, got {0:?}")]
    DuplicateTargets(Vec<usize>),
    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),
    #[error("circuit width {width} exceeds the dense limit of {limit} qubits")]
    TooWide { width: usize, limit: usize },
    #[error("truncation discarded every Schmidt coefficient")]
    EmptyTruncation,
    #[error("matrix decomposition failed: {0}")]
    Decomposition(String),
    #[error("wall-clock budget exhausted")]
    Timeout,
    #[error("circuit text parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("pre-selected base {a} for {n} was rejected: {reason}")]
    PreselectionBreach { a: u64, n: u64, reason: String },
    #[error("record io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

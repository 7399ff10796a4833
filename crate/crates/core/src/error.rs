use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("candidate id {id} out of range for {num_candidates} candidates")]
    CandidateOutOfRange { id: usize, num_candidates: usize },

    #[error("committee size {k} out of range [1, {num_candidates}]")]
    CommitteeSizeOutOfRange { k: usize, num_candidates: usize },

    #[error("election needs at least one voter and one candidate")]
    EmptyElection,

    #[error("parameter t = {t} out of range [1, {k}]")]
    TOutOfRange { t: usize, k: usize },

    #[error("candidate sets differ in size ({left} vs {right})")]
    SizeMismatch { left: usize, right: usize },

    #[error("enumeration of {requested} items exceeds cap {cap}")]
    CapExceeded { requested: String, cap: u64 },

    #[error("required set of {required} candidates does not fit in a committee of size {k}")]
    RequiredTooLarge { required: usize, k: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("draw cap of {cap} committees exceeded after {accepted} acceptances")]
    DrawCapExceeded { cap: u64, accepted: u64 },

    #[error("time limit reached")]
    Timeout,

    #[error("parse error (line {line}): {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported vote type `{0}`")]
    UnsupportedVoteType(String),

    #[error("solver backend: {0}")]
    Solver(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

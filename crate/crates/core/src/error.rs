use thiserror::Error;

/// Errors produced anywhere in the workbench.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spin count {0}: must lie in 2..={max}", max = crate::quantum::MAX_SPINS)]
    SpinCount(usize),

    #[error("spin index {index} out of range for {n_spins} spins")]
    IndexOutOfRange { index: usize, n_spins: usize },

    #[error("self coupling on spin {0}")]
    SelfCoupling(usize),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown sequence '{0}'")]
    UnknownSequence(String),

    #[error("sequence file parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

impl Error {
    /// Process exit code used by the command-line driver: 2 for bad input, 3 for numerical trouble.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Linalg(_) | Error::Numerical(_) | Error::NotUnitary(_) | Error::NotHermitian(_) => 3,
            _ => 2,
        }
    }

    /// Short stable tag used in machine-parsable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::SpinCount(_) => "spin_count",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::SelfCoupling(_) => "self_coupling",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NotHermitian(_) => "not_hermitian",
            Error::NotUnitary(_) => "not_unitary",
            Error::Linalg(_) => "linalg",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::UnknownSequence(_) => "unknown_sequence",
            Error::Parse { .. } => "parse",
            Error::Precondition(_) => "precondition",
            Error::Config(_) => "config",
            Error::Numerical(_) => "numerical",
            Error::Checkpoint(_) => "checkpoint",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

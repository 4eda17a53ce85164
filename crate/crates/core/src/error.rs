use thiserror::Error;

/// Errors produced by this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("number of variables {k} out of range (1..={max})")]
    VariableCount { k: usize, max: usize },

    #[error("expected {expected} cells for k = {k}, got {got}")]
    CellCount { k: usize, expected: usize, got: usize },

    #[error("cell index {index} out of range for k = {k}")]
    CellIndex { index: usize, k: usize },

    #[error("total count is zero")]
    ZeroTotal,

    #[error("zero cell {cell}")]
    ZeroCell { cell: String },

    #[error("cell {cell} has non-positive or non-finite probability {value}")]
    NonPositive { cell: String, value: f64 },

    #[error("probabilities sum to {sum}, not 1")]
    NotNormalized { sum: f64 },

    #[error("negative or non-finite weight {value} at cell {cell}")]
    InvalidWeight { cell: String, value: f64 },

    #[error("variable {var} out of range for k = {k}")]
    VariableIndex { var: usize, k: usize },

    #[error("duplicate variable {var}")]
    DuplicateVariable { var: usize },

    #[error("variable sets overlap")]
    Overlap,

    #[error("malformed conditioning cell: {0}")]
    Conditioning(String),

    #[error("invalid hypergraph: {0}")]
    Hypergraph(String),

    #[error("hypergraph is not decomposable; the product formula needs hyperedge parameters that are variation independent")]
    NotDecomposable,

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("zero count at cell {cell} on the support of the contrast")]
    ZeroOnSupport { cell: String },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("missing column `{0}` in CSV header")]
    MissingColumn(String),

    #[error("incomplete grid: unit {unit} period {period}")]
    IncompleteGrid { unit: String, period: String },

    #[error("duplicate cell: unit {unit} period {period}")]
    DuplicateCell { unit: String, period: String },

    #[error("non-binary treatment value `{value}` for unit {unit} period {period}")]
    NonBinaryTreatment {
        unit: String,
        period: String,
        value: String,
    },

    #[error("non-numeric {column} value `{value}` for unit {unit} period {period}")]
    NonNumeric {
        column: String,
        unit: String,
        period: String,
        value: String,
    },

    #[error("invalid treatment spec: {0}")]
    InvalidTreatmentSpec(String),

    #[error("invalid panel: {0}")]
    InvalidPanel(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("no treated cells in panel")]
    NoTreatedCells,

    #[error("degenerate chain: {0}")]
    DegenerateChain(String),

    #[error("non-finite value in {what} at iteration {iteration}")]
    NonFinite { what: String, iteration: usize },

    #[error("empty sample set")]
    EmptySamples,

    #[error("credible level must lie strictly in (0,1), got {0}")]
    InvalidLevel(f64),

    #[error("posterior draws are missing {0}; enable retention in the sampler config")]
    DrawsNotRetained(String),

    #[error("benchmark methods must include the normalizer `{0}`")]
    MissingNormalizer(String),

    #[error("unknown method `{name}`; available: {available}")]
    UnknownMethod { name: String, available: String },

    #[error("{0}")]
    Estimation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

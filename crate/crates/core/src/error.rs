use thiserror::Error;

/// Errors produced anywhere in the recovery pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("row {row} has {nnz} non-zeros, more than the {h} columns available")]
    RowTooFull { row: usize, nnz: usize, h: usize },

    #[error("index {index} out of range (limit {limit})")]
    OutOfRange { index: u64, limit: u64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("code search exhausted for {msg_bits} message bits at relative distance {rel_dist}")]
    CodeSearchExhausted { msg_bits: u32, rel_dist: f64 },

    #[error("measurement count {m} exceeds the configured cap {cap}")]
    TooManyMeasurements { m: usize, cap: usize },

    #[error("sketch digest {found:016x} does not match spec digest {expected:016x}")]
    DigestMismatch { expected: u64, found: u64 },

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("oracle guard: {0}")]
    OracleGuard(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid series '{name}': {reason}")]
    InvalidSeries { name: String, reason: String },

    #[error("csv parse error at data row {row}: {reason}")]
    CsvRow { row: usize, reason: String },

    #[error("duplicate timestamp {timestamp_ms} ms in series '{series}' (data row {row})")]
    DuplicateTimestamp {
        series: String,
        timestamp_ms: i64,
        row: usize,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("column '{0}' not found in header")]
    MissingColumn(String),

    #[error("series spans do not overlap: '{latest_start}' starts after '{earliest_end}' ends")]
    DisjointSpans {
        latest_start: String,
        earliest_end: String,
    },

    #[error("series '{series}' too short: {len} usable points, need at least {need}")]
    SeriesTooShort {
        series: String,
        len: usize,
        need: usize,
    },

    #[error("column {column} is entirely missing; cannot interpolate")]
    AllMissing { column: usize },

    #[error("degenerate resampling window for series '{series}' at grid row {row}")]
    DegenerateWindow { series: String, row: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph parse error at line {line}: {reason}")]
    GraphParse { line: usize, reason: String },

    #[error("node sets differ: only in truth {only_truth:?}, only in inferred {only_inferred:?}")]
    NodeSetMismatch {
        only_truth: Vec<String>,
        only_inferred: Vec<String>,
    },

    #[error("insufficient samples: n = {n}, need more than {need}")]
    InsufficientSamples { n: usize, need: usize },

    #[error("rank-deficient design: dependent column(s) {columns:?}")]
    RankDeficient { columns: Vec<usize> },

    #[error("coordinate descent did not converge after {sweeps} sweeps (max change {max_change:.3e})")]
    NonConvergence {
        sweeps: usize,
        max_change: f64,
        /// Last iterate, in original (unstandardized) coefficient scale.
        last_coefficients: Vec<f64>,
    },

    #[error("matrix has no varying column; cannot standardize")]
    ZeroVariance,

    #[error("constant input vector")]
    ConstantInput,

    #[error("model is non-stationary: companion spectral radius {rho:.4} >= 1")]
    NonStationary { rho: f64 },

    #[error("invalid simulation spec: {0}")]
    InvalidSimSpec(String),

    #[error("method '{method}' failed: {source}")]
    Method {
        method: String,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Wraps an error with the discovery method that produced it.
    pub fn for_method(self, method: &str) -> Error {
        Error::Method {
            method: method.to_string(),
            source: Box::new(self),
        }
    }
}

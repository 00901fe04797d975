use std::path::PathBuf;

use crate::series::TradingDate;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used for process exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: non-positive value {value} on {date} in series '{series}'")]
    NonPositive {
        series: String,
        date: TradingDate,
        value: f64,
    },

    #[error("non-finite value on {date} in series '{series}'")]
    NonFinite { series: String, date: TradingDate },

    #[error("dates must be strictly increasing in series '{series}' (at {date})")]
    Unordered { series: String, date: TradingDate },

    #[error("insufficient data: {what} needs at least {needed} observations, got {got}")]
    InsufficientData {
        what: String,
        needed: usize,
        got: usize,
    },

    #[error("duplicate column name '{0}'")]
    DuplicateName(String),

    #[error("column '{0}' has zero variance")]
    DegenerateColumn(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("singular design matrix: columns {columns:?} are linearly dependent on the others")]
    SingularDesign { columns: Vec<String> },

    #[error("length mismatch: {what} (expected {expected}, got {got})")]
    LengthMismatch {
        what: String,
        expected: usize,
        got: usize,
    },

    #[error("join produced 0 rows: {0}")]
    EmptyJoin(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("fetch failed for {url}: {message}{}", status.map(|s| format!(" (HTTP {s})")).unwrap_or_default())]
    Fetch {
        url: String,
        status: Option<u16>,
        message: String,
    },

    #[error("malformed payload: {message}; record: {record}")]
    Payload { message: String, record: String },

    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("{path}: {count} rejected row(s): {}", lines.iter().map(|(l, m)| format!("line {l}: {m}")).collect::<Vec<_>>().join("; "))]
    RejectedRows {
        path: PathBuf,
        count: usize,
        lines: Vec<(u64, String)>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("identity check failed: {0}")]
    Identity(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::InsufficientData { .. }
            | Error::DegenerateColumn(_)
            | Error::Degenerate(_)
            | Error::SingularDesign { .. }
            | Error::Identity(_) => ErrorKind::Numerical,
            Error::Stage { source, .. } => source.kind(),
            _ => ErrorKind::Data,
        }
    }
}

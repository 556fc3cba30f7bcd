use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("ingestion error at row {row}, column '{column}': {message}")]
    Ingest {
        row: usize,
        column: String,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("class column '{column}': {message}")]
    ClassLabels { column: String, message: String },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("degenerate contingency table: {0}")]
    DegenerateTable(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("rule file line {line}: {message}")]
    RuleParse { line: usize, message: String },

    #[error("empty ensemble: {0}")]
    EmptyEnsemble(String),

    #[error("repetition {rep}: {source}")]
    Repetition {
        rep: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}

use thiserror::Error;

/// Everything the front end can fail with, grouped by exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{kind} error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, kind: &'static str, message: String },
    #[error("unresolved reference: {0}")]
    UnresolvedRef(String),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("compose error: {0}")]
    Compose(#[source] twoport_ss::Error),
    #[error("analysis error: {0}")]
    Analysis(#[source] twoport_ss::Error),
    #[error("invalid option: {0}")]
    Option(String),
    #[error("cannot write output: {0}")]
    Write(#[from] std::io::Error),
}

impl CliError {
    /// 1 for document problems, 2 for model construction, 3 for analysis
    /// and output.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::UnresolvedRef(_) | CliError::Schema(_) | CliError::Read { .. } => 1,
            CliError::Compose(_) => 2,
            CliError::Analysis(_) | CliError::Option(_) | CliError::Write(_) => 3,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Write(std::io::Error::other(e))
    }
}

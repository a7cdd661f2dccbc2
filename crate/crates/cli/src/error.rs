use std::path::PathBuf;

use learnability::Error as CoreError;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("malformed config at line {line}, column {column}: {message}")]
    ConfigSyntax { line: usize, column: usize, message: String },

    #[error("cannot parse row {row}, column {col} (`{column_name}`): {message}")]
    Parse { row: usize, col: usize, column_name: String, message: String },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("row {row} has {found} cells but the header has {expected}")]
    InconsistentWidth { row: usize, expected: usize, found: usize },

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Config { field: field.into(), message: message.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// 2 for configuration problems, 3 for data problems, 4 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } | Self::ConfigSyntax { .. } => 2,
            Self::Parse { .. } | Self::MissingColumn(_) | Self::InconsistentWidth { .. } | Self::Io { .. } => 3,
            Self::Core(e) => match e {
                CoreError::InvalidParameter(_) => 2,
                CoreError::NumericalFailure(_)
                | CoreError::QuadratureFailure { .. }
                | CoreError::NotPositiveDefinite { .. } => 4,
                _ => 3,
            },
        }
    }
}

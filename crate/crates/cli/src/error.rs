use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("malformed value for `{key}`: {reason}")]
    Malformed { key: String, reason: String },
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("unknown preset `{name}` (available: {available})")]
    UnknownPreset { name: String, available: String },
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("reference cache {path}: {reason}")]
    Cache { path: PathBuf, reason: String },
    #[error("{context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: lodll_core::Error,
    },
}

impl CliError {
    pub fn category(&self) -> &'static str {
        match self {
            CliError::UnknownKey(_)
            | CliError::Malformed { .. }
            | CliError::MissingKey(_)
            | CliError::Invalid { .. }
            | CliError::UnknownPreset { .. } => "config",
            CliError::Io { .. } => "io",
            CliError::Cache { .. } => "cache",
            CliError::Numerical { .. } => "numerical",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "config" => 2,
            "io" => 3,
            "cache" => 4,
            _ => 5,
        }
    }

    pub(crate) fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }

    pub(crate) fn numerical(context: impl Into<String>) -> impl FnOnce(lodll_core::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Numerical { context, source }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

use std::path::PathBuf;

use thiserror::Error;

use crate::expr::ParseError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot parse config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("{field}: {source}")]
    Expression {
        field: String,
        #[source]
        source: ParseError,
    },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("surface artifact {path}: {message}")]
    Surface { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] vstop::Error),
}

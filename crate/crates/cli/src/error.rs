use std::path::PathBuf;

use crate::expr::ParseError;

/// Input and IO failures; all map to exit status 1.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{}: invalid JSON: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },

    #[error("{field}: {source}")]
    Expr { field: &'static str, source: ParseError },

    #[error("{0}")]
    Input(String),

    #[error(transparent)]
    Core(#[from] gamma_bsde_core::Error),
}

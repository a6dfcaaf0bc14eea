use thiserror::Error;

/// Errors raised by the laboratory routines.
///
/// Variants are grouped by cause rather than by module so that callers
/// (notably the CLI) can map them to exit codes without inspecting text.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("precision error: {0}")]
    Precision(String),
    #[error("size error: {0}")]
    Size(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;

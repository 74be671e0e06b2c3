use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("inadmissible state: {0}")]
    Inadmissible(String),
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("degenerate point: {0}")]
    Degenerate(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("config error at line {line}: {msg}")]
    ConfigSyntax { line: usize, msg: String },
    #[error("config error: {0}")]
    Config(String),
    #[error("expression error: {0}")]
    Expr(String),
    #[error("numerical blow-up at t = {t}: {msg}")]
    BlowUp { t: f64, msg: String },
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

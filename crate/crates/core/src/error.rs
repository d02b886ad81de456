use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("invalid state (x={x}, y={y}) for N={n}")]
    InvalidState { n: u32, x: i64, y: i64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("absorbed state has no increment law")]
    Absorbed,
    #[error("no active particle")]
    NoActiveParticle,
    #[error("truncated after {0} updates")]
    Truncated(u64),
    #[error("linear solve failed: {0}")]
    Solver(String),
    #[error("drift too small to separate roots")]
    RootNotBracketed,
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("unsupported prime {0}: need an odd prime <= 13")]
    UnsupportedPrime(u32),
    #[error("legendre symbol of zero")]
    ZeroResidue,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("not a lagrangian: {0}")]
    NotLagrangian(String),
    #[error("not symplectic")]
    NotSymplectic,
    #[error("transversality violated: {0}")]
    NotTransverse(String),
    #[error("no transverse lagrangian exists")]
    NoTransverse,
    #[error("enumeration of {count} lagrangians exceeds budget {budget}")]
    Budget { count: u128, budget: u128 },
    #[error("model certificate mismatch: {0}")]
    Certificate(String),
    #[error("middle enhanced lagrangians differ")]
    MiddleMismatch,
    #[error("reduction regime violated: {0}")]
    Regime(String),
    #[error("level out of window: {0}")]
    Window(String),
}

pub type Result<T> = std::result::Result<T, Error>;

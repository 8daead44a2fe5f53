use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("characteristic 2 is not supported")]
    EvenCharacteristic,
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("level mismatch: {0}")]
    LevelMismatch(String),
    #[error("quadratic character of zero")]
    ZeroArgument,
    #[error("division by zero")]
    DivisionByZero,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not symplectic")]
    NotSymplectic,
    #[error("matrix is singular")]
    Singular,
    #[error("no self-adjoint correction makes the lower-right corner invertible")]
    FactorizationFailed,
    #[error("group of order {order} exceeds the enumeration cap {cap}")]
    GroupTooLarge { order: u128, cap: u128 },
    #[error("Lang witness needs ambient degree {needed} over F_q, cap is {cap}")]
    AmbientCapExceeded { needed: usize, cap: usize },
    #[error("class functions live on different supports: {0}")]
    SupportMismatch(String),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

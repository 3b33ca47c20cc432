use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {re} + {im}i is not in the open upper half-plane")]
    NotInUpperHalfPlane { re: f64, im: f64 },

    #[error("invalid interval ({lo}, {hi})")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("window ({a}, {b}) outside [0, {x_max}] or inverted")]
    InvalidWindow { a: f64, b: f64, x_max: f64 },

    #[error("potential grids are incompatible: {0}")]
    GridMismatch(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("m-function did not converge: diagnostic gamma {diagnostic:.3e} > tolerance {tolerance:.3e}")]
    NonConvergence { diagnostic: f64, tolerance: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("search exceeded configured limits: {0}")]
    SearchLimit(String),

    #[error("invalid window sequence: {0}")]
    InvalidWindowSequence(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

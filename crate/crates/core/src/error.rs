use thiserror::Error;

/// Errors raised by the operator, quadrature and bound calculators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// The inner integral against `s_{u,j}` diverges because the target grows
    /// at least as fast as `e^{u t}`.
    #[error("divergent integral: operator parameter u = {u} does not exceed growth rate {rate}")]
    DivergentIntegral { u: f64, rate: f64 },

    #[error("quadrature did not converge: {0}")]
    ConvergenceFailure(String),

    #[error("integer overflow in exact coefficient arithmetic (order {0})")]
    Overflow(usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

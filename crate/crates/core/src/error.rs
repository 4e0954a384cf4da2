use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("class index {index} out of range for {len} logits")]
    Index { index: usize, len: usize },

    #[error("quadrature did not converge: estimate {estimate}, error estimate {error} (requested {requested})")]
    Quadrature {
        estimate: f64,
        error: f64,
        requested: f64,
    },

    #[error("root bracket [{lo}, {hi}] does not contain a sign change (residuals {f_lo}, {f_hi})")]
    Bracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

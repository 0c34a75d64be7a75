use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Invalid grid, seed, sampler or Monte Carlo settings.
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature ran out of subdivisions before meeting its tolerance.
    #[error(
        "quadrature did not converge on [{lower}, {upper}] after {subdivisions} subdivisions: \
         best estimate {estimate:e}, error estimate {error_estimate:e}"
    )]
    Quadrature {
        lower: f64,
        upper: f64,
        estimate: f64,
        error_estimate: f64,
        subdivisions: usize,
    },

    /// Any other numerical failure (non-finite values and the like).
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    /// The phase-time profile cannot be classified because it never decoheres.
    #[error("classification error: no decoherence (λ ≡ 0 on [{from}, {to}])")]
    NoDecoherence { from: f64, to: f64 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True for errors caused by bad input rather than failed numerics.
    pub fn is_configuration(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Domain(_) | Error::Parse { .. }
        )
    }
}

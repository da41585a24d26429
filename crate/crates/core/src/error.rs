use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
  #[error("invalid parameter `{name}`: {reason}")]
  InvalidParameter { name: String, reason: String },

  #[error("λ = {lambda} is outside the domain {domain} of the Laplace exponent")]
  Domain { lambda: f64, domain: String },

  #[error(
    "quadrature failed for {integrand} on [{lower}, {upper}]: estimate {estimate:e}, error estimate {error_estimate:e} after {evaluations} evaluations"
  )]
  Quadrature {
    integrand: String,
    lower: f64,
    upper: f64,
    estimate: f64,
    error_estimate: f64,
    evaluations: usize,
  },

  #[error("unsupported: {0}")]
  Unsupported(String),

  #[error("regime mismatch: {0}")]
  RegimeMismatch(String),

  #[error("the exponential functional is infinite: mean increment {mean} is not positive")]
  InfiniteFunctional { mean: f64 },

  #[error("root finding failed: {0}")]
  Root(String),

  #[error("fit failed: {0}")]
  Fit(String),

  #[error("refinement needed: {0}")]
  Refinement(String),

  #[error("grid error: {0}")]
  Grid(String),
}

impl Error {
  pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
    Error::InvalidParameter { name: name.into(), reason: reason.into() }
  }
}

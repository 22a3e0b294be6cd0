use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the set where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("operation `{op}` is not supported on a {space} space")]
    UnsupportedSpace { op: &'static str, space: &'static str },

    /// Brute-force pair enumeration would exceed the configured guard.
    #[error("{pairs} point pairs exceed the brute-force guard of {limit}; split the set or enable spatial bucketing")]
    PairGuard { pairs: u128, limit: u128 },

    #[error("{size} points exceed the Gram size guard of {limit}")]
    SizeGuard { size: usize, limit: usize },

    #[error("Gram matrix is numerically singular (normalized eig_min = {eig_min:e}, guard = {guard:e})")]
    Conditioning { eig_min: f64, guard: f64 },

    #[error("separation guard violated: 2*delta0 = {two_delta0} exceeds min(separation, r0) = {limit}")]
    Separation { two_delta0: f64, limit: f64 },

    #[error("non-finite quadrature on annulus around node {node}: {value}")]
    NonFinite { node: usize, value: f64 },

    #[error("sum did not converge: {0}")]
    Divergence(String),

    #[error("function evaluation failed: {0}")]
    Evaluation(String),
}

impl Error {
    /// True for failures raised by numerical guards rather than by bad input.
    pub fn is_numerical_guard(&self) -> bool {
        matches!(
            self,
            Error::PairGuard { .. }
                | Error::SizeGuard { .. }
                | Error::Conditioning { .. }
                | Error::NonFinite { .. }
                | Error::Divergence(_)
                | Error::Evaluation(_)
        )
    }
}

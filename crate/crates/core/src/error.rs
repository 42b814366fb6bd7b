use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A structural invariant of an input type was violated.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// The hypothesis count C(n,k) exceeds the configured cap.
    #[error("combinatorial overflow: C({n},{k}) = {count} exceeds cap {cap}")]
    CombinatorialOverflow {
        n: usize,
        k: usize,
        count: f64,
        cap: usize,
    },

    #[error("degenerate projection: {0}")]
    DegenerateProjection(String),

    #[error("covariance is not positive semidefinite: {0}")]
    CovarianceNotPsd(String),

    #[error("matrix decomposition failed: {0}")]
    Decomposition(String),

    /// Two hypotheses cannot be told apart (zero exponent).
    #[error("hypotheses indistinguishable: {0}")]
    Indistinguishable(String),

    /// A sensing-design request is inconsistent (for instance a divisibility violation).
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    /// An iterative solver hit its iteration limit; the last iterate is attached.
    #[error("iteration limit reached after {iterations} iterations")]
    IterationLimit { iterations: usize, last: Vec<f64> },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// True for errors caused by bad configuration rather than by numerics.
    pub fn is_configuration(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::Invalid(_)
                | Error::CombinatorialOverflow { .. }
                | Error::Config(_)
                | Error::Indistinguishable(_)
        )
    }
}

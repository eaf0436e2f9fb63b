use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix contains non-finite entries ({0})")]
    NonFinite(&'static str),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The state matrix is not Hurwitz.
    #[error("stability violation: spectral abscissa {abscissa:.6e} is not negative")]
    Unstable { abscissa: f64 },

    /// Cholesky factorization failed; for a Gramian this means the pair is
    /// uncontrollable or numerically singular.
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("model inconsistency: {0}")]
    ModelInconsistency(String),

    #[error("degenerate equilibrium: {0}")]
    DegenerateEquilibrium(String),

    #[error("degenerate search direction (zero vector)")]
    DegenerateDirection,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("baseline metric value {0:e} is too close to zero to form a relative improvement")]
    DivisionDegeneracy(f64),

    #[error("refusing to enumerate {combinations} edge combinations (cap is {cap}); exhaustive search is NP-hard in general")]
    CombinatorialRefusal { combinations: u128, cap: u128 },
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
}

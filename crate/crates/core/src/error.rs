use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside its admissible domain.
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("empty request: {0}")]
    EmptyRequest(String),

    /// An integral required by the operation does not converge.
    #[error("divergent integral: {0}")]
    Divergence(String),

    /// Caller broke an interface contract (dimension mismatch, foreign grid, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("grid planning failed: {0}")]
    Planning(String),

    /// Moving-average CLT hypotheses (αβ > 2, κ > −1/β) do not hold.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("sample size too small: need at least {needed}, got {got}")]
    SampleSize { needed: usize, got: usize },

    #[error("table coverage: {0}")]
    Coverage(String),

    /// A quadrature did not reach the requested accuracy.
    #[error("accuracy not reached: {0}")]
    Accuracy(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

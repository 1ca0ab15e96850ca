use thiserror::Error;

/// Errors produced anywhere in the optimizer stack.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the model it was passed to.
    #[error("domain error: {0}")]
    Domain(String),

    /// The beam sweep consumes so much of the coherence block that fewer than
    /// two symbols remain per substituted block.
    #[error("coherence exhausted by beam sweep: Lc/(Kt*G2) = {0} < 2")]
    CoherenceExhausted(f64),

    /// A numerical search failed to converge or to certify its result.
    #[error("solver error: {0}")]
    Solver(String),

    /// Inconsistent or incomplete configuration (scenario files, modes, CSV schemas).
    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn solver(msg: impl Into<String>) -> Self {
        Error::Solver(msg.into())
    }

    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_solver(&self) -> bool {
        matches!(self, Error::Solver(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

/// Errors raised by the special-function, analytic and simulation layers.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("series did not converge within {terms} terms (partial sum {partial:e})")]
    SeriesFailure { terms: usize, partial: f64 },

    #[error(
        "Slater expansion unusable for {spec}: {reason}; evaluate with meijer_g_contour instead"
    )]
    SlaterUnusable { spec: String, reason: String },

    #[error("Mellin-Barnes quadrature failed for {spec} (contour abscissa {abscissa}, tail estimate {tail:e}): {reason}")]
    ContourFailure {
        spec: String,
        abscissa: f64,
        tail: f64,
        reason: String,
    },

    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e} after {subdivisions} subdivisions")]
    Quadrature {
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{term}: {source}")]
    Term {
        term: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps an error with the name of the closed-form term that produced it.
    pub fn in_term(self, term: impl Into<String>) -> Self {
        Error::Term {
            term: term.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

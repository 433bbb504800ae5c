use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    /// Renormalization or a renormalized quantity was requested but the
    /// retained weight is zero.
    #[error("degenerate mixture: total retained weight is zero")]
    DegenerateMixture,

    #[error(
        "truncation inadequate: tail mass {tail_mass:e} exceeds {threshold}; \
         raise the order or pass the tail-check override"
    )]
    TruncationInadequate { tail_mass: f64, threshold: f64 },

    #[error("quadrature did not converge: best estimate {estimate} (error estimate {error:e})")]
    QuadratureFailure { estimate: f64, error: f64 },

    #[error("unsupported Poisson rate {lambda}: sampler supports lambda <= {max}")]
    UnsupportedRate { lambda: f64, max: f64 },

    #[error("parameter mismatch: {0}")]
    ParameterMismatch(String),

    #[error("sweep cell (lambda={lambda}, order={order}): {source}")]
    SweepCell {
        lambda: f64,
        order: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::DegenerateMixture | Error::QuadratureFailure { .. } => true,
            Error::SweepCell { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

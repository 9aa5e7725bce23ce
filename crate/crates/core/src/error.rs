use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed state or dataset (non-Hermitian, unnormalized, wrong shape).
    #[error("validation error: {0}")]
    Validation(String),

    /// Parameter outside its mathematical domain (e.g. efficiency not in (0, 1]).
    #[error("domain error: {0}")]
    Domain(String),

    /// Hermite / monomial order beyond the supported cap.
    #[error("order error: requested order {order} exceeds the maximum {max}")]
    Order { order: usize, max: usize },

    /// Numerical range problem, e.g. the sampling grid does not hold the density.
    #[error("range error: {0}")]
    Range(String),

    /// Bad call argument (empty dataset, too few bins, empty grid).
    #[error("argument error: {0}")]
    Argument(String),

    /// A real-valued estimator was asked for a complex-valued kernel.
    #[error("type error: {0}")]
    Type(String),

    /// Simulation route not available for this state.
    #[error("unsupported state: {0}")]
    UnsupportedState(String),

    /// Observable/state pairing has no direct-detection counterpart.
    #[error("capability error: {0}")]
    Capability(String),

    /// Closed form only valid asymptotically and the inputs are outside that regime.
    #[error("asymptotic-domain error: {0}")]
    AsymptoticDomain(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::Parse(format!("{other:?}")),
        }
    }
}

pub(crate) fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "quantum efficiency must lie in (0, 1], got {eta}"
        )))
    }
}

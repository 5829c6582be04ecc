use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("empirical measure must have at least one atom")]
    EmptyMeasure,

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("time grids differ ({left} vs {right})")]
    GridMismatch { left: String, right: String },

    #[error("particle {particle} left the admissible region at node {node} (|x| = {value:e} > {bound:e})")]
    BlowUp {
        particle: usize,
        node: usize,
        value: f64,
        bound: f64,
    },

    #[error("Picard iteration did not converge in {} iterations (last residual {})", .residuals.len(), Residuals(.residuals))]
    NotConverged { residuals: Vec<f64> },

    #[error("drift `{0}` has no bounded/Lipschitz decomposition")]
    MissingDecomposition(String),

    #[error("payoff `{0}` has no derivative")]
    MissingDerivative(String),

    #[error("exponent {exponent:e} exceeds overflow guard at node {node}")]
    ExponentOverflow { exponent: f64, node: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn non_finite(context: impl Into<String>) -> Self {
        Error::NonFinite {
            context: context.into(),
        }
    }

    /// True for failures of the numerics (blow-up, divergence, overflow) as
    /// opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. }
                | Error::BlowUp { .. }
                | Error::NotConverged { .. }
                | Error::ExponentOverflow { .. }
        )
    }
}

struct Residuals<'a>(&'a [f64]);

impl fmt::Display for Residuals<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0.last() {
            Some(r) => write!(f, "{r:e}"),
            None => f.write_str("n/a"),
        }
    }
}

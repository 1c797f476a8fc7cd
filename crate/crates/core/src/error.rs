use thiserror::Error;

/// Errors raised by the model, the information kernels and the scenario layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum VoiError {
    /// An argument lies outside the domain of the formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// Cholesky factorization hit a non-positive pivot.
    #[error("matrix is not positive definite (pivot {pivot}, value {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    /// The closed form needs an invertible noise covariance.
    #[error("closed form undefined: observation {index} has zero noise variance")]
    InvalidForClosedForm { index: usize },

    /// Age of information is undefined before the first reception.
    #[error("no update received by t = {t} (first reception at {first_reception})")]
    NoReceptionYet { t: f64, first_reception: f64 },

    /// A scenario field violates its schema or a model invariant.
    #[error("invalid scenario field `{field}`: {reason}")]
    Scenario { field: String, reason: String },

    /// The closed form and the log-det route disagree.
    #[error("dual-path mismatch at t = {t}: closed {closed}, direct {direct}")]
    DualPathMismatch { t: f64, closed: f64, direct: f64 },

    #[error("unknown figure `{0}` (expected fig4, fig5, fig6 or fig7)")]
    UnknownFigure(String),

    /// A kernel failed while evaluating one point of a time grid.
    #[error("grid point {index} (t = {t}): {source}")]
    AtGridPoint {
        index: usize,
        t: f64,
        #[source]
        source: Box<VoiError>,
    },

    #[error("i/o error: {0}")]
    Io(String),
}

impl VoiError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        VoiError::Domain(msg.into())
    }

    pub(crate) fn scenario(field: impl Into<String>, reason: impl Into<String>) -> Self {
        VoiError::Scenario {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Strips grid-point annotations.
    pub fn root(&self) -> &VoiError {
        match self {
            VoiError::AtGridPoint { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for numerical failures (non-PD factorization, path disagreement).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self.root(),
            VoiError::NotPositiveDefinite { .. } | VoiError::DualPathMismatch { .. }
        )
    }
}

impl From<std::io::Error> for VoiError {
    fn from(e: std::io::Error) -> Self {
        VoiError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, VoiError>;

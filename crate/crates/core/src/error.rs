use thiserror::Error;

pub type Result<T, E = FeelError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum FeelError {
    /// A parameter is outside the domain of the model it feeds.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A special function or closed form was evaluated outside its domain.
    #[error("domain error in {function}: {reason}")]
    Domain {
        function: &'static str,
        reason: String,
    },

    #[error("path-loss singularity: device located at the base station")]
    Singularity,

    /// `delta <= p_null`: the spatial convergence criterion has no solution.
    #[error("spatial criterion infeasible: delta = {delta} does not exceed void probability {p_null}")]
    Infeasible { delta: f64, p_null: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl FeelError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        FeelError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(function: &'static str, reason: impl Into<String>) -> Self {
        FeelError::Domain {
            function,
            reason: reason.into(),
        }
    }
}

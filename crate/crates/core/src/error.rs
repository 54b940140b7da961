use thiserror::Error;

/// Errors produced by the estimation, reduction and limit-law layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point outside feasible set: {0}")]
    PointOutsideSet(String),

    #[error("capability missing: {0}")]
    Capability(String),

    #[error("unknown problem `{name}`; registry: {}", registry.join(", "))]
    UnknownProblem { name: String, registry: Vec<String> },

    #[error("assumption violated ({assumption}): {detail}")]
    AssumptionViolation { assumption: String, detail: String },

    #[error("stationarity failure at interior maximizer: |grad_xi f| = {norm:.3e}")]
    Stationarity { norm: f64 },

    #[error("first-order condition fails: no Lagrange multiplier (residual {residual:.3e})")]
    FirstOrderFailure { residual: f64 },

    #[error("quadratic program has no admissible active set: {0}")]
    Infeasible(String),

    #[error("quadratic model minimizer reached the trust radius {radius}")]
    RadiusTooSmall { radius: f64 },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("draw {index}: {source}")]
    Draw {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config error at `{pointer}`: {message}")]
    Config { pointer: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn assumption(assumption: &str, detail: impl Into<String>) -> Self {
        Error::AssumptionViolation {
            assumption: assumption.to_string(),
            detail: detail.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::UnknownProblem { .. } | Error::InvalidArgument(_) => 2,
            Error::Draw { source, .. } => source.exit_code(),
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

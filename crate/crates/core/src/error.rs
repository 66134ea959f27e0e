use thiserror::Error;

use crate::lp::LpError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid cost model: {0}")]
    InvalidCostModel(String),

    #[error("degenerate score model: gradient bound must be positive")]
    DegenerateScoreModel,

    #[error("invalid fairness budget: {0}")]
    InvalidBudget(String),

    #[error("invalid threshold distribution: {0}")]
    InvalidDistribution(String),

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error(transparent)]
    Lp(#[from] LpError),

    #[error(
        "density cap {cap} is infeasible: the threshold range has width {width}, \
         so the cap must be at least {min_cap}"
    )]
    InfeasibleCap { cap: f64, width: f64, min_cap: f64 },

    #[error("group fairness constraints are infeasible at omega = {omega}; try a larger omega")]
    InfeasibleOmega { omega: f64 },

    #[error(
        "no deterministic threshold combination satisfies the group constraint at omega = {omega}"
    )]
    InfeasibleBaseline { omega: f64 },

    #[error("unexpected LP status {0:?}")]
    LpStatus(crate::lp::LpStatus),

    #[error("unknown group {0}")]
    UnknownGroup(u32),

    #[error("metric error: {0}")]
    Metric(String),

    #[error("data error at {location}: {message}")]
    Data { location: String, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn data(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Data {
            location: location.into(),
            message: message.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::InfeasibleCap { .. }
            | Error::InfeasibleOmega { .. }
            | Error::InfeasibleBaseline { .. }
            | Error::LpStatus(_) => 3,
            Error::Data { .. } | Error::Csv(_) | Error::Io(_) | Error::Estimation(_) => 4,
            _ => 2,
        }
    }
}

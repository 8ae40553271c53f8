use crate::lp::LpError;
use crate::net::Pair;

/// Errors raised by model builders, solvers and realization.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("unknown link `{0}`")]
    UnknownLink(String),
    #[error("unknown tunnel `{0}`")]
    UnknownTunnel(String),
    #[error("unknown condition `{0}`")]
    UnknownCondition(String),
    #[error("condition `{0}` lists a link as both alive and dead")]
    InvalidCondition(String),
    #[error("failure group `{0}` has no links")]
    EmptyGroup(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{count} scenarios exceed the enumeration limit of {limit}")]
    ScenarioBlowup { count: u128, limit: u128 },
    #[error("model construction error: {0}")]
    InternalModel(String),
    #[error("reservation matrix is not weakly chained diagonally dominant: {0}")]
    MatrixNotWcdd(String),
    #[error("logical sequences are not topologically sorted; cycle through {0:?}")]
    NotTopologicallySorted(Vec<Pair>),
    #[error("flow `{flow}` cannot reach its availability target")]
    InfeasibleTarget { flow: String },
    #[error("no pair has positive demand")]
    NoDemand,
    #[error(transparent)]
    Lp(#[from] LpError<f64>),
}

impl Error {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::UnknownNode(_) => "UNKNOWN_NODE",
            Error::UnknownLink(_) => "UNKNOWN_LINK",
            Error::UnknownTunnel(_) => "UNKNOWN_TUNNEL",
            Error::UnknownCondition(_) => "UNKNOWN_CONDITION",
            Error::InvalidCondition(_) => "INVALID_CONDITION",
            Error::EmptyGroup(_) => "EMPTY_GROUP",
            Error::InvalidParameter(_) => "INVALID_PARAMETER",
            Error::ScenarioBlowup { .. } => "SCENARIO_BLOWUP",
            Error::InternalModel(_) => "INTERNAL_MODEL_ERROR",
            Error::MatrixNotWcdd(_) => "MATRIX_NOT_WCDD",
            Error::NotTopologicallySorted(_) => "NOT_TOPOLOGICALLY_SORTED",
            Error::InfeasibleTarget { .. } => "INFEASIBLE_TARGET",
            Error::NoDemand => "NO_DEMAND",
            Error::Lp(e) => e.code(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

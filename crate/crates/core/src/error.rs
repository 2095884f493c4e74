use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("{name} = {value} is outside the domain of {operation}")]
    Domain {
        operation: &'static str,
        name: &'static str,
        value: f64,
    },

    #[error("no sign change found for {what} below {limit}")]
    BracketNotFound { what: &'static str, limit: f64 },

    #[error("no feasible candidate for parameters {0}")]
    NoFeasibleCandidate(String),

    #[error("recovery is infeasible at theta = {theta}, e_i = {e_i}: harvest fraction would leave [0, 1]")]
    InfeasibleRecovery { theta: f64, e_i: f64 },

    #[error("suffix-sum achievability condition does not hold")]
    ConditionNotMet,

    #[error("transfer linear program is infeasible")]
    LpInfeasible,

    #[error("transfer linear program is unbounded")]
    LpUnbounded,

    #[error("oracle grid has no feasible point")]
    EmptyGrid,

    #[error("parse error: {0}")]
    Parse(String),
}

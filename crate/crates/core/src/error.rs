use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid universe: {0}")]
    InvalidUniverse(String),

    #[error("invalid distribution for element `{element}`: {reason}")]
    InvalidDistribution { element: String, reason: String },

    #[error("invalid number `{0}`")]
    InvalidNumber(String),

    #[error("exact mode infeasible: {what} needs {needed} cases, cap is {cap}; use Monte Carlo")]
    ExactInfeasible {
        what: &'static str,
        needed: u128,
        cap: u128,
    },

    #[error("rank computation infeasible: {size} candidate types exceeds exhaustive cap {cap}")]
    RankInfeasible { size: usize, cap: usize },

    #[error("element {0} is not assigned in the type vector")]
    Unassigned(u32),

    #[error("cannot contract type {0}: it is a loop")]
    ContractLoop(u32),

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("family is not {k}-extendible: {detail}")]
    NotExtendible { k: usize, detail: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unknown {what} kind `{kind}`")]
    UnknownKind { what: &'static str, kind: String },
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("policy owner mismatch: expected player {expected}, got {found}")]
    OwnerMismatch { expected: usize, found: usize },
    #[error("player {0} out of range")]
    PlayerOutOfRange(usize),
    #[error("no cost table for player {owner}, index {index}")]
    MissingCost { owner: usize, index: usize },
    #[error("chain is not unichain (steady state is not unique, residual {residual:.3e})")]
    NotUnichain { residual: f64 },
    #[error("deterministic policy count {count} exceeds cap {cap}")]
    SizeLimitExceeded { count: u128, cap: u128 },
    #[error("LP numerical breakdown after {iterations} iterations: {reason}")]
    NumericalBreakdown { iterations: usize, reason: String },
    #[error(
        "best-response LP for player {player} is infeasible but the current policy is feasible \
         (max constraint excess {excess:.3e})"
    )]
    GapUndefined { player: usize, excess: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}

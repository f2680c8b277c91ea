use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid group: {0}")]
    InvalidGroup(String),

    #[error("group order {order} exceeds the configured maximum {max}")]
    GroupTooLarge { order: usize, max: usize },

    #[error("cannot parse group spec {input:?}: {reason}")]
    ParseGroup { input: String, reason: String },

    #[error("element sets belong to different groups")]
    GroupMismatch,

    #[error("operand must be nonempty")]
    EmptyOperand,

    #[error("{0} does not divide the group order")]
    NotADivisor(usize),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("set is not extremal: {0}")]
    NotExtremal(String),

    #[error("parameters outside the admissible window: {0}")]
    Window(String),

    #[error("construction failed after {attempts} attempts")]
    ConstructionFailed { attempts: usize },

    #[error("search budget exceeded")]
    BudgetExceeded,

    #[error("checkpoint rejected: {0}")]
    Checkpoint(String),
}

pub type Result<T> = std::result::Result<T, Error>;

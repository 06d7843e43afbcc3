use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// The precedence edges contain a cycle through the listed objectives.
    #[error("preorder contains a cycle through objectives {0:?}")]
    Cycle(Vec<usize>),
    /// An objective, state or action index is outside its range.
    #[error("{what} index {index} out of range (limit {limit})")]
    Index {
        what: &'static str,
        index: usize,
        limit: usize,
    },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("empty action set")]
    EmptySet,
    #[error("empty input")]
    Empty,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid action {action} (environment has {n_actions} actions)")]
    InvalidAction { action: usize, n_actions: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

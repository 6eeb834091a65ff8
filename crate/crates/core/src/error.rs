use thiserror::Error;

use crate::model::{Disabled, Player};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("negative delay")]
    NegativeDelay,
    #[error("move not enabled: {0}")]
    NotEnabled(Disabled),
    #[error("unknown action index {0}")]
    UnknownActionIndex(usize),
    #[error("unknown clock index {0}")]
    UnknownClockIndex(usize),
    #[error("action `{action}` cannot be played by player {player:?}")]
    WrongOwner { action: String, player: Player },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(line: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("expected {expected} window bounds, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("window bound {0} must be positive")]
    ZeroLambda(usize),
    #[error("location `{0}` has a priority vector of the wrong length")]
    PriorityLength(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExpandError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("priority vector has length {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("dimension {0} is not odd in the current tag")]
    EvenDimension(usize),
    #[error("name `{0}` uses the reserved `__` prefix")]
    ReservedName(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("model is not a timed game")]
    NotAGame,
    #[error(transparent)]
    Expand(#[from] ExpandError),
    #[error("input is not an expanded game")]
    NotExpanded,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: step is not valid: {source}")]
    Invalid { line: usize, source: ModelError },
    #[error("line {line}: {message}")]
    Mismatch { line: usize, message: String },
    #[error("the cycle does not return to its first state")]
    OpenCycle,
    #[error("the cycle is empty")]
    EmptyCycle,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("lasso is time-convergent")]
    Convergent,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("expansion failed: {0}")]
    Expansion(String),
}

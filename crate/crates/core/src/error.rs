use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}:{line}: expected 3 tab-separated fields, found {found}")]
    Parse { path: PathBuf, line: usize, found: usize },
    #[error("{path}:{line}: empty field")]
    EmptyField { path: PathBuf, line: usize },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("split ratios must be non-negative and sum to 1, got {0:?}")]
    BadRatios([f64; 3]),
    #[error("store is empty")]
    Empty,
    #[error("statistic undefined: {0}")]
    UndefinedStatistic(&'static str),
    #[error("entity table overflow")]
    TooManyEntities,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuleError {
    #[error("path is empty")]
    EmptyPath,
    #[error("path atoms {0} and {1} do not share an entity")]
    DisconnectedPath(usize, usize),
    #[error("path is not straight: {0}")]
    NotStraight(String),
    #[error("expected a rule of kind {expected}, got {found}")]
    InvalidKind {
        expected: &'static str,
        found: &'static str,
    },
    #[error("the top rule has no body atom to anchor a specialization")]
    EmptyBody,
    #[error("expected {expected} bindings, got {found}")]
    BindingArity { expected: usize, found: usize },
    #[error("binding collides with an existing constant")]
    BindingCollision,
    #[error("rule body is not a chain anchored at the head")]
    NotChain,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("rule parse error at byte {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(position: usize, message: impl Into<String>) -> Self {
        ParseError {
            position,
            message: message.into(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HierarchyError {
    #[error("hierarchy contains a cycle")]
    Cyclic,
}

#[derive(Debug, Error)]
pub enum MineError {
    #[error("target predicate has no training instances")]
    EmptyTarget,
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error("invalid miner configuration: {0}")]
    Config(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct RecordError {
    pub line: usize,
    pub message: String,
}

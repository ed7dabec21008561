use thiserror::Error;

/// Errors raised by parsing, model handling and the decision procedures.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("unknown identifier `{0}`")]
    UnknownIdent(String),
    #[error("predicate `{name}` expects {expected} arguments, got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("invalid vocabulary: {0}")]
    Vocabulary(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("nominal `{0}` does not name a point")]
    UnnamedNominal(String),
    #[error("invalid model: {0}")]
    Model(String),
    #[error("side condition violated: {0}")]
    SideCondition(String),
    #[error("resource bound exceeded: {0}")]
    Resource(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Source position, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl std::fmt::Display for Pos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("inheritance cycle")]
    InheritanceCycle,
    #[error("cannot instantiate abstract class {0}")]
    Abstract(String),
    #[error("no constructor of arity {0}")]
    NoConstructor(usize),
    #[error("no slot {0}")]
    NoSlot(String),
    #[error("slot type violation: {0}")]
    SlotType(String),
    #[error("does not understand {0}/{1}")]
    DoesNotUnderstand(String, usize),
    #[error("unbound path {0}")]
    UnboundPath(String),
    #[error("unbound variable {0}")]
    UnboundVar(String),
    #[error("pattern collision: {0}")]
    PatternCollision(String),
    #[error("empty collection")]
    EmptyCollection,
    #[error("format arity")]
    FormatArity,
    #[error("cannot splice {0}")]
    CannotSplice(String),
    #[error("cannot lift object")]
    CannotLift,
    #[error("no applicable clause in {0}")]
    NoClause(String),
    #[error("untranslatable expression")]
    Untranslatable,
    #[error("type error: {0}")]
    Type(String),
    #[error("integer overflow")]
    Overflow,
    #[error("division by zero")]
    DivZero,
    #[error("arity mismatch calling {0}: expected {1}, got {2}")]
    Arity(String, usize, usize),
    #[error("{0}")]
    User(String),
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("unknown construct {0}")]
    UnknownConstruct(String),
    #[error("step budget exceeded")]
    Budget,
    #[error("stack underflow")]
    StackUnderflow,
    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub fn syntax(pos: Pos, msg: impl Into<String>) -> Self {
        Error::Syntax { pos, msg: msg.into() }
    }

    pub fn ty(msg: impl Into<String>) -> Self {
        Error::Type(msg.into())
    }

    pub fn is_syntax(&self) -> bool {
        matches!(self, Error::Syntax { .. } | Error::UnknownConstruct(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

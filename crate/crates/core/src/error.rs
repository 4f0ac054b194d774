use thiserror::Error;

/// Line/column position in script source, both 1-based.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Default, PartialOrd, Ord)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl std::fmt::Display for Pos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("lex error at {pos}: {message}")]
    Lex { pos: Pos, message: String },
    #[error("parse error at {pos}: expected {expected}, found {found}")]
    Parse {
        pos: Pos,
        expected: String,
        found: String,
    },
    #[error("{class} does not understand #{selector}")]
    DoesNotUnderstand { class: String, selector: String },
    #[error("become refused: {0}")]
    RefusedBecome(String),
    #[error("swap fault: {0}")]
    SwapFault(String),
    #[error("proxy id encoding: {0}")]
    Encoding(String),
    #[error("fatal runtime error: {0}")]
    FatalRuntime(String),
    #[error("handler configuration: {0}")]
    HandlerConfig(String),
    #[error("invalid activation: {0}")]
    InvalidActivation(String),
    #[error("wrong argument count for #{selector}: expected {expected}, got {got}")]
    Arity {
        selector: String,
        expected: usize,
        got: usize,
    },
    #[error("slot index {index} out of range (object has {len} slots)")]
    SlotIndex { index: usize, len: usize },
    #[error("{0} has no slots")]
    NotSlotted(String),
    #[error("not class-shaped: {0}")]
    NotClassShaped(String),
    #[error("class {0} already defined")]
    DuplicateClass(String),
    #[error("compact class table full (31 entries)")]
    CompactTableFull,
    #[error("unbound variable {0}")]
    UnboundVariable(String),
    #[error("primitive failed: {0}")]
    PrimitiveFailed(String),
    #[error("assertion failed: {0}")]
    AssertionFailed(String),
    #[error("trap hierarchy already installed")]
    TrapAlreadyInstalled,
    #[error("#{selector} is not bound in {class}")]
    UnboundSelector { class: String, selector: String },
    #[error("#{selector} of {class} is not wrapped")]
    NotWrapped { class: String, selector: String },
    #[error("segment store i/o: {0}")]
    Io(String),
    #[error("at {pos}: {source}")]
    At { pos: Pos, source: Box<Error> },
}

impl Error {
    /// The error with any position wrappers removed.
    pub fn kind(&self) -> &Error {
        match self {
            Error::At { source, .. } => source.kind(),
            other => other,
        }
    }

    /// Innermost recorded source position, if any.
    pub fn pos(&self) -> Option<Pos> {
        match self {
            Error::At { pos, source } => source.pos().or(Some(*pos)),
            Error::Lex { pos, .. } | Error::Parse { pos, .. } => Some(*pos),
            _ => None,
        }
    }

    pub(crate) fn located(self, pos: Pos) -> Error {
        if self.pos().is_some() {
            self
        } else {
            Error::At {
                pos,
                source: Box::new(self),
            }
        }
    }

    pub fn is_syntax(&self) -> bool {
        matches!(self.kind(), Error::Lex { .. } | Error::Parse { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

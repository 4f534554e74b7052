use thiserror::Error;

use super::sexp::Pos;

/// Ill-sorted term; `path` gives child indices from the checked root to the
/// offending subterm.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("sort mismatch at {}: {message}", display_path(.path))]
pub struct SortError {
    pub path: Vec<usize>,
    pub message: String,
}

fn display_path(path: &[usize]) -> String {
    if path.is_empty() {
        "root".to_string()
    } else {
        path.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(".")
    }
}

impl SortError {
    pub fn new(message: impl Into<String>) -> Self {
        SortError {
            path: Vec::new(),
            message: message.into(),
        }
    }

    pub(crate) fn under(mut self, index: usize) -> Self {
        self.path.insert(0, index);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: expected {expected}, found {found}")]
    Syntax { expected: String, found: String },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("unsupported feature: {0}")]
    Unsupported(String),
    #[error("symbol `{0}` is reserved")]
    Reserved(String),
    #[error("symbol `{0}` is already declared")]
    Duplicate(String),
    #[error("wrong number of arguments for `{name}`: expected {expected}, got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Sort(#[from] SortError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{pos}: {kind}")]
pub struct ParseError {
    pub pos: Pos,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub fn new(pos: Pos, kind: ParseErrorKind) -> Self {
        ParseError { pos, kind }
    }

    pub fn syntax(pos: Pos, expected: &str, found: &str) -> Self {
        ParseError::new(
            pos,
            ParseErrorKind::Syntax {
                expected: expected.to_string(),
                found: found.to_string(),
            },
        )
    }

    pub fn unsupported(pos: Pos, what: impl Into<String>) -> Self {
        ParseError::new(pos, ParseErrorKind::Unsupported(what.into()))
    }

    pub fn is_unsupported(&self) -> bool {
        matches!(self.kind, ParseErrorKind::Unsupported(_))
    }
}

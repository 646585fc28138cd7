use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unterminated string literal starting at byte {0}")]
    UnbalancedQuote(usize),
    #[error("unbalanced parentheses at token {0}")]
    UnbalancedParens(usize),
    #[error("program has no tokens")]
    EmptyProgram,
    #[error("instance {id}: {source}")]
    Instance {
        id: String,
        #[source]
        source: Box<Error>,
    },
    #[error("duplicate instance id {0:?}")]
    DuplicateId(String),
    #[error("unknown instance id {0:?}")]
    UnknownId(String),
    #[error("malformed record on line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("{path}: {reason}")]
    Io { path: String, reason: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("test set of {requested} instances does not fit a dataset of {available}")]
    TestTooLarge { requested: usize, available: usize },
    #[error("no solvable template split found after {0} attempts")]
    UnsatisfiableSplit(usize),
    #[error("frequency table is empty")]
    EmptyTable,
    #[error("sample is empty")]
    EmptySample,
    #[error("sampled instance {0:?} is not in the pool")]
    SampleNotSubsetOfPool(String),
    #[error("grammar cannot terminate within depth {0}")]
    DepthExceeded(usize),
    #[error("invalid grammar: {0}")]
    Grammar(String),
}

impl Error {
    pub(crate) fn for_instance(self, id: &str) -> Error {
        Error::Instance {
            id: id.to_string(),
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, err: impl std::fmt::Display) -> Error {
        Error::Io {
            path: path.as_ref().display().to_string(),
            reason: err.to_string(),
        }
    }
}

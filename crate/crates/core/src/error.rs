use thiserror::Error;

use crate::dictionary::ResourceId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown resource id {0}")]
    UnknownResource(u32),

    #[error("fact at position {0} is not in the store")]
    UnknownFact(usize),

    #[error("no fact has been returned by the iterator yet")]
    NoLastFact,

    #[error("store is being materialised; compaction needs exclusive access")]
    MaterialisationInProgress,

    #[error("cannot merge {from} into {into}: target must precede the merged resource")]
    MergeOrder { from: ResourceId, into: ResourceId },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: head variable ?{variable} does not occur in the rule body")]
    UnsafeRule { line: usize, variable: String },

    #[error("query: {0}")]
    Query(String),

    #[error("variable ?{0} expanded twice")]
    DoubleExpansion(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

use thiserror::Error;

use crate::cbtl::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates its documented bound.
    #[error("invalid configuration `{key}`: {reason}")]
    Config { key: String, reason: String },

    /// An event arrived in a location where it is not enabled.
    #[error("protocol semantics violated on node {node}: event {event} not enabled in {location}")]
    Protocol {
        node: usize,
        location: String,
        event: String,
    },

    /// A broken engine invariant. Indicates a bug, never bad input.
    #[error("internal error: {0}")]
    Internal(String),

    #[error("predicate parse error: {0}")]
    Parse(#[from] ParseError),

    #[error("invalid predicate `{key}`: {source}")]
    Predicate {
        key: String,
        #[source]
        source: ParseError,
    },

    #[error("predicate evaluation error: {0}")]
    Eval(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("screening failed: {0}")]
    Screening(String),

    #[error("simulating `{deviant}` against a field of `{field}`: {source}")]
    Pair {
        deviant: String,
        field: String,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown profile id `{id}` (known: {known})")]
    UnknownProfile { id: String, known: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed artifact: {0}")]
    Artifact(String),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter violates its invariant.
    #[error("invalid parameter `{field}`: {reason}")]
    Parameter { field: String, reason: String },

    /// The input is well-formed but the operation is undefined on it
    /// (empty snapshot, zero total weight, no online nodes, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error at {context}: {reason}")]
    Parse { context: String, reason: String },

    #[error("schema error at {context}: {reason}")]
    Schema { context: String, reason: String },

    /// Inconsistent data across records (duplicate timestamps, dates in the wrong order).
    #[error("data error: {0}")]
    Data(String),

    /// A scenario or run configuration references something that does not exist.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn param(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True for errors caused by bad input or configuration rather than by the run itself.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::Domain(_))
    }
}

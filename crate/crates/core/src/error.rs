use thiserror::Error;

/// Unified error type for the whole pipeline. Parse errors carry byte
/// offsets plus line/column so front ends can point at book files.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at {line}:{col} (offset {offset}): {msg}")]
    Parse {
        offset: usize,
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("translate error: {0}")]
    Translate(String),
    #[error("definition error: {0}")]
    Define(String),
    #[error("rule error: {0}")]
    Rule(String),
    #[error("theory error: {0}")]
    Theory(String),
    #[error("pattern error: {0}")]
    Pattern(String),
    #[error("transform error: {0}")]
    Transform(String),
    #[error("certificate error: {0}")]
    Certificate(String),
    #[error("{file}:{line}: {source}")]
    InBook {
        file: String,
        line: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("book error: {0}")]
    Book(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wrap an error with the book file and line of the event that raised it.
    pub fn in_book(self, file: &str, line: usize) -> Error {
        Error::InBook {
            file: file.to_string(),
            line,
            source: Box::new(self),
        }
    }
}

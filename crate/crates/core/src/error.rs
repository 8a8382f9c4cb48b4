use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("line {line}: malformed edge line {text:?}")]
    MalformedLine { line: usize, text: String },

    #[error("line {line}: self-loop on vertex {vertex}")]
    SelfLoop { line: usize, vertex: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("record of {words} words does not fit a machine of {capacity} words")]
    RecordTooLarge { words: usize, capacity: usize },

    #[error("edge ({u},{v}) has no reverse orientation in the pool")]
    MissingReverseEdge { u: usize, v: usize },

    #[error("{needed} words exceed the total memory budget of {budget} words")]
    CapacityExceeded { needed: u128, budget: u128 },

    #[error("machine {machine} moved {words} words in one round (cap {capacity})")]
    IoCapExceeded { machine: usize, words: usize, capacity: usize },

    #[error("machine {machine} holds {words} words (cap {capacity})")]
    ResidencyExceeded { machine: usize, words: usize, capacity: usize },

    #[error("vertex {vertex} accumulated {count} sources, more than mu = {mu}")]
    MuOverflow { vertex: usize, count: usize, mu: usize },

    #[error("{count} sources exceed the limit of {limit} for this mode")]
    TooManySources { count: usize, limit: usize },

    #[error("vertex {vertex} out of range for a graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("artifact format: {0}")]
    Format(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix contains non-finite entries")]
    NonFiniteMatrix,

    #[error("matrix is not Hurwitz, the Lyapunov equation has no positive definite solution")]
    NotHurwitz,

    #[error("pair (A, C) is not observable")]
    Unobservable,

    #[error("numerical routine failed: {0}")]
    Numerical(String),

    #[error("invalid graph: {0}")]
    Graph(String),

    #[error("graph file, line {line}: {msg}")]
    GraphParse { line: usize, msg: String },

    #[error("agent model: {0}")]
    Model(String),

    #[error("gain synthesis failed: {0}")]
    Synthesis(String),

    #[error("protocol: {0}")]
    Protocol(String),

    #[error("non-finite state encountered at t = {time}")]
    NonFiniteState { time: f64 },

    #[error("simulation: {0}")]
    Simulation(String),

    #[error("scenario field `{field}`: {msg}")]
    Scenario { field: String, msg: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn scenario(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Scenario {
            field: field.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

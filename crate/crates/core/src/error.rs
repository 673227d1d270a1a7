use std::path::PathBuf;

/// Broad failure class, used by front-ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Malformed, missing or inconsistent input.
    Input,
    /// A numerical routine failed to produce a usable answer.
    Numeric,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("face {face} references vertex {index} but the mesh has {vertex_count} vertices")]
    FaceIndex {
        face: usize,
        index: usize,
        vertex_count: usize,
    },

    #[error("face {face} is degenerate (area {area:e})")]
    DegenerateFace { face: usize, area: f64 },

    #[error("edge ({0}, {1}) borders more than two faces")]
    NonManifoldEdge(usize, usize),

    #[error("edge ({0}, {1}) is traversed in the same direction by two faces")]
    InconsistentOrientation(usize, usize),

    #[error("mesh is not connected ({components} components)")]
    Disconnected { components: usize },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid barycentric point on face {face}: {weights:?}")]
    InvalidBarycentric { face: usize, weights: [f64; 3] },

    #[error("index {index} out of range for {what} of size {len}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("requested {requested} basis functions but only {available} are available")]
    BasisTooSmall { requested: usize, available: usize },

    #[error("eigensolver did not converge for eigenpair {index}")]
    EigenNoConvergence { index: usize },

    #[error("sparse factorization failed: {0}")]
    Factorization(String),

    #[error("global ARAP system is singular: add anchors or pin a vertex")]
    SingularArapSystem,

    #[error("selection is not repaired: unselected face {face} borders {count} selected faces")]
    UnrepairedSelection { face: usize, count: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::EigenNoConvergence { .. }
            | Error::Factorization(_)
            | Error::SingularArapSystem => ErrorCategory::Numeric,
            _ => ErrorCategory::Input,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use std::fmt;
use std::path::PathBuf;

/// Errors produced anywhere in the mesh → model → dynamics pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    InvalidArgument(String),
    /// Mesh text could not be parsed. `line` is 1-based.
    Parse { line: usize, message: String },
    /// A triangle references a node index that does not exist.
    DanglingNode { element: usize, node: usize, n_nodes: usize },
    /// A triangle has (numerically) zero area.
    ZeroArea { element: usize },
    /// A triangle repeats a node.
    RepeatedNode { element: usize },
    InvalidElement { element: usize, message: String },
    UnknownGroup(String),
    ConflictingConstraint { node: usize, message: String },
    DimensionMismatch { expected: usize, found: usize, what: &'static str },
    Numerical(String),
    IntegrationFailure { step: usize, time: f64 },
    Io { path: PathBuf, message: String },
    Config { field: String, message: String },
    /// An error raised inside a named pipeline stage.
    Stage { stage: &'static str, source: Box<Error> },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config { field: field.into(), message: msg.into() }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage { stage, source: Box::new(e) },
        }
    }

    /// Process exit code: 1 for validation problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) | Error::IntegrationFailure { .. } => 2,
            Error::Stage { source, .. } => source.exit_code(),
            _ => 1,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(m) => write!(f, "invalid argument: {m}"),
            Error::Parse { line, message } => write!(f, "parse error at line {line}: {message}"),
            Error::DanglingNode { element, node, n_nodes } => write!(
                f,
                "element {element} references node {node} but the mesh has {n_nodes} nodes"
            ),
            Error::ZeroArea { element } => write!(f, "element {element} has zero area"),
            Error::RepeatedNode { element } => write!(f, "element {element} repeats a node"),
            Error::InvalidElement { element, message } => {
                write!(f, "invalid element {element}: {message}")
            }
            Error::UnknownGroup(g) => write!(f, "unknown edge group '{g}'"),
            Error::ConflictingConstraint { node, message } => {
                write!(f, "conflicting constraint at node {node}: {message}")
            }
            Error::DimensionMismatch { expected, found, what } => {
                write!(f, "dimension mismatch for {what}: expected {expected}, found {found}")
            }
            Error::Numerical(m) => write!(f, "numerical failure: {m}"),
            Error::IntegrationFailure { step, time } => {
                write!(f, "integration produced a non-finite state at step {step} (t = {time})")
            }
            Error::Io { path, message } => write!(f, "{}: {message}", path.display()),
            Error::Config { field, message } => write!(f, "config field '{field}': {message}"),
            Error::Stage { stage, source } => write!(f, "stage '{stage}': {source}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Stage { source, .. } => Some(source.as_ref()),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

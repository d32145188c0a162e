use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unsupported nonsmooth composition: {0}")]
    UnsupportedComposition(String),

    #[error("variable {name}{index} out of range for dimension {n}")]
    IndexOutOfRange { name: char, index: usize, n: usize },

    #[error("domain error at t = {t}: {what}")]
    Domain { what: &'static str, t: f64 },

    #[error("domain error at node {node}: {source}")]
    AtNode {
        node: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("not subdifferentiable at t = {t}: {what}")]
    NotSubdifferentiable { what: &'static str, t: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("grid mismatch between trajectories")]
    GridMismatch,

    #[error("horizon mismatch: {0} vs {1}")]
    HorizonMismatch(f64, f64),

    #[error("penalty term `{0}` is disabled for this problem")]
    PenaltyDisabled(&'static str),

    #[error("min-norm point not certified at node {node} (gap {gap:e})")]
    NotCertified { node: usize, gap: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("problem file line {line}: {msg}")]
    ProblemFile { line: usize, msg: String },
}

impl Error {
    pub(crate) fn at_node(self, node: usize) -> Self {
        Error::AtNode {
            node,
            source: Box::new(self),
        }
    }
}

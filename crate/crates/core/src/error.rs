use thiserror::Error;

use crate::varspace::VarSet;

/// Errors raised by the kernel, logic and CI layers.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid variable name `{0}`")]
    InvalidName(String),
    #[error("lists are not permutations of each other: {src:?} vs {dst:?}")]
    NotAPermutation { src: Vec<String>, dst: Vec<String> },
    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),
    #[error("endpoint mismatch: {left:?} vs {right:?}")]
    EndpointMismatch { left: Vec<String>, right: Vec<String> },
    #[error("variable `{0}` has no object under the assignment")]
    UnknownVariable(String),
    #[error("{sub} is not a subset of {sup}")]
    NotASubset { sub: VarSet, sup: VarSet },
    #[error("conditional does not reassemble to the original morphism")]
    ReassemblyFailed,
    #[error("relation row has an empty image")]
    EmptyImage,
    #[error("overlap violation: {left} vs {right}")]
    OverlapViolation { left: VarSet, right: VarSet },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("singular conditioning block")]
    SingularBlock,
    #[error("type error in diagram term `{term}`: {reason}")]
    TypeError { term: String, reason: String },
    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),
    #[error("search budget exceeded: {0}")]
    Budget(String),
    #[error("sequential composition undefined: cod {cod} differs from dom {dom}")]
    SeqUndefined { cod: VarSet, dom: VarSet },
    #[error("parallel composition undefined: domains meet in {doms}, codomains meet in {cods}")]
    ParUndefined { doms: VarSet, cods: VarSet },
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("ill-shaped query: {0}")]
    ShapeError(String),
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("file error: {0}")]
    File(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A located syntax error.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{line}:{column}: {message}; expected one of {}", expected.join(", "))]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub expected: Vec<String>,
}

impl ParseError {
    pub(crate) fn at(src: &str, offset: usize, message: impl Into<String>, expected: &[&str]) -> Self {
        let before = &src[..offset.min(src.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        let mut expected: Vec<String> = expected.iter().map(|s| s.to_string()).collect();
        expected.sort();
        expected.dedup();
        ParseError { line, column, message: message.into(), expected }
    }
}

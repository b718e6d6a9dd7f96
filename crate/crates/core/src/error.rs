use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("family exceeds the cap of {cap} sets")]
    CapExceeded { cap: usize },

    #[error("no generators given")]
    EmptyGenerators,

    #[error("a family needs at least one member")]
    EmptyFamily,

    #[error("universe size must be positive")]
    EmptyUniverse,

    #[error("set over universe {found} does not match universe {expected}")]
    UniverseMismatch { expected: usize, found: usize },

    #[error("element {element} is outside [1, {n}]")]
    ElementOutOfRange { element: usize, n: usize },

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("family has no nonempty member")]
    NoNonemptySet,

    #[error("family has {size} member(s); log2|F| must be positive")]
    DegenerateFamily { size: usize },

    #[error("unknown reference family {0:?} (expected \"triple\" or \"chain\")")]
    UnknownName(String),

    #[error("bad universe size {n}: {reason}")]
    BadN { n: usize, reason: &'static str },

    #[error("invalid block parameters: {0}")]
    InvalidParams(String),

    #[error("m must be at least 2, got {0}")]
    BadM(usize),

    #[error("no feasible (k, m, s) for n_target = {n_target}; smallest feasible n_target is {smallest}")]
    Infeasible { n_target: usize, smallest: usize },

    #[error("band check needs at least 3 records, got {0}")]
    TooFewRecords(usize),

    #[error("internal inconsistency: {0}")]
    Inconsistent(String),

    #[error("theta ratio undefined: {0}")]
    UndefinedRatio(String),
}

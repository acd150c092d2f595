use thiserror::Error;

/// Errors produced by parsing, preprocessing, model construction and solving.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown gate name `{0}`")]
    UnknownGate(String),

    #[error("matrix dimension mismatch ({left} vs {right})")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix is not unitary (max deviation {max_dev:.3e})")]
    NonUnitary { max_dev: f64 },

    #[error("numerical routine failed to converge: {0}")]
    Numerical(String),

    #[error("gate {uid} acts outside the block's qubit pair")]
    ForeignQubit { uid: usize },

    #[error("no cost entry for gate `{0}`")]
    MissingCost(String),

    #[error("gate `{0}` has no translation into the target basis")]
    Untranslatable(String),

    #[error("invalid cost model: {0}")]
    InvalidCostModel(String),

    #[error("substitution rule rejected: {0}")]
    InvalidRule(String),

    #[error("dependency graph contains a cycle")]
    CyclicDependency,

    #[error("model references unknown block {0}")]
    DanglingBlock(usize),

    #[error("substitutions {0} and {1} conflict")]
    ConflictViolation(usize, usize),

    #[error("instance too large for the exact solver: {0}")]
    InstanceTooLarge(String),

    #[error("density-matrix simulation supports at most {limit} qubits, got {got}")]
    SimTooLarge { got: usize, limit: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unsupported entangler `{0}` for synthesis")]
    UnsupportedEntangler(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

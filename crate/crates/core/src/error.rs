use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error("duplicate vertex `{0}`")]
    DuplicateVertex(String),
    #[error("duplicate edge name `{0}`")]
    DuplicateEdge(String),
    #[error("edge `{edge}` references undeclared vertex `{vertex}`")]
    DanglingVertex { edge: String, vertex: String },
    #[error("vertex `{0}` is a sink (out-degree 0) and boundary sinks are not allowed")]
    Sink(String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("unknown edge `{0}`")]
    UnknownEdge(String),
    #[error("unknown graph template `{0}`")]
    UnknownTemplate(String),
    #[error("unsupported predicate: {0}")]
    UnsupportedPredicate(String),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("not a left lower set; missing left factors: {}", format_pairs(.0))]
    NotLowerSet(Vec<(String, String)>),
    #[error("depth must be at least 1, got {0}")]
    InvalidDepth(usize),
    #[error("Fock space dimension {dim} exceeds the cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("margin {margin} exceeds truncation depth {depth}")]
    MarginExceedsDepth { margin: usize, depth: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operators belong to different Fock spaces")]
    SpaceMismatch,
    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("vector is not wandering: images under `{first}` and `{second}` overlap by {overlap:e}")]
    NotWandering {
        first: String,
        second: String,
        overlap: f64,
    },
    #[error("vector is not supported on a single vertex")]
    NotVertexSupported,
    #[error("vector must have unit norm, got {0}")]
    NotNormalized(f64),
    #[error("(†) relations fail: {0}")]
    DaggerFailure(String),
    #[error("intertwiner basis mismatch: {0}")]
    BasisMismatch(String),
    #[error("realization needs an ampliation of order {0}")]
    AmpliationRequired(usize),
    #[error("operator is not in the algebra: commutation defect {0:e}")]
    NotInAlgebra(f64),
    #[error("left ideals are not supported: WOT-closed left ideals have no range/lattice description")]
    LeftIdeal,
    #[error("subspace is not invariant: {0}")]
    NotInvariant(String),
    #[error("operator is not a member of the ideal (defect {0:e})")]
    NotMember(f64),
    #[error("Fourier coefficients unavailable for this operator")]
    NoFourier,
    #[error("lower set does not reach level {needed} (maximum length {available})")]
    InsufficientDepth { needed: usize, available: usize },
    #[error("lower set reaches the truncation boundary: level {level} > depth {depth}")]
    TruncationBoundary { level: usize, depth: usize },
    #[error("interpolation data does not match the lower set: {0}")]
    DataMismatch(String),
    #[error("norm chain violated: {0}")]
    ChainViolated(String),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of numerical certification rather than bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::NotWandering { .. }
                | Error::NotNormalized(_)
                | Error::DaggerFailure(_)
                | Error::BasisMismatch(_)
                | Error::AmpliationRequired(_)
                | Error::NotInAlgebra(_)
                | Error::NotInvariant(_)
                | Error::NotMember(_)
                | Error::ChainViolated(_)
                | Error::InvariantViolation(_)
        )
    }
}

fn format_pairs(pairs: &[(String, String)]) -> String {
    pairs
        .iter()
        .map(|(w, u)| format!("{u} (of {w})"))
        .collect::<Vec<_>>()
        .join(", ")
}

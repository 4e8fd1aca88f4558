use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the nonlocal decomposition pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid mesh parameters: {0}")]
    InvalidMeshParameters(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("element {0} is degenerate")]
    DegenerateElement(usize),
    #[error("node {index} out of range for a mesh with {count} nodes")]
    NodeOutOfRange { index: usize, count: usize },
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("fractional kernel evaluated at coincident points")]
    SingularKernel,
    #[error("no interacting element pairs")]
    NoInteractions,
    #[error("invalid quadrature order {0}")]
    InvalidQuadratureOrder(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not symmetric positive definite (breakdown at row {row})")]
    NotSpd { row: usize },
    #[error("iterative solve stalled after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("partition block {block} owns no elements")]
    EmptyBlock { block: usize },
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("subdomain {subdomain}: Dirichlet node {node} touches the subdomain but no collar element")]
    CollarDeficiency { subdomain: usize, node: usize },
    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),
    #[error("{} interacting pairs share no subdomain", pairs.len())]
    CoverageViolation { pairs: Vec<(usize, usize)> },
    #[error("decomposition coverage has not been verified")]
    CoverageNotVerified,
    #[error("index inconsistency: {0}")]
    IndexInconsistency(String),
    #[error("constraint check failed at row {row}: {reason}")]
    ConstraintCheck { row: usize, reason: String },
    #[error("redundant constraints make the KKT matrix singular; build them in non-redundant mode")]
    RedundantKkt,
    #[error("KKT system is singular (breakdown at pivot {pivot})")]
    SingularKkt { pivot: usize },
    #[error("solve residual {residual:e} exceeds tolerance {tolerance:e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

use thiserror::Error;

use crate::graph::Edge;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("graph must have at least one vertex")]
    EmptyGraph,
    #[error("vertex {vertex} out of range for a graph with {count} vertices")]
    VertexOutOfRange { vertex: usize, count: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {0}")]
    DuplicateEdge(Edge),
    #[error("edge {edge} has non-positive or non-finite weight {weight}")]
    InvalidWeight { edge: Edge, weight: f64 },
    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },
    #[error("domain with label {label} does not induce a connected subgraph")]
    DisconnectedDomain { label: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    ConvergenceFailure { sweeps: usize, off_norm: f64 },
    #[error("spectral index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("component {vertex} of the vector is (numerically) zero")]
    ZeroComponent { vertex: usize },
    #[error("eigenpair {index} is degenerate: {reason}")]
    DegenerateEigenpair { index: usize, reason: String },
    #[error("edge {0} is not present in the current factor")]
    MissingEdge(Edge),
    #[error("removing edge {0} disconnects the factor")]
    Disconnects(Edge),
    #[error("|alpha| = {0:e} is below the admissible minimum")]
    AlphaNearZero(f64),
    #[error("branch {branch} is not simple at alpha = {alpha}")]
    DegenerateBranch { branch: usize, alpha: f64 },
    #[error("no critical point of branch {branch} found for alpha of sign {sign}")]
    NoCriticalPoint { branch: usize, sign: i8 },
    #[error("degenerate bookkeeping data at edge {edge}: {reason}")]
    DegenerateData { edge: Edge, reason: String },
    #[error("bookkeeping identity violated at edge {edge}: dl - dnu = {lhs}, M - dn = {rhs}")]
    BookkeepingViolation { edge: Edge, lhs: i64, rhs: i64 },
    #[error("degenerate intermediate eigenvector at step {step} (edge {edge}): {reason}")]
    IntermediateDegeneracy {
        step: usize,
        edge: Edge,
        reason: String,
    },
    #[error("partition graph is not a tree")]
    NotTreePartition,
    #[error("not an equipartition: {0}")]
    NotEquipartition(String),
    #[error("no equipartition found in the negative orthant")]
    NotFound,
    #[error("chart left: {0}")]
    ChartLeft(String),
    #[error("not a critical point: gradient norm {0:e}")]
    NotCritical(f64),
    #[error("degenerate Hessian: eigenvalues {0:?}")]
    DegenerateHessian(Vec<f64>),
    #[error("Morse index disagreement: {0}")]
    Disagreement(Box<crate::morse::MorseReport>),
    #[error("instance too large for brute force: {size} > {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// True for failures caused by (near) degeneracy or non-convergence rather
    /// than by invalid input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ConvergenceFailure { .. }
                | Error::ZeroComponent { .. }
                | Error::DegenerateEigenpair { .. }
                | Error::DegenerateBranch { .. }
                | Error::NoCriticalPoint { .. }
                | Error::DegenerateData { .. }
                | Error::IntermediateDegeneracy { .. }
                | Error::NotFound
                | Error::ChartLeft(_)
                | Error::NotCritical(_)
                | Error::DegenerateHessian(_)
        )
    }
}

use thiserror::Error;

/// Errors surfaced by graph construction, prox evaluation, the solvers and
/// the metrics layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("adjacency matrix is not symmetric at ({row}, {col})")]
    AsymmetricAdjacency { row: usize, col: usize },

    #[error("adjacency matrix has a self-loop at agent {agent}")]
    SelfLoop { agent: usize },

    #[error("graph is disconnected: {} components with sizes {component_sizes:?}", component_sizes.len())]
    Disconnected { component_sizes: Vec<usize> },

    #[error("link weight rho[{from}][{to}] = {value} must be positive")]
    NonpositiveLinkWeight { from: usize, to: usize, value: f64 },

    #[error("agents {a} and {b} share the same coordinates; k-NN needs distinct points")]
    DuplicateCoordinates { a: usize, b: usize },

    #[error("k-NN needs more agents than neighbors: K = {agents}, k = {k_neighbors}")]
    TooFewAgents { agents: usize, k_neighbors: usize },

    #[error("invalid prox problem: {reason}")]
    InvalidProxProblem { reason: String },

    #[error("invalid regularizer: {reason}")]
    InvalidRegularizer { reason: String },

    #[error(
        "oracle search interval [{lo}, {hi}] does not cover the required span [{need_lo}, {need_hi}]"
    )]
    OracleInterval {
        lo: f64,
        hi: f64,
        need_lo: f64,
        need_hi: f64,
    },

    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("smoothness parameter tau = {tau} must be positive")]
    NonpositiveTau { tau: f64 },

    #[error("invalid solver configuration: {reason}")]
    InvalidSolverConfig { reason: String },

    #[error("non-finite iterate at agent {agent}, iteration {iteration}")]
    NonFiniteIterate { agent: usize, iteration: usize },

    #[error("step size mu = {mu} violates the stability bound {bound} = {limit} at agent {agent}")]
    UnstableStepSize {
        mu: f64,
        bound: &'static str,
        limit: f64,
        agent: usize,
    },

    #[error("reference solver requires a convex co-regularizer, got {kind}")]
    NonConvexReference { kind: &'static str },

    #[error(
        "reference solver stopped after {iterations} iterations with residual {residual:e} > tolerance {tolerance:e}"
    )]
    ReferenceDidNotConverge {
        tolerance: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("learning curve has {len} values, shorter than the window {window}")]
    WindowTooLong { len: usize, window: usize },

    #[error("curve value {value} at index {index} is not positive; dB undefined")]
    NonpositiveCurveValue { index: usize, value: f64 },

    #[error(
        "steady-state window not settled: half-window levels differ by {diff_db:.4} dB (limit {limit_db} dB)"
    )]
    SteadyStateNotSettled { diff_db: f64, limit_db: f64 },

    #[error("empty test set for agent {agent}")]
    EmptyTestSet { agent: usize },

    #[error("trajectory data malformed: {reason}")]
    TrajectoryFormat { reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

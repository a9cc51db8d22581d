use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("qubit count {0} is outside the supported range 1..=24")]
    InvalidQubitCount(usize),

    #[error("qubit index {qubit} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },

    #[error("CNOT control and target are both qubit {0}")]
    CnotSameQubit(usize),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("shape mismatch: expected {expected} entries, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("x = {0} lies outside [0, 1]")]
    OutsideDomain(f64),

    #[error("x = {x} is closer than the stencil step {h} to a boundary")]
    StencilOutsideDomain { x: f64, h: f64 },

    #[error("trial value {0} exceeds the divergence guard")]
    Divergence(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid predictor: {0}")]
    InvalidPredictor(String),

    #[error("lambda = {lambda} has no solution (critical value {critical})")]
    BeyondFold { lambda: f64, critical: f64 },

    #[error("lambda must be positive, got {0}")]
    NonPositiveLambda(f64),

    #[error("singular Jacobian at lambda = {lambda} (pivot {pivot:e} in row {row})")]
    SingularJacobian { lambda: f64, row: usize, pivot: f64 },

    #[error("Newton did not converge at lambda = {lambda} after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { lambda: f64, iterations: usize, residual: f64 },

    #[error("arc-length corrector failed after {retries} step reductions (last step {delta_s:e})")]
    ContinuationFailed { retries: usize, delta_s: f64 },

    #[error("duplicate point on the {branch} branch at lambda = {lambda}")]
    DuplicatePoint { branch: String, lambda: f64 },

    #[error("branch ordering violated at lambda = {lambda}: upper u_max {upper} <= lower u_max {lower}")]
    BranchOrdering { lambda: f64, upper: f64, lower: f64 },
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid field profile: {0}")]
    InvalidProfile(String),
    #[error("field profile has unbounded total flux; only lattice oracle runs accept it")]
    UnboundedFlux,
    #[error("total flux is not finite ({0})")]
    NonFiniteFlux(f64),
    #[error("zero flux: no zero-mode branch is defined for Φ = 0")]
    ZeroFlux,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field support radius {support:.6} exceeds L/3 = {limit:.6}")]
    SupportTooLarge { support: f64, limit: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("asymptotic zone holds {nodes} nodes, at least {required} are needed")]
    ZoneTooSmall { nodes: usize, required: usize },
    #[error("expression still carries e^λ factors; fold it into the asymptotic regime first")]
    NotAsymptotic,
    #[error("branch mismatch: field strength {b} is inconsistent with the {branch} flux branch")]
    BranchMismatch { b: f64, branch: &'static str },
    #[error("empty expression has no tail exponent")]
    EmptyExpression,
    #[error("point ({x}, {y}) lies outside the grid domain")]
    OutOfDomain { x: f64, y: f64 },
    #[error("test function does not vanish within {band} nodes of the boundary (max |f| there = {value:e})")]
    SupportTouchesBoundary { band: usize, value: f64 },
    #[error("state has zero norm")]
    NullState,
    #[error("operator with n² = {size} exceeds the assembly cap {cap}")]
    CapExceeded { size: usize, cap: usize },
    #[error("invalid eigensolver request: {0}")]
    InvalidRequest(String),
    #[error("sparse factorization of H − σ failed at σ = {sigma}: {reason}")]
    Factorization { sigma: f64, reason: String },
    #[error(
        "eigensolver did not converge after {iterations} iterations (max residual {residual:e}, tolerance {tolerance:e})"
    )]
    ConvergenceFailure { iterations: usize, residual: f64, tolerance: f64 },
    #[error("malformed grid file: {0}")]
    GridFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

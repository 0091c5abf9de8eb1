use thiserror::Error;

/// Errors raised by the geometry, functional and solver layers.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("Kähler condition violated at node {node} (x = {x:.4}): density {density:.3e}")]
    KahlerConditionViolated { node: usize, x: f64, density: f64 },
    #[error("grid mismatch: expected {expected} nodes, got {found}")]
    GridMismatch { expected: usize, found: usize },
    #[error("trusted interior is empty")]
    BoundaryUntrusted,
    #[error("convention mismatch in {quantity}: observed order {order:.3}")]
    ConventionMismatch { quantity: String, order: f64 },
    #[error("path leaves the Kähler cone at parameter {t:.4}")]
    PathLeavesKahlerCone { t: f64 },
    #[error("torus minimization hit the search boundary at s = {s:.4}")]
    MinimizerAtBoundary { s: f64 },
    #[error("Gram matrix of affine functions is degenerate (det = {det:.3e})")]
    DegenerateGram { det: f64 },
    #[error("Legendre transform failed: {0}")]
    LegendreFailure(String),
    #[error("assembled operator disagrees with finite differences: relative error {rel:.3e}")]
    AssemblyMismatch { rel: f64 },
    #[error("linearization is singular on the constrained subspace")]
    SingularLinearization,
    #[error("damped line search failed to decrease the residual ({residual:.3e})")]
    DampingFailed { residual: f64 },
    #[error("first eigenvalue {lambda:.3e} is not negative; increase r")]
    EigenvalueNonNegative { lambda: f64 },
    #[error("step size underflow at t = {t:.6} (dt = {dt:.3e})")]
    StepUnderflow { t: f64, dt: f64 },
    #[error("diagnostic {quantity} out of bounds at t = {t:.6}: {value:.3e}")]
    DiagnosticsBlowUp { t: f64, quantity: String, value: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

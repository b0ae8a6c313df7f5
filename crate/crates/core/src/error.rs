use thiserror::Error;

/// Crate-wide error type. Every fallible operation returns [`Result`].
#[derive(Debug, Error)]
pub enum Error {
    /// Metric determinant below the singularity threshold at the evaluation point.
    #[error("degenerate metric: |det g| = {det:.3e} at the evaluation point")]
    DegenerateMetric { det: f64 },

    /// Metric components violate a structural requirement (symmetry, signature, shape).
    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    /// Path violates a structural or domain requirement.
    #[error("invalid path: {0}")]
    InvalidPath(String),

    /// An iterative solver ran out of budget before reaching its tolerance.
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    ConvergenceFailure { residual: f64, iterations: usize },

    /// Union of two paths whose endpoints do not meet.
    #[error("paths do not continue: terminal and initial nodes differ by {gap:.3e}")]
    NonContinuing { gap: f64 },

    /// Two-branch comparison paths whose endpoints do not match.
    #[error("branch paths do not close: endpoint mismatch {gap:.3e}")]
    NonClosing { gap: f64 },

    /// Operation restricted to positive-definite metrics got something else.
    #[error("unsupported signature: {0}")]
    UnsupportedSignature(String),

    /// Quadrature domain too small for the requested damping tail bound.
    #[error("insufficient quadrature domain: radius {radius} < required {required:.3}")]
    InsufficientDomain { radius: f64, required: f64 },

    /// Sampled region intersects a potential's singular point.
    #[error("invalid region: {0}")]
    InvalidRegion(String),

    /// Quadrature refinement would exceed the resolution cap.
    #[error("resolution limit: upsample factor {required} exceeds cap {cap}")]
    Resolution { required: usize, cap: usize },

    /// Monte Carlo run accepted no samples.
    #[error("degenerate statistics: no samples accepted")]
    DegenerateStatistics,

    /// Malformed or out-of-range configuration input.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: ({r1}x{c1}) vs ({r2}x{c2})")]
    ShapeMismatch { r1: usize, c1: usize, r2: usize, c2: usize },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not unitary: residual {residual:.3e} exceeds {tol:.1e}")]
    NotUnitary { residual: f64, tol: f64 },

    #[error("matrix is not a projector: residual {residual:.3e} exceeds {tol:.1e}")]
    NotProjector { residual: f64, tol: f64 },

    #[error("matrix is not skew-Hermitian: residual {residual:.3e} exceeds {tol:.1e}")]
    NotSkewHermitian { residual: f64, tol: f64 },

    #[error("trace must vanish, got magnitude {magnitude:.3e}")]
    NonzeroTrace { magnitude: f64 },

    #[error("dimension must be at least 1")]
    EmptyDimension,

    #[error("entries must be finite")]
    NonFiniteEntries,

    #[error("marked set invalid for n={n}: {reason}")]
    InvalidMarkedSet { n: usize, reason: String },

    #[error("state vector must have unit norm, got {norm}")]
    NonUnitKet { norm: f64 },

    #[error("degenerate instance: q0={q0} gives gamma0={gamma0:.3e}; the Grover plane is undefined")]
    DegenerateInstance { q0: f64, gamma0: f64 },

    #[error("tangent matrix lies outside span{{X0,Y0}}: residual {residual:.3e} exceeds {tol:.1e}")]
    OutOfPlane { residual: f64, tol: f64 },

    #[error("Gram matrix of (X0,Y0) is singular")]
    DegenerateGram,

    #[error("stationarity violation at f={f}: gradient norm {grad_norm:.3e} is below {tol:.1e} but f is not near {{0,1}}")]
    StationarityViolation { f: f64, grad_norm: f64, tol: f64 },

    #[error("candidate product is malformed: {0}")]
    MalformedCandidate(String),

    #[error("coefficient expression error: {0}")]
    Expr(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("ascent smoothness violation at iteration {iter}: f dropped by {drop:.3e}")]
    SmoothnessViolation { iter: u64, drop: f64 },

    #[error("engine mismatch at iteration {iter}: |q_plane - q_dense| = {delta:.3e} exceeds {tol:.1e}")]
    EngineMismatch { iter: u64, delta: f64, tol: f64 },

    #[error("trace has too few records: {0}")]
    TooFewRecords(usize),

    #[error("trace file malformed at row {row}: {msg}")]
    TraceFormat { row: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

//! Numerical tolerances used across the crate.
//!
//! Double precision carries ~15.9 significant digits; the working dimensions
//! here (N <= 1024) accumulate rounding well below the structural thresholds.

/// Default tolerance for structural checks (unitary / Hermitian / projector).
pub const STRUCTURAL: f64 = 1e-10;

/// Tolerance for closed-form identities that hold exactly in exact arithmetic
/// (projector exponential vs eigendecomposition, Gram reconstruction, ...).
pub const EXACT: f64 = 1e-12;

/// Plane residuals along factor-product trajectories: off-plane mass of the
/// iterate ket and the tangent residual of its gradient.
pub const PLANE_RESIDUAL: f64 = 1e-9;

/// Agreement required between the dense and plane engines on q at every step.
pub const ENGINE_AGREEMENT: f64 = 1e-9;

/// Slack on the gradient norm identity ||[H, psi_U]||_F = sqrt(2 q (1-q)).
pub const GRAD_IDENTITY: f64 = 1e-9;

/// Residual gate for tangent coordinates fed to the product retraction.
pub const OUT_OF_PLANE: f64 = 1e-8;

/// gamma0 below this flags the instance as degenerate (q0 at {0,1}); the
/// one-shot step and the Grover plane are undefined there.
pub const DEGENERATE_GAMMA: f64 = 1e-7;

/// Gap required of a one-shot exponential step.
pub const ONE_SHOT_GAP: f64 = 1e-10;

/// Allowed upward roundoff of f past [0,1] before clamping is refused.
pub const OBJECTIVE_SLACK: f64 = 1e-9;

/// Allowed decrease of f on a fixed-step ascent step before the run aborts.
pub const MONOTONE_SLACK: f64 = 1e-9;

/// Skew-Hermitian gate used by the structured exponential, relative to norm.
pub const SKEW_GATE: f64 = 1e-8;

/// Zero-diagonal similarity: target magnitude for the largest diagonal entry.
pub const ZERO_DIAG: f64 = 1e-13;

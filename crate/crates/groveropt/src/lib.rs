//! Riemannian gradient optimization view of Grover search on the unitary
//! group U(N).
//!
//! The objective f(U) = Tr(H U psi0 U^H) measures the overlap of the evolved
//! state with the range of an orthogonal projector H. This crate provides:
//!
//! - dense complex linear algebra with structured exponentials ([`linalg`]),
//! - the search instance, its Riemannian gradient [H, psi_U], and the
//!   invariant 2D Grover plane ([`problem`]),
//! - the exact exponential step and the 5-factor product retraction with its
//!   first/second-order bound ratios ([`retraction`]),
//! - a machine-checkable candidate-product tester for the P1-P3 retraction
//!   properties ([`candidate`]),
//! - O(1)-per-step scalar recursions equivalent to the dense dynamics
//!   ([`plane`]),
//! - gradient ascent with pluggable retraction/step policy, Lipschitz
//!   estimation, and the two iteration bounds ([`optimizer`]),
//! - theorem-keyed verification suites ([`verify`]).

pub mod candidate;
pub mod error;
pub mod linalg;
pub mod optimizer;
pub mod plane;
pub mod problem;
pub mod retraction;
pub mod tol;
pub mod verify;

pub use error::{Error, Result};

//! Dense complex linear algebra: matrices, vectors, Frobenius geometry,
//! commutators, structured exponentials, and structural validators.

mod matrix;
mod structure;

pub use matrix::{commutator, frobenius_inner, frobenius_norm, CMatrix, CVector};
pub use structure::{
    expm_hermitian_eig, expm_skew, hermitian_residual, is_hermitian, is_projector, is_unitary,
    projector_exponential, projector_residual, random_unitary, skew_residual,
    unitarity_residual, zero_diagonal_similarity,
};

//! Self-contained dense linear algebra for small real matrices: products,
//! factorizations, eigenvalues, singular values, and the matrix exponential.
//!
//! Norms default to the operator norm induced by the Euclidean vector norm.

mod eig;
mod expm;
mod matrix;
mod qr;
mod solve;
mod svd;

pub use eig::{eigenvalues, MAX_EIG_DIM};
pub(crate) use expm::scaled_mul;
pub use expm::{expm, expm_normalized};
pub use matrix::Matrix;
pub use qr::qr;
pub use solve::{det, solve, Lu};
pub use svd::{svd, symmetric_eigen, Svd};

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("data length mismatch: expected {expected}, got {got}")]
    BadData { expected: usize, got: usize },
    #[error("non-finite value {0} in input")]
    NonFinite(f64),
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("dimension {dim} exceeds supported maximum {max}")]
    DimensionTooLarge { dim: usize, max: usize },
    #[error("iteration failed to converge")]
    NoConvergence,
}

/// Eigenvalues and singular values of a square matrix.
#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<Complex64>,
    /// Nonincreasing.
    pub singular_values: Vec<f64>,
}

/// Computes eigenvalues and singular values together.
pub fn spectrum(a: &Matrix) -> Result<SpectrumResult, LinalgError> {
    Ok(SpectrumResult {
        eigenvalues: eigenvalues(a)?,
        singular_values: svd(a).sigma,
    })
}

/// Largest singular value (the Euclidean-induced operator norm).
pub fn operator_norm(a: &Matrix) -> f64 {
    if a.rows() == 0 || a.cols() == 0 {
        return 0.0;
    }
    svd(a).sigma[0]
}

/// Maximum eigenvalue modulus.
pub fn spectral_radius(a: &Matrix) -> Result<f64, LinalgError> {
    Ok(eigenvalues(a)?.iter().map(|e| e.norm()).fold(0.0, f64::max))
}

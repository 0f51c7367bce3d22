//! Dense linear algebra substrate.
//!
//! Row-major real and complex matrices, a symmetric eigensolver
//! (Householder tridiagonalization followed by implicit QL), a general real
//! eigensolver (balancing, Hessenberg reduction, Francis double-shift QR) and
//! pivoted LU solves. Everything is written against [`Real`](crate::Real) so
//! the same code runs in `f32` and `f64`.

mod general_eig;
mod matrix;
mod solve;
mod sym_eig;

pub use general_eig::{general_eig, Spectrum, DEFAULT_EIG_TOL};
pub use matrix::{CMatrix, Matrix};
pub use solve::{solve_complex, solve_real};
pub use sym_eig::{sym_eig, SymEigen, DEFAULT_SYM_TOL};

use thiserror::Error;

/// Errors raised by the dense linear algebra routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("data length {got} does not match {rows}x{cols}")]
    InvalidData { rows: usize, cols: usize, got: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not symmetric: |a[{row},{col}] - a[{col},{row}]| = {gap:e}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },
    #[error("singular system: pivot {pivot} has magnitude {magnitude:e}")]
    Singular { pivot: usize, magnitude: f64 },
    #[error("no convergence after {iterations} iterations (active window {lo}..={hi})")]
    NoConvergence { iterations: usize, lo: usize, hi: usize },
    #[error("result failed accuracy check: {what} = {value:e} exceeds {bound:e}")]
    Accuracy { what: &'static str, value: f64, bound: f64 },
}

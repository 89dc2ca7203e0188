//! Pauli and ladder matrices on ℂ².
//!
//! Basis convention: `|0⟩ = (1, 0)`, `|1⟩ = (0, 1)`. The lowering operator is
//! `σ₋ = |0⟩⟨1|`, so `σ₋ + σ₋† = σ_x` and the state annihilated by `σ₋` is `|0⟩`.

use super::matrix::CMatrix;
use crate::scalar::Real;

pub fn sigma_x<T: Real>() -> CMatrix<T> {
    CMatrix::from_pairs(&[&[(0.0, 0.0), (1.0, 0.0)], &[(1.0, 0.0), (0.0, 0.0)]]).unwrap()
}

pub fn sigma_y<T: Real>() -> CMatrix<T> {
    CMatrix::from_pairs(&[&[(0.0, 0.0), (0.0, -1.0)], &[(0.0, 1.0), (0.0, 0.0)]]).unwrap()
}

pub fn sigma_z<T: Real>() -> CMatrix<T> {
    CMatrix::from_pairs(&[&[(1.0, 0.0), (0.0, 0.0)], &[(0.0, 0.0), (-1.0, 0.0)]]).unwrap()
}

/// `σ₋ = |0⟩⟨1|`.
pub fn sigma_minus<T: Real>() -> CMatrix<T> {
    CMatrix::unit(2, 0, 1)
}

/// `σ₊ = |1⟩⟨0|`.
pub fn sigma_plus<T: Real>() -> CMatrix<T> {
    CMatrix::unit(2, 1, 0)
}

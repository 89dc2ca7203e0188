//! Matrix exponential by scaling and squaring of a truncated Taylor series.

use super::matrix::CMatrix;
use crate::error::{Error, Result};
use crate::scalar::{re, Real};

const MAX_TERMS: usize = 40;

/// `e^A` for a square matrix `A`.
///
/// `A` is scaled by `2^-s` until its 1-norm is at most 1/2, the series is summed
/// until the next term is below machine precision relative to the partial sum,
/// and the result is squared `s` times.
pub fn matrix_exp<T: Real>(a: &CMatrix<T>) -> Result<CMatrix<T>> {
    let n = a.require_square("matrix_exp input")?;
    if !a.is_finite() {
        return Err(Error::NonFinite("matrix_exp input"));
    }
    let norm = a.norm_one();
    let mut squarings = 0i32;
    if norm > T::lit(0.5) {
        squarings = (norm / T::lit(0.5)).log2().ceil().to_i32().unwrap_or(0).max(0);
    }
    let scaled = a.scale_real(T::lit(2.0).powi(-squarings));
    let mut sum = CMatrix::identity(n);
    let mut term = CMatrix::identity(n);
    for k in 1..=MAX_TERMS {
        term = (&term * &scaled).scale(re(T::one() / T::from_usize_lossy(k)));
        sum += &term;
        if term.max_abs() <= T::epsilon() * sum.max_abs() * T::lit(0.1) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    Ok(sum)
}

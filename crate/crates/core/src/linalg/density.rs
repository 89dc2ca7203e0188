use super::eigen::min_eigenvalue;
use super::matrix::{require_finite, vec_norm, CMatrix};
use super::ops::trace_norm;
use crate::error::{Error, Result};
use crate::scalar::{re, Real, C};
use crate::tolerance::Tolerances;

/// Hermitian, positive semi-definite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T> {
    matrix: CMatrix<T>,
}

impl<T: Real> DensityMatrix<T> {
    /// Validates against the default [`Tolerances`].
    pub fn new(matrix: CMatrix<T>) -> Result<Self> {
        Self::with_tolerances(matrix, &Tolerances::default())
    }

    pub fn with_tolerances(matrix: CMatrix<T>, tol: &Tolerances<T>) -> Result<Self> {
        matrix.require_square("density matrix")?;
        require_finite(&matrix, "density matrix")?;
        let herm = matrix.hermiticity_defect();
        if herm > tol.hermitian {
            return Err(Error::Contract(format!(
                "density matrix not Hermitian: deviation {herm:e}"
            )));
        }
        let tr = matrix.trace().re;
        if (tr - T::one()).abs() > tol.trace {
            return Err(Error::Contract(format!("density matrix trace {tr} != 1")));
        }
        let lmin = min_eigenvalue(&matrix)?;
        if lmin < -tol.psd {
            return Err(Error::Contract(format!(
                "density matrix not PSD: min eigenvalue {lmin:e}"
            )));
        }
        Ok(Self { matrix })
    }

    /// Wraps without validation; for values produced by trusted, trace-preserving code paths.
    pub fn new_unchecked(matrix: CMatrix<T>) -> Self {
        Self { matrix }
    }

    /// `|ψ⟩⟨ψ|/‖ψ‖²`.
    pub fn pure(psi: &[C<T>]) -> Result<Self> {
        let n = vec_norm(psi);
        if n == T::zero() {
            return Err(Error::Contract("pure state from zero vector".into()));
        }
        let v: Vec<C<T>> = psi.iter().map(|&z| z / re(n)).collect();
        Ok(Self {
            matrix: CMatrix::projector(&v),
        })
    }

    /// `|i⟩⟨i|`.
    pub fn basis(dim: usize, i: usize) -> Self {
        Self {
            matrix: CMatrix::unit(dim, i, i),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim).scale_real(T::one() / T::from_usize_lossy(dim)),
        }
    }

    /// Divides by the trace and symmetrizes; fails on a non-positive trace.
    pub fn normalized(matrix: &CMatrix<T>) -> Result<Self> {
        let tr = matrix.trace().re;
        if tr <= T::zero() {
            return Err(Error::Contract("cannot normalize a matrix with non-positive trace".into()));
        }
        Ok(Self {
            matrix: matrix.hermitian_part().scale_real(T::one() / tr),
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    #[inline]
    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.matrix
    }

    pub fn purity(&self) -> T {
        self.matrix.trace_product_re(&self.matrix)
    }

    /// `Tr(ρ A)`.
    pub fn expectation(&self, a: &CMatrix<T>) -> C<T> {
        (&self.matrix * a).trace()
    }

    pub fn trace_distance(&self, other: &Self) -> Result<T> {
        Ok(trace_norm(&(&self.matrix - &other.matrix))? * T::lit(0.5))
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            matrix: self.matrix.kron(&other.matrix),
        }
    }
}

impl<T> AsRef<CMatrix<T>> for DensityMatrix<T> {
    fn as_ref(&self) -> &CMatrix<T> {
        &self.matrix
    }
}

use crate::error::{dim_err, Error, Result};
use crate::linalg::{require_finite, CMatrix, HermitianEigen};
use crate::scalar::Real;

/// Model operators `(N, H, M)` and the time step `τ`. The space step is always
/// `δ = √τ`; it is derived, never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct OQBMParams<T> {
    n: CMatrix<T>,
    h: CMatrix<T>,
    m: CMatrix<T>,
    tau: T,
}

impl<T: Real> OQBMParams<T> {
    pub fn new(n: CMatrix<T>, h: CMatrix<T>, m: Option<CMatrix<T>>, tau: T) -> Result<Self> {
        let d = n.require_square("N")?;
        if h.rows() != d || h.cols() != d {
            return dim_err(format!("H is {}x{}, N is {d}x{d}", h.rows(), h.cols()));
        }
        let m = m.unwrap_or_else(|| CMatrix::zeros(d, d));
        if m.rows() != d || m.cols() != d {
            return dim_err(format!("M is {}x{}, N is {d}x{d}", m.rows(), m.cols()));
        }
        require_finite(&n, "N")?;
        require_finite(&h, "H")?;
        require_finite(&m, "M")?;
        let herm = h.hermiticity_defect();
        if herm > T::lit(1e-12) {
            return Err(Error::Contract(format!("H is not Hermitian: deviation {herm:e}")));
        }
        if !(tau > T::zero()) || !tau.is_finite() {
            return Err(Error::Domain(format!("time step must be positive, got {tau}")));
        }
        Ok(Self { n, h, m, tau })
    }

    /// Same operators with `M = 0`.
    pub fn without_m(&self) -> Self {
        let d = self.dim();
        Self { m: CMatrix::zeros(d, d), ..self.clone() }
    }

    pub fn with_tau(&self, tau: T) -> Result<Self> {
        Self::new(self.n.clone(), self.h.clone(), Some(self.m.clone()), tau)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n.rows()
    }

    pub fn n(&self) -> &CMatrix<T> {
        &self.n
    }

    pub fn h(&self) -> &CMatrix<T> {
        &self.h
    }

    pub fn m(&self) -> &CMatrix<T> {
        &self.m
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    #[inline]
    pub fn delta(&self) -> T {
        self.tau.sqrt()
    }

    pub fn has_m(&self) -> bool {
        self.m.max_abs() > T::zero()
    }

    /// Spectral radius of `N + N†`, the largest possible drift speed.
    pub fn max_speed(&self) -> T {
        let s = &self.n + &self.n.adjoint();
        HermitianEigen::new(&s)
            .map(|e| e.min().abs().max(e.max().abs()))
            .unwrap_or_else(|_| s.norm_one())
    }
}

//! Kraus channels and their Stinespring form.

use num_traits::Zero;

use crate::error::{dim_err, Error, Result};
use crate::linalg::{partial_trace, CMatrix, DensityMatrix, Subsystem};
use crate::scalar::{Real, C};

/// Unitarity tolerance for Stinespring couplings.
pub const UNITARY_TOL: f64 = 1e-10;

/// CPTP map `ρ ↦ Σ K ρ K†`.
#[derive(Clone, Debug)]
pub struct KrausChannel<T> {
    dim: usize,
    kraus: Vec<CMatrix<T>>,
    completeness_tol: T,
}

impl<T: Real> KrausChannel<T> {
    /// Validates the completeness relation to `completeness_tol` in max-entry norm.
    pub fn new(kraus: Vec<CMatrix<T>>, completeness_tol: T) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::Contract("channel needs at least one Kraus operator".into()))?;
        let dim = first.require_square("Kraus operator")?;
        if let Some(k) = kraus.iter().find(|k| k.rows() != dim || k.cols() != dim) {
            return dim_err(format!("Kraus operator {}x{} in a dim-{dim} channel", k.rows(), k.cols()));
        }
        let ch = Self { dim, kraus, completeness_tol };
        let defect = ch.completeness_defect();
        if !(defect <= completeness_tol) {
            return Err(Error::Contract(format!(
                "Kraus completeness defect {defect:e} exceeds {completeness_tol:e}"
            )));
        }
        Ok(ch)
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, kraus: vec![CMatrix::identity(dim)], completeness_tol: T::lit(1e-12) }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn kraus(&self) -> &[CMatrix<T>] {
        &self.kraus
    }

    pub fn completeness_tol(&self) -> T {
        self.completeness_tol
    }

    /// `‖Σ K†K − I‖_∞`.
    pub fn completeness_defect(&self) -> T {
        let mut s = CMatrix::zeros(self.dim, self.dim);
        for k in &self.kraus {
            s += &(&k.adjoint() * k);
        }
        (&s - &CMatrix::identity(self.dim)).max_abs()
    }

    /// Channel action on an arbitrary (not necessarily normalized) matrix.
    pub fn apply_matrix(&self, rho: &CMatrix<T>) -> Result<CMatrix<T>> {
        if rho.rows() != self.dim || rho.cols() != self.dim {
            return dim_err(format!(
                "channel of dim {} applied to {}x{} matrix",
                self.dim,
                rho.rows(),
                rho.cols()
            ));
        }
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for k in &self.kraus {
            out += &k.sandwich(rho);
        }
        Ok(out)
    }
}

/// `Σ K ρ K†`. The output is not renormalized; its trace differs from one by at
/// most the completeness defect.
pub fn apply_channel<T: Real>(ch: &KrausChannel<T>, rho: &DensityMatrix<T>) -> Result<DensityMatrix<T>> {
    Ok(DensityMatrix::new_unchecked(ch.apply_matrix(rho.matrix())?.hermitian_part()))
}

/// `Tr_p(V (ρ_S ⊗ ρ_p) V†)` with the system factor first.
pub fn stinespring_step<T: Real>(
    rho_s: &DensityMatrix<T>,
    v: &CMatrix<T>,
    rho_p: &DensityMatrix<T>,
) -> Result<DensityMatrix<T>> {
    let (ds, dp) = (rho_s.dim(), rho_p.dim());
    if v.rows() != ds * dp || v.cols() != ds * dp {
        return dim_err(format!("coupling is {}x{}, expected {}", v.rows(), v.cols(), ds * dp));
    }
    let defect = v.unitarity_defect();
    if defect > T::lit(UNITARY_TOL) {
        return Err(Error::Contract(format!("coupling not unitary: defect {defect:e}")));
    }
    let joint = v.sandwich(&rho_s.matrix().kron(rho_p.matrix()));
    let out = partial_trace(&joint, (ds, dp), Subsystem::A)?;
    Ok(DensityMatrix::new_unchecked(out.hermitian_part()))
}

/// `K_k = (I ⊗ ⟨k|) V (I ⊗ |φ⟩)` in the computational basis of the probe.
pub fn extract_kraus<T: Real>(v: &CMatrix<T>, ds: usize, phi: &[C<T>]) -> Result<Vec<CMatrix<T>>> {
    let dp = phi.len();
    if v.rows() != ds * dp || v.cols() != ds * dp {
        return dim_err("extract_kraus: coupling does not act on system ⊗ probe");
    }
    Ok((0..dp)
        .map(|k| {
            CMatrix::from_fn(ds, ds, |a, b| {
                phi.iter()
                    .enumerate()
                    .fold(C::zero(), |acc, (q, &f)| acc + v[(a * dp + k, b * dp + q)] * f)
            })
        })
        .collect())
}

/// `Σ_ij Φ(|i⟩⟨j|) ⊗ |i⟩⟨j|`.
pub fn choi_matrix<T: Real>(ch: &KrausChannel<T>) -> CMatrix<T> {
    let d = ch.dim();
    let mut out = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            let img = ch.apply_matrix(&CMatrix::unit(d, i, j)).expect("dims match");
            out += &img.kron(&CMatrix::unit(d, i, j));
        }
    }
    out
}

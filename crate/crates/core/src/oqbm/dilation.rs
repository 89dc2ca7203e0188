use crate::error::{Error, Result};
use crate::linalg::{ops::embed_outer, partial_trace, trace_norm, CMatrix, Subsystem};
use crate::scalar::{re, Real};

use super::kraus::v_tau;
use super::lattice::{oqbm_step, LatticeField};
use super::params::OQBMParams;

/// Zero sites required at each end of the window.
pub const PADDING_SITES: usize = 2;

/// Cyclic right shift `|i⟩ ↦ |i+1⟩` on `n` sites.
pub fn shift_matrix<T: Real>(n: usize) -> CMatrix<T> {
    let mut d = CMatrix::zeros(n, n);
    for i in 0..n {
        d[((i + 1) % n, i)] = re(T::one());
    }
    d
}

/// `R_τ = D ⊗ |+⟩⟨+| + D† ⊗ |−⟩⟨−|` on window ⊗ probe.
pub fn r_tau<T: Real>(n_sites: usize) -> CMatrix<T> {
    let d = shift_matrix::<T>(n_sites);
    let h = T::lit(0.5);
    let plus = CMatrix::from_fn(2, 2, |_, _| re(h));
    let minus = CMatrix::from_fn(2, 2, |i, j| re(if i == j { h } else { -h }));
    &d.kron(&plus) + &d.adjoint().kron(&minus)
}

/// Runs the dense dilation `Tr_p(R_τ V_τ (ρ ⊗ |0⟩⟨0|) V_τ† R_τ†)` on
/// gyroscope ⊗ window ⊗ probe and returns its trace-norm distance to the
/// block-diagonal embedding of [`oqbm_step`]. The dilation side always uses
/// the exact `V_τ`; `use_exact` selects the Kraus pair of the lattice step.
pub fn dilation_check<T: Real>(p: &OQBMParams<T>, field: &LatticeField<T>, use_exact: bool) -> Result<T> {
    let n = field.len();
    let d = p.dim();
    if field.dim() != d {
        return Err(Error::Dimension("field and parameters disagree on the gyroscope dimension".into()));
    }
    if n < 2 * PADDING_SITES + 1 {
        return Err(Error::Padding(format!("window of {n} sites is too small")));
    }
    let sites = field.sites();
    let edge = (0..PADDING_SITES).chain(n - PADDING_SITES..n);
    if edge.into_iter().any(|i| sites[i].max_abs() > T::zero()) {
        return Err(Error::Padding(format!("the {PADDING_SITES} outer sites on each side must be empty")));
    }

    // ρ = Σ_x ρ(x) ⊗ |x⟩⟨x| on G ⊗ window
    let gz = d * n;
    let mut rho = CMatrix::zeros(gz, gz);
    for (x, m) in sites.iter().enumerate() {
        for a in 0..d {
            for b in 0..d {
                rho[(a * n + x, b * n + x)] = m[(a, b)];
            }
        }
    }
    let joint = rho.kron(&CMatrix::unit(2, 0, 0));
    let v = embed_outer(&v_tau(p)?, (d, n, 2))?;
    let r = CMatrix::identity(d).kron(&r_tau::<T>(n));
    let u = &r * &v;
    let evolved = u.sandwich(&joint);
    let reduced = partial_trace(&evolved, (gz, 2), Subsystem::A)?;

    let step = oqbm_step(p, field, use_exact)?;
    let mut expect = CMatrix::zeros(gz, gz);
    for (x, m) in step.sites().iter().enumerate() {
        for a in 0..d {
            for b in 0..d {
                expect[(a * n + x, b * n + x)] = m[(a, b)];
            }
        }
    }
    trace_norm(&(&reduced - &expect))
}

use crate::error::{Error, Result};
use crate::linalg::{matrix_exp, CMatrix};
use crate::scalar::{cplx, re, Real};

use super::params::OQBMParams;

/// `B_± = (I ± δN + τ(−iH − ½N†N ± M))/√2`, the polynomial as written.
pub fn kraus_truncated<T: Real>(p: &OQBMParams<T>) -> (CMatrix<T>, CMatrix<T>) {
    let d = p.dim();
    let (tau, delta) = (p.tau(), p.delta());
    let nn = &p.n().adjoint() * p.n();
    let common = &(&CMatrix::identity(d) + &p.h().scale(cplx(0.0, -1.0)).scale_real(tau)) - &nn.scale_real(tau * T::lit(0.5));
    let odd = &p.n().scale_real(delta) + &p.m().scale_real(tau);
    let s = re(T::one() / T::lit(2.0).sqrt());
    ((&common + &odd).scale(s), (&common - &odd).scale(s))
}

/// Generator of `V_τ` on `H_G ⊗ ℂ²` (gyroscope index major):
/// `−iτH⊗I + √τ(N⊗|1⟩⟨0| − N†⊗|0⟩⟨1|)`.
///
/// The off-diagonal orientation is chosen so that the `+` outcome expands as
/// `(I + δN + …)/√2`, matching [`kraus_truncated`].
pub fn v_tau_generator<T: Real>(p: &OQBMParams<T>) -> CMatrix<T> {
    let h = p.h().kron(&CMatrix::identity(2)).scale(cplx(0.0, -1.0)).scale_real(p.tau());
    let x = &p.n().kron(&CMatrix::unit(2, 1, 0)) - &p.n().adjoint().kron(&CMatrix::unit(2, 0, 1));
    &h + &x.scale_real(p.delta())
}

/// `V_τ = exp(generator)`. Requires `M = 0`.
pub fn v_tau<T: Real>(p: &OQBMParams<T>) -> Result<CMatrix<T>> {
    if p.has_m() {
        return Err(Error::Unsupported("the unitary dilation is defined for M = 0 only".into()));
    }
    matrix_exp(&v_tau_generator(p))
}

/// `K_± = (⟨±| ⊗ I) V_τ (|0⟩ ⊗ I)` written in gyroscope-major order.
pub fn kraus_from_v<T: Real>(v: &CMatrix<T>, d: usize) -> (CMatrix<T>, CMatrix<T>) {
    let s = re(T::one() / T::lit(2.0).sqrt());
    let kp = CMatrix::from_fn(d, d, |a, b| (v[(a * 2, b * 2)] + v[(a * 2 + 1, b * 2)]) * s);
    let km = CMatrix::from_fn(d, d, |a, b| (v[(a * 2, b * 2)] - v[(a * 2 + 1, b * 2)]) * s);
    (kp, km)
}

/// Exact Kraus pair of the unitary step.
pub fn kraus_exact<T: Real>(p: &OQBMParams<T>) -> Result<(CMatrix<T>, CMatrix<T>)> {
    let v = v_tau(p)?;
    Ok(kraus_from_v(&v, p.dim()))
}

/// Either Kraus pair.
pub fn kraus_pair<T: Real>(p: &OQBMParams<T>, exact: bool) -> Result<(CMatrix<T>, CMatrix<T>)> {
    if exact {
        kraus_exact(p)
    } else {
        Ok(kraus_truncated(p))
    }
}

/// `‖K₊†K₊ + K₋†K₋ − I‖_∞`.
pub fn completeness_defect<T: Real>(kp: &CMatrix<T>, km: &CMatrix<T>) -> T {
    let s = &(&kp.adjoint() * kp) + &(&km.adjoint() * km);
    (&s - &CMatrix::identity(kp.rows())).max_abs()
}

/// `Λ_{G,τ}` as a Kraus channel. The truncated pair is accepted with a
/// completeness tolerance equal to its own defect.
pub fn gyro_channel<T: Real>(p: &OQBMParams<T>, exact: bool) -> Result<crate::channel::KrausChannel<T>> {
    let (kp, km) = kraus_pair(p, exact)?;
    let tol = if exact { T::lit(1e-12) } else { completeness_defect(&kp, &km) * T::lit(1.0 + 1e-9) + T::lit(1e-15) };
    crate::channel::KrausChannel::new(vec![kp, km], tol)
}

//! Finite toy Fock register: gyroscope ⊗ lattice window ⊗ `n` probe qubits,
//! evolved by the repeated-interaction unitaries as a state vector.

use num_traits::Zero;

use crate::error::{dim_err, Error, Result};
use crate::linalg::{vec_norm, CMatrix};
use crate::scalar::{re, Real, C};

use super::kraus::v_tau;
use super::lattice::{BoundaryPolicy, LatticeField};
use super::params::OQBMParams;

pub const MAX_PROBES: usize = 12;

/// Amplitudes below this may sit on the window edge when a shift is applied.
const EDGE_TOL: f64 = 1e-14;

/// Amplitude at index `((g·W + z)·2^n) | bits`, probe `k` (1-based) on bit `n − k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ToyFockRegister<T> {
    gyro_dim: usize,
    window: usize,
    n_probes: usize,
    state: Vec<C<T>>,
}

impl<T: Real> ToyFockRegister<T> {
    pub fn new(gyro_dim: usize, window: usize, n_probes: usize, state: Vec<C<T>>) -> Result<Self> {
        if n_probes > MAX_PROBES {
            return Err(Error::Capacity(format!("{n_probes} probes exceed the cap of {MAX_PROBES}")));
        }
        let len = (gyro_dim * window) << n_probes;
        if state.len() != len {
            return dim_err(format!("state has {} amplitudes, expected {len}", state.len()));
        }
        let norm = vec_norm(&state);
        if (norm - T::one()).abs() > T::lit(1e-10) {
            return Err(Error::Contract(format!("register state has norm {norm}")));
        }
        Ok(Self { gyro_dim, window, n_probes, state })
    }

    /// `|φ⟩ ⊗ |z₀⟩ ⊗ |0…0⟩`.
    pub fn product(phi: &[C<T>], window: usize, z0: usize, n_probes: usize) -> Result<Self> {
        if n_probes > MAX_PROBES {
            return Err(Error::Capacity(format!("{n_probes} probes exceed the cap of {MAX_PROBES}")));
        }
        if z0 >= window {
            return Err(Error::Domain(format!("site {z0} outside a {window}-site window")));
        }
        let d = phi.len();
        let mut state = vec![C::zero(); (d * window) << n_probes];
        for (g, &a) in phi.iter().enumerate() {
            state[(g * window + z0) << n_probes] = a;
        }
        Self::new(d, window, n_probes, state)
    }

    pub fn gyro_dim(&self) -> usize {
        self.gyro_dim
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn n_probes(&self) -> usize {
        self.n_probes
    }

    pub fn state(&self) -> &[C<T>] {
        &self.state
    }

    pub fn norm(&self) -> T {
        vec_norm(&self.state)
    }

    #[inline]
    fn bit(&self, k: usize) -> usize {
        1 << (self.n_probes - k)
    }

    fn check_probe(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.n_probes {
            return Err(Error::Domain(format!("probe {k} not in 1..={}", self.n_probes)));
        }
        Ok(())
    }

    /// Applies a `2d × 2d` operator on gyroscope ⊗ probe `k` (gyroscope major).
    pub fn apply_gyro_probe(&mut self, k: usize, v: &CMatrix<T>) -> Result<()> {
        self.check_probe(k)?;
        let d = self.gyro_dim;
        if v.rows() != 2 * d || v.cols() != 2 * d {
            return dim_err("operator does not act on gyroscope ⊗ probe");
        }
        let bit = self.bit(k);
        let np = 1usize << self.n_probes;
        let mut buf = vec![C::zero(); 2 * d];
        let mut res = vec![C::zero(); 2 * d];
        for z in 0..self.window {
            for rest in (0..np).filter(|b| b & bit == 0) {
                let idx = |g: usize, p: usize| ((g * self.window + z) << self.n_probes) | rest | (p * bit);
                for g in 0..d {
                    for p in 0..2 {
                        buf[g * 2 + p] = self.state[idx(g, p)];
                    }
                }
                if buf.iter().all(|a| a.is_zero()) {
                    continue;
                }
                for (r, out) in res.iter_mut().enumerate() {
                    *out = (0..2 * d).fold(C::zero(), |acc, c| acc + v[(r, c)] * buf[c]);
                }
                for g in 0..d {
                    for p in 0..2 {
                        self.state[idx(g, p)] = res[g * 2 + p];
                    }
                }
            }
        }
        Ok(())
    }

    /// `R_τ` on window ⊗ probe `k`: the `|+⟩` part shifts right, `|−⟩` left.
    pub fn apply_shift(&mut self, k: usize) -> Result<()> {
        self.check_probe(k)?;
        let (w, n) = (self.window, self.n_probes);
        let bit = self.bit(k);
        let np = 1usize << n;
        let s = re(T::one() / T::lit(2.0).sqrt());
        let tol = T::lit(EDGE_TOL);
        let mut next = vec![C::zero(); self.state.len()];
        for g in 0..self.gyro_dim {
            for rest in (0..np).filter(|b| b & bit == 0) {
                let at = |z: usize| ((g * w + z) << n) | rest;
                for z in 0..w {
                    let a0 = self.state[at(z)];
                    let a1 = self.state[at(z) | bit];
                    let plus = (a0 + a1) * s;
                    let minus = (a0 - a1) * s;
                    if z + 1 < w {
                        next[at(z + 1)] += plus * s;
                        next[at(z + 1) | bit] += plus * s;
                    } else if plus.norm() > tol {
                        return Err(Error::Padding("register support reaches the right window edge".into()));
                    }
                    if z > 0 {
                        next[at(z - 1)] += minus * s;
                        next[at(z - 1) | bit] -= minus * s;
                    } else if minus.norm() > tol {
                        return Err(Error::Padding("register support reaches the left window edge".into()));
                    }
                }
            }
        }
        self.state = next;
        Ok(())
    }

    /// `a^i_j(k) = |j⟩⟨i|` on probe `k`, identity elsewhere.
    pub fn apply_noise(&self, i: usize, j: usize, k: usize) -> Result<Self> {
        self.check_probe(k)?;
        if i > 1 || j > 1 {
            return Err(Error::Domain("noise indices must be 0 or 1".into()));
        }
        let bit = self.bit(k);
        let mut out = vec![C::zero(); self.state.len()];
        for (idx, &a) in self.state.iter().enumerate() {
            let b = usize::from(idx & bit != 0);
            if b == i {
                out[(idx & !bit) | (j * bit)] = a;
            }
        }
        Ok(Self { state: out, ..self.clone() })
    }

    /// `Tr_probes |ψ⟩⟨ψ|` on gyroscope ⊗ window (gyroscope major).
    pub fn reduced_density(&self) -> CMatrix<T> {
        let m = self.gyro_dim * self.window;
        let np = 1usize << self.n_probes;
        CMatrix::from_fn(m, m, |r, c| {
            (0..np).fold(C::zero(), |acc, b| acc + self.state[(r << self.n_probes) | b] * self.state[(c << self.n_probes) | b].conj())
        })
    }

    /// Diagonal blocks of [`Self::reduced_density`] as a lattice field.
    pub fn reduced_field(&self, origin: T, delta: T, boundary: BoundaryPolicy) -> Result<LatticeField<T>> {
        let full = self.reduced_density();
        let (d, w) = (self.gyro_dim, self.window);
        let sites = (0..w)
            .map(|z| CMatrix::from_fn(d, d, |a, b| full[(a * w + z, b * w + z)]).hermitian_part())
            .collect();
        LatticeField::new(origin, delta, sites, boundary)
    }
}

/// Dense matrix of `a^i_j(k)` on `n` probes alone, for algebra checks.
pub fn noise_operator_dense<T: Real>(i: usize, j: usize, k: usize, n: usize) -> Result<CMatrix<T>> {
    let dim = 1usize << n;
    let mut out = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut state = vec![C::zero(); dim];
        state[col] = re(T::one());
        let reg = ToyFockRegister { gyro_dim: 1, window: 1, n_probes: n, state };
        let img = reg.apply_noise(i, j, k)?;
        for (row, &a) in img.state.iter().enumerate() {
            out[(row, col)] = a;
        }
    }
    Ok(out)
}

fn check_steps<T: Real>(reg: &ToyFockRegister<T>, p: &OQBMParams<T>, n_steps: usize) -> Result<()> {
    if n_steps > reg.n_probes {
        return Err(Error::Capacity(format!("{n_steps} steps need more than {} probes", reg.n_probes)));
    }
    if p.dim() != reg.gyro_dim {
        return dim_err("parameters and register disagree on the gyroscope dimension");
    }
    Ok(())
}

/// `Π_k (r_k v_k)`, interaction then shift for each probe in turn.
pub fn toyfock_evolve<T: Real>(p: &OQBMParams<T>, psi0: &ToyFockRegister<T>, n_steps: usize) -> Result<ToyFockRegister<T>> {
    check_steps(psi0, p, n_steps)?;
    let v = v_tau(p)?;
    let mut reg = psi0.clone();
    for k in 1..=n_steps {
        reg.apply_gyro_probe(k, &v)?;
        reg.apply_shift(k)?;
    }
    Ok(reg)
}

/// `z_n · u_n`: all interactions first, then all shifts.
pub fn toyfock_evolve_factorized<T: Real>(
    p: &OQBMParams<T>,
    psi0: &ToyFockRegister<T>,
    n_steps: usize,
) -> Result<ToyFockRegister<T>> {
    check_steps(psi0, p, n_steps)?;
    let v = v_tau(p)?;
    let mut reg = psi0.clone();
    for k in 1..=n_steps {
        reg.apply_gyro_probe(k, &v)?;
    }
    for k in 1..=n_steps {
        reg.apply_shift(k)?;
    }
    Ok(reg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacity_is_enforced() {
        let phi = [re(1.0f64)];
        assert!(matches!(ToyFockRegister::product(&phi, 1, 0, 13), Err(Error::Capacity(_))));
    }

    #[test]
    fn shift_off_the_edge_is_padding_error() {
        let phi = [re(1.0f64)];
        let mut r = ToyFockRegister::product(&phi, 1, 0, 1).unwrap();
        assert!(matches!(r.apply_shift(1), Err(Error::Padding(_))));
    }
}

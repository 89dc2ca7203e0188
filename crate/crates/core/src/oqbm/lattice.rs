use crate::error::{dim_err, Error, Result};
use crate::linalg::{min_eigenvalue, CMatrix};
use crate::oqw::{DiagonalState, Edge, OQWKernel};
use crate::scalar::Real;

use super::kraus::{kraus_exact, kraus_pair};
use super::params::OQBMParams;

/// What happens to mass that would step out of the window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BoundaryPolicy {
    /// Mass leaving the window is removed and its trace added to `leaked`.
    #[default]
    AbsorbAndTrack,
    /// A blocked move leaves the mass on the edge site.
    Reflect,
}

/// Site matrices `ρ(x)` on the window `origin + δ·{0, …, n−1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeField<T> {
    origin: T,
    delta: T,
    sites: Vec<CMatrix<T>>,
    boundary: BoundaryPolicy,
    leaked: T,
}

impl<T: Real> LatticeField<T> {
    pub fn new(origin: T, delta: T, sites: Vec<CMatrix<T>>, boundary: BoundaryPolicy) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::Domain("empty lattice window".into()));
        }
        if !(delta > T::zero()) {
            return Err(Error::Domain(format!("lattice spacing must be positive, got {delta}")));
        }
        let d = sites[0].require_square("site matrix")?;
        for (i, m) in sites.iter().enumerate() {
            if m.rows() != d || m.cols() != d {
                return dim_err(format!("site {i} has wrong shape"));
            }
            if !m.is_hermitian(T::lit(1e-12)) || min_eigenvalue(m)? < T::lit(-1e-10) {
                return Err(Error::Contract(format!("site {i} is not PSD")));
            }
        }
        Ok(Self { origin, delta, sites, boundary, leaked: T::zero() })
    }

    /// `ρ` at site `index`, zero elsewhere.
    pub fn point_mass(
        origin: T,
        delta: T,
        n_sites: usize,
        index: usize,
        rho: &CMatrix<T>,
        boundary: BoundaryPolicy,
    ) -> Result<Self> {
        if index >= n_sites {
            return Err(Error::Domain(format!("site {index} outside a {n_sites}-site window")));
        }
        let mut sites = vec![CMatrix::zeros(rho.rows(), rho.cols()); n_sites];
        sites[index] = rho.clone();
        Self::new(origin, delta, sites, boundary)
    }

    /// Symmetric window `δ·{−h, …, h}` with a point mass at 0.
    pub fn centered(p: &OQBMParams<T>, half_sites: usize, rho: &CMatrix<T>, boundary: BoundaryPolicy) -> Result<Self> {
        let delta = p.delta();
        let origin = -delta * T::from_usize_lossy(half_sites);
        Self::point_mass(origin, delta, 2 * half_sites + 1, half_sites, rho, boundary)
    }

    pub fn origin(&self) -> T {
        self.origin
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn sites(&self) -> &[CMatrix<T>] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.sites[0].rows()
    }

    pub fn boundary(&self) -> BoundaryPolicy {
        self.boundary
    }

    /// Trace that has left the window so far.
    pub fn leaked(&self) -> T {
        self.leaked
    }

    pub fn position(&self, i: usize) -> T {
        self.origin + self.delta * T::from_usize_lossy(i)
    }

    pub fn total_trace(&self) -> T {
        self.sites.iter().map(|m| m.trace().re).sum()
    }

    /// `Σ_x ρ(x)`.
    pub fn gyro_marginal(&self) -> CMatrix<T> {
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        for s in &self.sites {
            m += s;
        }
        m
    }

    pub fn to_diagonal_state(&self) -> DiagonalState<T> {
        DiagonalState::new_unchecked(self.sites.clone())
    }

    /// Summed trace norm of the site-wise difference.
    pub fn distance(&self, other: &Self) -> Result<T> {
        self.to_diagonal_state().distance(&other.to_diagonal_state())
    }
}

/// One step of `Λ̃_τ` with a given Kraus pair:
/// `out(x) = K₋ρ(x+δ)K₋† + K₊ρ(x−δ)K₊†`.
pub fn oqbm_step_kraus<T: Real>(kp: &CMatrix<T>, km: &CMatrix<T>, field: &LatticeField<T>) -> Result<LatticeField<T>> {
    let d = field.dim();
    if kp.rows() != d || km.rows() != d {
        return dim_err("Kraus pair and field disagree on the gyroscope dimension");
    }
    let n = field.len();
    let mut out = vec![CMatrix::zeros(d, d); n];
    let mut leaked = field.leaked;
    for (i, rho) in field.sites.iter().enumerate() {
        if rho.max_abs() == T::zero() {
            continue;
        }
        let right = kp.sandwich(rho);
        let left = km.sandwich(rho);
        if i + 1 < n {
            out[i + 1] += &right;
        } else {
            match field.boundary {
                BoundaryPolicy::AbsorbAndTrack => leaked += right.trace().re,
                BoundaryPolicy::Reflect => out[i] += &right,
            }
        }
        if i > 0 {
            out[i - 1] += &left;
        } else {
            match field.boundary {
                BoundaryPolicy::AbsorbAndTrack => leaked += left.trace().re,
                BoundaryPolicy::Reflect => out[i] += &left,
            }
        }
    }
    Ok(LatticeField { sites: out, leaked, ..field.clone() })
}

fn check_spacing<T: Real>(p: &OQBMParams<T>, field: &LatticeField<T>) -> Result<()> {
    let delta = p.delta();
    if (field.delta - delta).abs() > T::lit(1e-12) * delta {
        return Err(Error::Config(format!("field spacing {} differs from sqrt(tau) = {delta}", field.delta)));
    }
    Ok(())
}

/// One step of `Λ̃_τ` on a lattice field.
pub fn oqbm_step<T: Real>(p: &OQBMParams<T>, field: &LatticeField<T>, use_exact: bool) -> Result<LatticeField<T>> {
    check_spacing(p, field)?;
    let (kp, km) = kraus_pair(p, use_exact)?;
    oqbm_step_kraus(&kp, &km, field)
}

/// `n` steps reusing one Kraus pair.
pub fn oqbm_iterate<T: Real>(p: &OQBMParams<T>, field: &LatticeField<T>, n: usize, use_exact: bool) -> Result<LatticeField<T>> {
    check_spacing(p, field)?;
    let (kp, km) = kraus_pair(p, use_exact)?;
    let mut f = field.clone();
    for _ in 0..n {
        f = oqbm_step_kraus(&kp, &km, &f)?;
    }
    Ok(f)
}

/// Half-width `max(6√T, 6 v_max T) + x_range` of an absorbing window for a run
/// of length `t_final`, with `v_max` the spectral radius of `N + N†`.
pub fn window_half_width<T: Real>(p: &OQBMParams<T>, t_final: T, x_range: T) -> T {
    let six = T::lit(6.0);
    (six * t_final.sqrt()).max(six * p.max_speed() * t_final) + x_range
}

/// Number of sites on each side of the origin for [`window_half_width`].
pub fn window_half_sites<T: Real>(p: &OQBMParams<T>, t_final: T, x_range: T) -> usize {
    (window_half_width(p, t_final, x_range) / p.delta()).ceil().to_usize().unwrap_or(0)
}

/// `Λ̃_τ` on `n_sites` vertices as an OQW kernel, with reflecting self-loops at
/// the ends. Uses the exact Kraus pair so that every vertex is complete.
pub fn lattice_kernel<T: Real>(p: &OQBMParams<T>, n_sites: usize) -> Result<OQWKernel<T>> {
    if n_sites == 0 {
        return Err(Error::Domain("empty lattice window".into()));
    }
    let (kp, km) = kraus_exact(p)?;
    let mut edges = Vec::with_capacity(2 * n_sites);
    for i in 0..n_sites {
        edges.push(Edge { from: i, to: (i + 1).min(n_sites - 1), kraus: kp.clone() });
        edges.push(Edge { from: i, to: i.saturating_sub(1), kraus: km.clone() });
    }
    OQWKernel::new(n_sites, edges, T::lit(1e-10))
}

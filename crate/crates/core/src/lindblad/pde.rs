//! Method-of-lines solvers for the density-matrix function `Q_t(x)` and the
//! full kernel `K_t(x, y)`: centered differences in space, RK4 in time,
//! Dirichlet zero boundaries with the lost mass tracked.

use num_traits::Zero;

use crate::error::{dim_err, Error, Result};
use crate::linalg::{trace_norm, CMatrix};
use crate::oqbm::{BoundaryPolicy, LatticeField};
use crate::scalar::{Real, C};

use super::generator::LindbladGenerator;

/// Largest admissible `dt / dx²`.
pub const CFL: f64 = 0.4;

/// Uniform grid `x_min + dx·{0, …, n−1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid<T> {
    pub x_min: T,
    pub dx: T,
    pub n_points: usize,
}

impl<T: Real> Grid<T> {
    pub fn new(x_min: T, dx: T, n_points: usize) -> Result<Self> {
        if !(dx > T::zero()) || n_points < 3 {
            return Err(Error::Config(format!("grid needs dx > 0 and at least 3 points, got dx={dx}, n={n_points}")));
        }
        Ok(Self { x_min, dx, n_points })
    }

    /// Symmetric grid covering `[−half_width, half_width]`.
    pub fn symmetric(half_width: T, dx: T) -> Result<Self> {
        let h = (half_width / dx).ceil().to_usize().unwrap_or(0);
        Self::new(-dx * T::from_usize_lossy(h), dx, 2 * h + 1)
    }

    #[inline]
    pub fn x(&self, i: usize) -> T {
        self.x_min + self.dx * T::from_usize_lossy(i)
    }
}

fn check_cfl<T: Real>(dt: T, dx: T) -> Result<()> {
    if !(dt > T::zero()) || dt > T::lit(CFL) * dx * dx * T::lit(1.0 + 1e-12) {
        return Err(Error::Config(format!(
            "time step {dt:e} violates dt <= {CFL}*dx^2 = {:e}",
            (T::lit(CFL) * dx * dx).to_f64_lossy()
        )));
    }
    Ok(())
}

/// Flat `d×d` kernel helpers.
#[inline]
fn mm<T: Real>(a: &[C<T>], b: &[C<T>], d: usize, out: &mut [C<T>]) {
    for i in 0..d {
        for j in 0..d {
            let mut s = C::zero();
            for k in 0..d {
                s += a[i * d + k] * b[k * d + j];
            }
            out[i * d + j] = s;
        }
    }
}

/// Operators of the generator in flat layout.
struct FlatOps<T> {
    d: usize,
    n: Vec<C<T>>,
    k: Vec<C<T>>,
}

impl<T: Real> FlatOps<T> {
    fn new(g: &LindbladGenerator<T>) -> Self {
        Self { d: g.dim(), n: g.n().data().to_vec(), k: g.k().data().to_vec() }
    }

    /// `𝓛(c) + ½(p − 2c + m)/h² − (N D + D N†)` with `D = (p − m)/(2h)`.
    #[allow(clippy::too_many_arguments)]
    fn site(&self, c: &[C<T>], p: &[C<T>], m: &[C<T>], h: T, out: &mut [C<T>], s1: &mut [C<T>], s2: &mut [C<T>]) {
        let d = self.d;
        let dd = d * d;
        let inv_h2 = T::one() / (h * h);
        let inv_2h = T::one() / (h * T::lit(2.0));
        // 𝓛(c) = Kc + cK† + NcN†
        mm(&self.k, c, d, s1);
        for i in 0..d {
            for j in 0..d {
                let mut ck = C::zero();
                for k in 0..d {
                    ck += c[i * d + k] * self.k[j * d + k].conj();
                }
                out[i * d + j] = s1[i * d + j] + ck;
            }
        }
        mm(&self.n, c, d, s1);
        for i in 0..d {
            for j in 0..d {
                let mut s = C::zero();
                for k in 0..d {
                    s += s1[i * d + k] * self.n[j * d + k].conj();
                }
                out[i * d + j] += s;
            }
        }
        // derivative terms
        for idx in 0..dd {
            s2[idx] = (p[idx] - m[idx]) * inv_2h;
            out[idx] += (p[idx] - c[idx] * T::lit(2.0) + m[idx]) * (inv_h2 * T::lit(0.5));
        }
        mm(&self.n, s2, d, s1);
        for i in 0..d {
            for j in 0..d {
                let mut dn = C::zero();
                for k in 0..d {
                    dn += s2[i * d + k] * self.n[j * d + k].conj();
                }
                out[i * d + j] -= s1[i * d + j] + dn;
            }
        }
    }
}

/// Generic RK4 driver over a flat state, with the leak integrated from the
/// stage mass rates.
fn rk4<T: Real>(
    state: &mut [C<T>],
    steps: usize,
    h: T,
    mut rhs: impl FnMut(&[C<T>], &mut [C<T>]),
    mass_rate: impl Fn(&[C<T>]) -> T,
) -> T {
    let len = state.len();
    let mut k = [vec![C::zero(); len], vec![C::zero(); len], vec![C::zero(); len], vec![C::zero(); len]];
    let mut stage = vec![C::zero(); len];
    let mut leak = T::zero();
    let half = h * T::lit(0.5);
    let sixth = h / T::lit(6.0);
    for _ in 0..steps {
        rhs(state, &mut k[0]);
        for i in 0..len {
            stage[i] = state[i] + k[0][i] * half;
        }
        rhs(&stage, &mut k[1]);
        for i in 0..len {
            stage[i] = state[i] + k[1][i] * half;
        }
        rhs(&stage, &mut k[2]);
        for i in 0..len {
            stage[i] = state[i] + k[2][i] * h;
        }
        rhs(&stage, &mut k[3]);
        let rate = mass_rate(&k[0]) + (mass_rate(&k[1]) + mass_rate(&k[2])) * T::lit(2.0) + mass_rate(&k[3]);
        leak -= rate * sixth;
        for i in 0..len {
            state[i] += (k[0][i] + (k[1][i] + k[2][i]) * T::lit(2.0) + k[3][i]) * sixth;
        }
    }
    leak
}

/// `Q(x)` on a uniform grid, with the mass that has crossed the boundary.
#[derive(Clone, Debug)]
pub struct QField<T> {
    pub grid: Grid<T>,
    pub values: Vec<CMatrix<T>>,
    pub leak: T,
}

impl<T: Real> QField<T> {
    pub fn new(grid: Grid<T>, values: Vec<CMatrix<T>>) -> Result<Self> {
        if values.len() != grid.n_points {
            return dim_err(format!("{} values on a {}-point grid", values.len(), grid.n_points));
        }
        let d = values[0].require_square("Q value")?;
        if values.iter().any(|v| v.rows() != d || v.cols() != d) {
            return dim_err("Q values differ in shape");
        }
        Ok(Self { grid, values, leak: T::zero() })
    }

    /// `g_{mean,var}(x)·ρ₀`.
    pub fn gaussian(grid: Grid<T>, mean: T, var: T, rho0: &CMatrix<T>) -> Result<Self> {
        let norm = T::one() / (T::lit(2.0) * T::PI() * var).sqrt();
        let values = (0..grid.n_points)
            .map(|i| {
                let x = grid.x(i) - mean;
                rho0.scale_real(norm * (-(x * x) / (T::lit(2.0) * var)).exp())
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn dim(&self) -> usize {
        self.values[0].rows()
    }

    /// `∫ Tr Q dx` by the trapezoid rule with zero values beyond the grid.
    pub fn mass(&self) -> T {
        self.values.iter().map(|v| v.trace().re).sum::<T>() * self.grid.dx
    }

    /// `∫ Q dx`.
    pub fn gyro_marginal(&self) -> CMatrix<T> {
        let d = self.dim();
        let mut m = CMatrix::zeros(d, d);
        for v in &self.values {
            m += v;
        }
        m.scale_real(self.grid.dx)
    }

    /// `∫ x Tr Q dx`.
    pub fn mean_position(&self) -> T {
        self.values.iter().enumerate().map(|(i, v)| self.grid.x(i) * v.trace().re).sum::<T>() * self.grid.dx
    }

    /// Site masses `Q(x)·dx` as a lattice field with spacing `dx`.
    pub fn to_lattice(&self, boundary: BoundaryPolicy) -> Result<LatticeField<T>> {
        let dx = self.grid.dx;
        let sites = self.values.iter().map(|v| v.scale_real(dx).hermitian_part()).collect();
        LatticeField::new(self.grid.x_min, dx, sites, boundary)
    }

    /// `Q(x) = ρ(x)/δ` from a lattice field.
    pub fn from_lattice(field: &LatticeField<T>) -> Result<Self> {
        let grid = Grid::new(field.origin(), field.delta(), field.len())?;
        let inv = T::one() / field.delta();
        Self::new(grid, field.sites().iter().map(|m| m.scale_real(inv)).collect())
    }

    /// `∫ ‖Q − Q'‖₁ dx` on a common grid.
    pub fn distance(&self, other: &Self) -> Result<T> {
        if self.grid.n_points != other.grid.n_points {
            return dim_err("Q fields on different grids");
        }
        let mut s = T::zero();
        for (a, b) in self.values.iter().zip(&other.values) {
            s += trace_norm(&(a - b))?;
        }
        Ok(s * self.grid.dx)
    }

    /// Smallest eigenvalue over all sites.
    pub fn min_eigenvalue(&self) -> Result<T> {
        let mut m = T::infinity();
        for v in &self.values {
            m = m.min(crate::linalg::min_eigenvalue(&v.hermitian_part())?);
        }
        Ok(m)
    }
}

/// `dQ/dt = 𝓛(Q) + ½∂²Q − (N∂Q + (∂Q)N†)` up to time `t` with steps of at most `dt`.
pub fn evolve_q<T: Real>(g: &LindbladGenerator<T>, q0: &QField<T>, t: T, dt: T) -> Result<QField<T>> {
    let dx = q0.grid.dx;
    check_cfl(dt, dx)?;
    let d = g.dim();
    if q0.dim() != d {
        return dim_err("Q field and generator differ in dimension");
    }
    let n = q0.grid.n_points;
    let dd = d * d;
    let steps = (t / dt).ceil().to_usize().unwrap_or(0);
    let h = if steps > 0 { t / T::from_usize_lossy(steps) } else { T::zero() };
    let ops = FlatOps::new(g);
    let zero = vec![C::<T>::zero(); dd];
    let mut s1 = vec![C::zero(); dd];
    let mut s2 = vec![C::zero(); dd];
    let mut state: Vec<C<T>> = q0.values.iter().flat_map(|v| v.data().iter().copied()).collect();
    let rhs = |q: &[C<T>], out: &mut [C<T>]| {
        for i in 0..n {
            let c = &q[i * dd..(i + 1) * dd];
            let p = if i + 1 < n { &q[(i + 1) * dd..(i + 2) * dd] } else { &zero[..] };
            let m = if i > 0 { &q[(i - 1) * dd..i * dd] } else { &zero[..] };
            ops.site(c, p, m, dx, &mut out[i * dd..(i + 1) * dd], &mut s1, &mut s2);
        }
    };
    let rate = |k: &[C<T>]| -> T {
        let mut s = T::zero();
        for i in 0..n {
            for a in 0..d {
                s += k[i * dd + a * d + a].re;
            }
        }
        s * dx
    };
    let leak = rk4(&mut state, steps, h, rhs, rate);
    let values = state.chunks(dd).map(|c| CMatrix::from_vec(d, d, c.to_vec()).expect("d×d")).collect();
    Ok(QField { grid: q0.grid, values, leak: q0.leak + leak })
}

/// `K(x, y)` on the square of a grid, row index `x`.
#[derive(Clone, Debug)]
pub struct KKernel<T> {
    pub grid: Grid<T>,
    pub values: Vec<CMatrix<T>>,
    pub leak: T,
}

impl<T: Real> KKernel<T> {
    pub fn new(grid: Grid<T>, values: Vec<CMatrix<T>>) -> Result<Self> {
        let n = grid.n_points;
        if values.len() != n * n {
            return dim_err(format!("{} values on a {n}x{n} grid", values.len()));
        }
        let d = values[0].require_square("K value")?;
        if values.iter().any(|v| v.rows() != d || v.cols() != d) {
            return dim_err("K values differ in shape");
        }
        Ok(Self { grid, values, leak: T::zero() })
    }

    /// `K(x, y) = f(x, y)`.
    pub fn from_fn(grid: Grid<T>, mut f: impl FnMut(T, T) -> CMatrix<T>) -> Result<Self> {
        let n = grid.n_points;
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(f(grid.x(i), grid.x(j)));
            }
        }
        Self::new(grid, values)
    }

    pub fn dim(&self) -> usize {
        self.values[0].rows()
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> &CMatrix<T> {
        &self.values[i * self.grid.n_points + j]
    }

    /// `max ‖K(x,y) − K(y,x)†‖_∞`.
    pub fn hermitian_symmetry_defect(&self) -> T {
        let n = self.grid.n_points;
        let mut m = T::zero();
        for i in 0..n {
            for j in i..n {
                m = m.max((self.at(i, j) - &self.at(j, i).adjoint()).max_abs());
            }
        }
        m
    }

    /// The diagonal `K(x, x)` as a Q field.
    pub fn diagonal(&self) -> QField<T> {
        let n = self.grid.n_points;
        QField { grid: self.grid, values: (0..n).map(|i| self.at(i, i).clone()).collect(), leak: self.leak }
    }
}

/// `dK/dt = 𝓛(K) + ½(∂x+∂y)²K − N(∂x+∂y)K − ((∂x+∂y)K)N†`.
///
/// `∂x+∂y` is the derivative along the direction `(1, 1)`, so it is
/// discretized with centered differences between the diagonal neighbours
/// `(i±1, j±1)`; the scheme then restricts on the diagonal to the one used by
/// [`evolve_q`].
pub fn evolve_k<T: Real>(g: &LindbladGenerator<T>, k0: &KKernel<T>, t: T, dt: T) -> Result<KKernel<T>> {
    let dx = k0.grid.dx;
    check_cfl(dt, dx)?;
    let d = g.dim();
    if k0.dim() != d {
        return dim_err("kernel and generator differ in dimension");
    }
    let n = k0.grid.n_points;
    let dd = d * d;
    let steps = (t / dt).ceil().to_usize().unwrap_or(0);
    let h = if steps > 0 { t / T::from_usize_lossy(steps) } else { T::zero() };
    let ops = FlatOps::new(g);
    let zero = vec![C::<T>::zero(); dd];
    let mut s1 = vec![C::zero(); dd];
    let mut s2 = vec![C::zero(); dd];
    let mut state: Vec<C<T>> = k0.values.iter().flat_map(|v| v.data().iter().copied()).collect();
    let at = |i: usize, j: usize| (i * n + j) * dd;
    let rhs = |q: &[C<T>], out: &mut [C<T>]| {
        for i in 0..n {
            for j in 0..n {
                let c = &q[at(i, j)..at(i, j) + dd];
                let p = if i + 1 < n && j + 1 < n { &q[at(i + 1, j + 1)..at(i + 1, j + 1) + dd] } else { &zero[..] };
                let m = if i > 0 && j > 0 { &q[at(i - 1, j - 1)..at(i - 1, j - 1) + dd] } else { &zero[..] };
                ops.site(c, p, m, dx, &mut out[at(i, j)..at(i, j) + dd], &mut s1, &mut s2);
            }
        }
    };
    // mass is the trace on the diagonal
    let rate = |k: &[C<T>]| -> T {
        let mut s = T::zero();
        for i in 0..n {
            for a in 0..d {
                s += k[at(i, i) + a * d + a].re;
            }
        }
        s * dx
    };
    let leak = rk4(&mut state, steps, h, rhs, rate);
    let values = state.chunks(dd).map(|c| CMatrix::from_vec(d, d, c.to_vec()).expect("d×d")).collect();
    Ok(KKernel { grid: k0.grid, values, leak: k0.leak + leak })
}

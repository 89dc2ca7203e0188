//! Projective measurement, unnormalized conditional states and pointer-based
//! indirect measurement on finite outcome sets.

use num_traits::Zero;

use crate::error::{dim_err, Error, Result};
use crate::linalg::{CMatrix, DensityMatrix};
use crate::scalar::{Real, C};

/// Outcomes with smaller probability carry no state.
pub const NULL_PROBABILITY: f64 = 1e-14;

/// One outcome of a measurement. `state` is `None` for null outcomes.
#[derive(Clone, Debug)]
pub struct ConditionalState<T> {
    pub outcome: usize,
    pub probability: T,
    pub state: Option<DensityMatrix<T>>,
}

impl<T: Real> ConditionalState<T> {
    fn from_unnormalized(outcome: usize, m: CMatrix<T>) -> Self {
        let p = m.trace().re;
        if p < T::lit(NULL_PROBABILITY) {
            return Self { outcome, probability: p.max(T::zero()), state: None };
        }
        let state = DensityMatrix::new_unchecked(m.hermitian_part().scale_real(T::one() / p));
        Self { outcome, probability: p, state: Some(state) }
    }

    pub fn is_null(&self) -> bool {
        self.state.is_none()
    }
}

pub(crate) fn check_resolution<T: Real>(projectors: &[CMatrix<T>], dim: usize) -> Result<()> {
    let tol = T::lit(1e-10);
    let mut sum = CMatrix::zeros(dim, dim);
    for (a, p) in projectors.iter().enumerate() {
        if p.rows() != dim || p.cols() != dim {
            return dim_err(format!("projector {a} has wrong shape"));
        }
        if (&(p * p) - p).max_abs() > tol || !p.is_hermitian(tol) {
            return Err(Error::Contract(format!("element {a} is not an orthogonal projector")));
        }
        for (b, q) in projectors.iter().enumerate().skip(a + 1) {
            if (p * q).max_abs() > tol {
                return Err(Error::Contract(format!("projectors {a} and {b} are not orthogonal")));
            }
        }
        sum += p;
    }
    let defect = (&sum - &CMatrix::identity(dim)).max_abs();
    if defect > tol {
        return Err(Error::Contract(format!("projectors do not resolve the identity: {defect:e}")));
    }
    Ok(())
}

/// Outcome `a` has probability `Tr(ρP_a)` and post-state `P_aρP_a / Tr(P_aρ)`.
pub fn measure_discrete<T: Real>(
    rho: &DensityMatrix<T>,
    projectors: &[CMatrix<T>],
) -> Result<Vec<ConditionalState<T>>> {
    check_resolution(projectors, rho.dim())?;
    Ok(projectors
        .iter()
        .enumerate()
        .map(|(a, p)| ConditionalState::from_unnormalized(a, p.sandwich(rho.matrix())))
        .collect())
}

/// `ς(x) = (I ⊗ ⟨x|) ρ (I ⊗ |x⟩)` on `H_G ⊗ ℂ^{n_x}`.
pub fn unnormalized_state<T: Real>(rho: &CMatrix<T>, dg: usize, nx: usize) -> Result<Vec<CMatrix<T>>> {
    let n = rho.require_square("unnormalized_state input")?;
    if n != dg * nx {
        return dim_err(format!("{n}x{n} matrix does not factor as {dg}*{nx}"));
    }
    Ok((0..nx)
        .map(|x| CMatrix::from_fn(dg, dg, |a, b| rho[(a * nx + x, b * nx + x)]))
        .collect())
}

/// Unnormalized states for a coarser algebra generated by a partition of X:
/// one matrix per cell, the sum of `ς(x)` over the cell.
pub fn unnormalized_state_partition<T: Real>(
    rho: &CMatrix<T>,
    dg: usize,
    nx: usize,
    cells: &[Vec<usize>],
) -> Result<Vec<CMatrix<T>>> {
    let mut seen = vec![false; nx];
    for &x in cells.iter().flatten() {
        if x >= nx || seen[x] {
            return Err(Error::Contract(format!("cells do not partition 0..{nx}")));
        }
        seen[x] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Contract(format!("cells do not cover 0..{nx}")));
    }
    let fine = unnormalized_state(rho, dg, nx)?;
    Ok(cells
        .iter()
        .map(|cell| {
            let mut m = CMatrix::zeros(dg, dg);
            for &x in cell {
                m += &fine[x];
            }
            m
        })
        .collect())
}

/// Born outcomes of the diagonal algebra on the second factor with their
/// conditional states on `H_G`.
pub fn conditional_states<T: Real>(rho: &CMatrix<T>, dg: usize, nx: usize) -> Result<Vec<ConditionalState<T>>> {
    Ok(unnormalized_state(rho, dg, nx)?
        .into_iter()
        .enumerate()
        .map(|(x, m)| ConditionalState::from_unnormalized(x, m))
        .collect())
}

/// `ψ: X × Y → Y` with every `ψ(x, ·)` a bijection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointerMap {
    nx: usize,
    ny: usize,
    table: Vec<Vec<usize>>,
}

impl PointerMap {
    pub fn new(table: Vec<Vec<usize>>) -> Result<Self> {
        let nx = table.len();
        let ny = table.first().map_or(0, Vec::len);
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidPointerMap("empty table".into()));
        }
        for (x, row) in table.iter().enumerate() {
            if row.len() != ny {
                return Err(Error::InvalidPointerMap(format!("row {x} has {} entries, expected {ny}", row.len())));
            }
            let mut hit = vec![false; ny];
            for &y in row {
                if y >= ny || hit[y] {
                    return Err(Error::InvalidPointerMap(format!("psi({x}, .) is not a bijection of 0..{ny}")));
                }
                hit[y] = true;
            }
        }
        Ok(Self { nx, ny, table })
    }

    /// `ψ(x, y) = x` at `y = a0`, extended to a bijection by a cyclic shift.
    pub fn perfect(n: usize, a0: usize) -> Self {
        Self::shift(n, |x| (x + n - a0 % n) % n)
    }

    /// `ψ(x, y) = y`.
    pub fn trivial(nx: usize, ny: usize) -> Self {
        Self { nx, ny, table: vec![(0..ny).collect(); nx] }
    }

    /// `ψ(x, y) = y + s(x) mod n`.
    pub fn shift(n: usize, s: impl Fn(usize) -> usize) -> Self {
        Self { nx: n, ny: n, table: (0..n).map(|x| (0..n).map(|y| (y + s(x)) % n).collect()).collect() }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    #[inline]
    pub fn apply(&self, x: usize, y: usize) -> usize {
        self.table[x][y]
    }

    /// Permutation of the basis of `ℂ^{n_x} ⊗ ℂ^{n_y}`: `(x, y) ↦ (x, ψ(x, y))`.
    pub fn permutation(&self) -> Vec<usize> {
        let mut p = Vec::with_capacity(self.nx * self.ny);
        for x in 0..self.nx {
            for y in 0..self.ny {
                p.push(x * self.ny + self.apply(x, y));
            }
        }
        p
    }

    /// `Z_ψ` on `H_G ⊗ ℂ^{n_x} ⊗ ℂ^{n_y}`.
    pub fn unitary<T: Real>(&self, dg: usize) -> CMatrix<T> {
        let perm = self.permutation();
        let m = self.nx * self.ny;
        let mut z = CMatrix::zeros(dg * m, dg * m);
        for g in 0..dg {
            for (src, &dst) in perm.iter().enumerate() {
                z[(g * m + dst, g * m + src)] = C::new(T::one(), T::zero());
            }
        }
        z
    }
}

/// Conjugates `ρ` by the permutation matrix sending basis vector `i` to `perm[i]`.
pub fn permute_conjugate<T: Real>(rho: &CMatrix<T>, perm: &[usize]) -> CMatrix<T> {
    let n = perm.len();
    let mut out = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(perm[i], perm[j])] = rho[(i, j)];
        }
    }
    out
}

/// Couples `ρ` on `H_G ⊗ ℂ^{n_x}` to a pointer in state `σ` through `Z_ψ`,
/// reads the pointer and returns one conditional state per pointer value `y`
/// (states on `H_G ⊗ ℂ^{n_x}`).
pub fn indirect_measure<T: Real>(
    rho: &DensityMatrix<T>,
    dg: usize,
    psi: &PointerMap,
    sigma: &DensityMatrix<T>,
) -> Result<Vec<ConditionalState<T>>> {
    let (nx, ny) = (psi.nx(), psi.ny());
    if rho.dim() != dg * nx {
        return dim_err(format!("state of dim {} is not on H_G({dg}) ⊗ C^{nx}", rho.dim()));
    }
    if sigma.dim() != ny {
        return dim_err(format!("pointer state of dim {} but pointer space has {ny} points", sigma.dim()));
    }
    let joint = rho.matrix().kron(sigma.matrix());
    let perm: Vec<usize> = {
        let inner = psi.permutation();
        let m = nx * ny;
        (0..dg * m).map(|i| (i / m) * m + inner[i % m]).collect()
    };
    let coupled = permute_conjugate(&joint, &perm);
    let d = dg * nx;
    Ok((0..ny)
        .map(|y| {
            let block = CMatrix::from_fn(d, d, |i, j| coupled[(i * ny + y, j * ny + y)]);
            ConditionalState::from_unnormalized(y, block)
        })
        .collect())
}

/// Non-selective version: `Tr_pointer(Z(ρ⊗σ)Z†)`.
pub fn indirect_channel<T: Real>(
    rho: &DensityMatrix<T>,
    dg: usize,
    psi: &PointerMap,
    sigma: &DensityMatrix<T>,
) -> Result<CMatrix<T>> {
    let z = psi.unitary::<T>(dg);
    let coupled = z.sandwich(&rho.matrix().kron(sigma.matrix()));
    crate::linalg::partial_trace(&coupled, (dg * psi.nx(), psi.ny()), crate::linalg::Subsystem::A)
}

/// Restriction to the block diagonal of the `ℂ^{n_x}` factor.
pub fn restrict_diagonal<T: Real>(rho: &CMatrix<T>, dg: usize, nx: usize) -> CMatrix<T> {
    CMatrix::from_fn(dg * nx, dg * nx, |i, j| if i % nx == j % nx { rho[(i, j)] } else { C::zero() })
}

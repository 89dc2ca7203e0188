//! Random test matrices (Ginibre-based).

use rand::Rng;
use rand_distr::StandardNormal;

use super::density::DensityMatrix;
use super::matrix::{inner, vec_norm, CMatrix};
use crate::scalar::{re, Real, C};

fn gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R) -> C<T> {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    C::new(T::lit(a), T::lit(b))
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<T: Real, R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix<T> {
    CMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Full-rank density matrix `GG†/Tr(GG†)`.
pub fn random_density<T: Real, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix<T> {
    let g = ginibre::<T, R>(dim, dim, rng);
    let m = &g * &g.adjoint();
    DensityMatrix::normalized(&m).expect("Ginibre product has positive trace")
}

pub fn random_pure<T: Real, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix<T> {
    let v: Vec<C<T>> = (0..dim).map(|_| gaussian(rng)).collect();
    DensityMatrix::pure(&v).expect("Gaussian vector is nonzero")
}

/// Hermitian matrix scaled to operator-entry norm `scale` (max-abs entry).
pub fn random_hermitian<T: Real, R: Rng + ?Sized>(dim: usize, scale: T, rng: &mut R) -> CMatrix<T> {
    let h = ginibre::<T, R>(dim, dim, rng).hermitian_part();
    let m = h.max_abs();
    h.scale_real(scale / m)
}

/// Random matrix with spectral norm at most `bound` (via Frobenius normalization).
pub fn random_bounded<T: Real, R: Rng + ?Sized>(dim: usize, bound: T, rng: &mut R) -> CMatrix<T> {
    let g = ginibre::<T, R>(dim, dim, rng);
    let f = g.frobenius_norm();
    let u: f64 = rng.random();
    g.scale_real(bound * T::lit(0.2 + 0.8 * u) / f)
}

/// Haar-distributed unitary by Gram–Schmidt on Ginibre columns.
pub fn random_unitary<T: Real, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix<T> {
    let g = ginibre::<T, R>(dim, dim, rng);
    let mut cols: Vec<Vec<C<T>>> = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut v: Vec<C<T>> = (0..dim).map(|i| g[(i, j)]).collect();
        // two passes keep orthogonality at machine precision
        for _ in 0..2 {
            for q in &cols {
                let c = inner(q, &v);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= *qi * c;
                }
            }
        }
        let n = vec_norm(&v);
        v.iter_mut().for_each(|z| *z = *z / re(n));
        cols.push(v);
    }
    CMatrix::from_fn(dim, dim, |i, j| cols[j][i])
}

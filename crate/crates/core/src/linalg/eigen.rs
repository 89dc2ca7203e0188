//! Hermitian eigendecomposition by cyclic complex Jacobi rotations.

use num_complex::Complex;
use num_traits::{One, Zero};

use super::matrix::CMatrix;
use crate::error::{Error, Result};
use crate::scalar::{re, Real, C};

const MAX_SWEEPS: usize = 100;

/// `A = V diag(values) V†`, eigenvalues ascending, eigenvectors in the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct HermitianEigen<T> {
    pub values: Vec<T>,
    pub vectors: CMatrix<T>,
}

impl<T: Real> HermitianEigen<T> {
    /// Decomposes the Hermitian part of `a`. Callers are responsible for checking
    /// Hermiticity when it matters.
    pub fn new(a: &CMatrix<T>) -> Result<Self> {
        let n = a.require_square("eigendecomposition input")?;
        let mut m = a.hermitian_part();
        let mut v = CMatrix::<T>::identity(n);
        // work at unit magnitude so that squared entries neither underflow nor overflow
        let magnitude = m.max_abs();
        if magnitude == T::zero() || n == 1 {
            let values = (0..n).map(|i| m[(i, i)].re).collect();
            return Ok(Self { values, vectors: v });
        }
        m = m.scale_real(T::one() / magnitude);
        let scale = m.frobenius_norm();
        let eps = T::epsilon();
        // rotations leave roundoff of order eps·scale in every off-diagonal slot
        let target = eps * scale * T::from_usize_lossy(4 * n);
        let mut converged = false;
        for _ in 0..MAX_SWEEPS {
            let off: T = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| m[(i, j)].norm_sqr())
                .sum::<T>()
                .sqrt();
            if off <= target {
                converged = true;
                break;
            }
            for p in 0..n - 1 {
                for q in p + 1..n {
                    rotate(&mut m, &mut v, p, q, eps * scale);
                }
            }
        }
        if !converged {
            return Err(Error::Contract("Jacobi eigensolver did not converge".into()));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| m[(i, i)].re.partial_cmp(&m[(j, j)].re).unwrap_or(std::cmp::Ordering::Equal));
        let values = order.iter().map(|&i| m[(i, i)].re * magnitude).collect();
        let vectors = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
        Ok(Self { values, vectors })
    }

    pub fn min(&self) -> T {
        self.values.first().copied().unwrap_or_else(T::zero)
    }

    pub fn max(&self) -> T {
        self.values.last().copied().unwrap_or_else(T::zero)
    }

    /// Rebuilds `V f(Λ) V†`.
    pub fn reconstruct_with(&self, f: impl Fn(T) -> T) -> CMatrix<T> {
        let n = self.values.len();
        let fv: Vec<T> = self.values.iter().map(|&x| f(x)).collect();
        CMatrix::from_fn(n, n, |i, j| {
            let mut acc = C::zero();
            for k in 0..n {
                acc += self.vectors[(i, k)] * self.vectors[(j, k)].conj() * fv[k];
            }
            acc
        })
    }

    pub fn eigenvector(&self, k: usize) -> Vec<C<T>> {
        (0..self.values.len()).map(|i| self.vectors[(i, k)]).collect()
    }
}

fn rotate<T: Real>(m: &mut CMatrix<T>, v: &mut CMatrix<T>, p: usize, q: usize, floor: T) {
    let apq = m[(p, q)];
    let r = apq.norm();
    if r <= floor * T::lit(1e-3) || r == T::zero() {
        return;
    }
    let phase = apq / re(r);
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let theta = (aqq - app) / (T::lit(2.0) * r);
    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
    let c = T::one() / (t * t + T::one()).sqrt();
    let s = t * c;
    // G = diag(1, e^{-iφ}) · [[c, s], [-s, c]] acting on the (p, q) plane.
    let g_pp = re(c);
    let g_pq = re(s);
    let g_qp = -phase.conj() * s;
    let g_qq = phase.conj() * c;
    let n = m.rows();
    // M ← M G
    for i in 0..n {
        let mip = m[(i, p)];
        let miq = m[(i, q)];
        m[(i, p)] = mip * g_pp + miq * g_qp;
        m[(i, q)] = mip * g_pq + miq * g_qq;
    }
    // M ← G† M
    for j in 0..n {
        let mpj = m[(p, j)];
        let mqj = m[(q, j)];
        m[(p, j)] = g_pp.conj() * mpj + g_qp.conj() * mqj;
        m[(q, j)] = g_pq.conj() * mpj + g_qq.conj() * mqj;
    }
    m[(p, q)] = C::zero();
    m[(q, p)] = C::zero();
    m[(p, p)] = Complex::new(m[(p, p)].re, T::zero());
    m[(q, q)] = Complex::new(m[(q, q)].re, T::zero());
    for i in 0..n {
        let vip = v[(i, p)];
        let viq = v[(i, q)];
        v[(i, p)] = vip * g_pp + viq * g_qp;
        v[(i, q)] = vip * g_pq + viq * g_qq;
    }
}

/// Smallest eigenvalue of a Hermitian matrix, closed form for 1x1 and 2x2.
pub fn min_eigenvalue<T: Real>(a: &CMatrix<T>) -> Result<T> {
    match a.rows() {
        1 if a.cols() == 1 => Ok(a[(0, 0)].re),
        2 if a.cols() == 2 => {
            let (x, y) = (a[(0, 0)].re, a[(1, 1)].re);
            let b = (a[(0, 1)] + a[(1, 0)].conj()) * re(T::lit(0.5));
            let half_gap = ((x - y) * (x - y) * T::lit(0.25) + b.norm_sqr()).sqrt();
            Ok((x + y) * T::lit(0.5) - half_gap)
        }
        _ => Ok(HermitianEigen::new(a)?.min()),
    }
}

/// Identity-padded unit vector, handy for tests.
pub fn basis_vector<T: Real>(n: usize, i: usize) -> Vec<C<T>> {
    let mut v = vec![C::zero(); n];
    v[i] = C::one();
    v
}

//! Singular value decomposition by one-sided (Hestenes) Jacobi rotations.
//!
//! Accurate for tiny singular values, which the null-space computations of
//! vectorized generators rely on.

use num_traits::Zero;

use super::matrix::CMatrix;
use crate::error::{Error, Result};
use crate::scalar::{re, Real, C};

const MAX_SWEEPS: usize = 80;

/// `A = U diag(sigma) V†` with `sigma` sorted descending.
#[derive(Clone, Debug)]
pub struct Svd<T> {
    pub u: CMatrix<T>,
    pub sigma: Vec<T>,
    pub v: CMatrix<T>,
}

impl<T: Real> Svd<T> {
    pub fn new(a: &CMatrix<T>) -> Result<Self> {
        // Work on the tall orientation so that the column count is the smaller one.
        if a.rows() < a.cols() {
            let t = Self::new(&a.adjoint())?;
            return Ok(Self {
                u: t.v,
                sigma: t.sigma,
                v: t.u,
            });
        }
        let (m, n) = (a.rows(), a.cols());
        // unit magnitude keeps the squared column norms representable
        let magnitude = a.max_abs();
        let mut w = if magnitude > T::zero() { a.scale_real(T::one() / magnitude) } else { a.clone() };
        let mut v = CMatrix::<T>::identity(n);
        let eps = T::epsilon();
        let tol = eps * T::from_usize_lossy(m);
        // columns below this squared norm are numerically zero and never rotated
        let negligible = {
            let fro = w.frobenius_norm() * eps;
            fro * fro
        };
        let mut converged = n < 2;
        for _ in 0..MAX_SWEEPS {
            let mut rotated = false;
            for i in 0..n.saturating_sub(1) {
                for j in i + 1..n {
                    let mut alpha = T::zero();
                    let mut beta = T::zero();
                    let mut gamma = C::<T>::zero();
                    for r in 0..m {
                        let x = w[(r, i)];
                        let y = w[(r, j)];
                        alpha += x.norm_sqr();
                        beta += y.norm_sqr();
                        gamma += x.conj() * y;
                    }
                    let g = gamma.norm();
                    if g == T::zero() || g <= tol * (alpha * beta).sqrt() || alpha.min(beta) <= negligible {
                        continue;
                    }
                    rotated = true;
                    let phase = gamma / re(g);
                    let zeta = (beta - alpha) / (T::lit(2.0) * g);
                    let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = c * t;
                    // Column j is first rephased by e^{-iφ}, then a real rotation is applied.
                    let pc = phase.conj();
                    for r in 0..m {
                        let x = w[(r, i)];
                        let y = w[(r, j)] * pc;
                        w[(r, i)] = x * c - y * s;
                        w[(r, j)] = x * s + y * c;
                    }
                    for r in 0..n {
                        let x = v[(r, i)];
                        let y = v[(r, j)] * pc;
                        v[(r, i)] = x * c - y * s;
                        v[(r, j)] = x * s + y * c;
                    }
                }
            }
            if !rotated {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Contract("Jacobi SVD did not converge".into()));
        }
        let norms: Vec<T> = (0..n)
            .map(|j| (0..m).map(|r| w[(r, j)].norm_sqr()).sum::<T>().sqrt())
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap_or(std::cmp::Ordering::Equal));
        let sigma: Vec<T> = order.iter().map(|&k| norms[k] * magnitude).collect();
        let u = CMatrix::from_fn(m, n, |r, c| {
            let k = order[c];
            if norms[k] > T::zero() {
                w[(r, k)] / re(norms[k])
            } else {
                C::zero()
            }
        });
        let v = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
        Ok(Self { u, sigma, v })
    }

    /// Columns of `V` whose singular value is at most `rel_threshold · σ_max`,
    /// together with the columns for the remaining dimensions when `A` is wide.
    pub fn null_space(&self, rel_threshold: T) -> Vec<Vec<C<T>>> {
        let smax = self.sigma.first().copied().unwrap_or_else(T::zero);
        let cut = rel_threshold * smax;
        let n = self.v.rows();
        (0..self.v.cols())
            .filter(|&k| self.sigma.get(k).map_or(true, |&s| s <= cut))
            .map(|k| (0..n).map(|r| self.v[(r, k)]).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cplx;

    #[test]
    fn reconstructs_rectangular_matrix() {
        let a = CMatrix::<f64>::from_fn(4, 3, |i, j| cplx((i * 3 + j) as f64 * 0.1, (i as f64) - (j as f64)));
        let s = Svd::new(&a).unwrap();
        let sig = CMatrix::from_real_diag(&s.sigma);
        let back = &(&s.u * &sig) * &s.v.adjoint();
        assert!((&back - &a).max_abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_has_null_vector() {
        let a = CMatrix::<f64>::from_fn(3, 3, |i, j| cplx((i + 1) as f64 * (j + 1) as f64, 0.0));
        let s = Svd::new(&a).unwrap();
        let null = s.null_space(1e-10);
        assert_eq!(null.len(), 2);
        for v in null {
            let av = a.apply(&v);
            assert!(av.iter().all(|z| z.norm() < 1e-12));
        }
    }
}

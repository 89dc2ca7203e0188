use num_traits::Zero;

use super::eigen::HermitianEigen;
use super::matrix::CMatrix;
use super::svd::Svd;
use crate::error::{dim_err, Error, Result};
use crate::scalar::{re, Real, C};

/// Factor of a bipartite space `A ⊗ B`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Partial trace over one factor of `ρ` on `ℂ^{d_A} ⊗ ℂ^{d_B}`, returning the
/// reduced matrix on the factor named by `keep`.
pub fn partial_trace<T: Real>(
    rho: &CMatrix<T>,
    (da, db): (usize, usize),
    keep: Subsystem,
) -> Result<CMatrix<T>> {
    let n = rho.require_square("partial_trace input")?;
    if n != da * db {
        return dim_err(format!("{n}x{n} matrix does not factor as {da}*{db}"));
    }
    Ok(match keep {
        Subsystem::A => CMatrix::from_fn(da, da, |i, j| {
            (0..db).fold(C::zero(), |acc, k| acc + rho[(i * db + k, j * db + k)])
        }),
        Subsystem::B => CMatrix::from_fn(db, db, |i, j| {
            (0..da).fold(C::zero(), |acc, k| acc + rho[(k * db + i, k * db + j)])
        }),
    })
}

/// Partial trace over the middle factor of `A ⊗ B ⊗ C`, keeping `A ⊗ C`.
pub fn partial_trace_middle<T: Real>(
    rho: &CMatrix<T>,
    (da, db, dc): (usize, usize, usize),
) -> Result<CMatrix<T>> {
    let n = rho.require_square("partial_trace input")?;
    if n != da * db * dc {
        return dim_err(format!("{n}x{n} matrix does not factor as {da}*{db}*{dc}"));
    }
    let idx = |a: usize, b: usize, c: usize| (a * db + b) * dc + c;
    Ok(CMatrix::from_fn(da * dc, da * dc, |i, j| {
        let (ai, ci) = (i / dc, i % dc);
        let (aj, cj) = (j / dc, j % dc);
        (0..db).fold(C::zero(), |acc, b| acc + rho[(idx(ai, b, ci), idx(aj, b, cj))])
    }))
}

/// Sum of singular values.
pub fn trace_norm<T: Real>(a: &CMatrix<T>) -> Result<T> {
    a.require_square("trace_norm input")?;
    if a.rows() == 0 {
        return Ok(T::zero());
    }
    if a.is_hermitian(T::epsilon() * T::lit(64.0) * (T::one() + a.max_abs())) {
        let e = HermitianEigen::new(a)?;
        return Ok(e.values.iter().map(|x| x.abs()).sum());
    }
    Ok(Svd::new(a)?.sigma.into_iter().sum())
}

/// `½‖a − b‖₁`.
pub fn trace_distance<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> Result<T> {
    Ok(trace_norm(&(a - b))? * T::lit(0.5))
}

/// Clips negative eigenvalues of a Hermitian matrix to zero and rescales the
/// result to the input trace. Matrices that are already PSD are returned as is.
pub fn psd_project<T: Real>(a: &CMatrix<T>, tol: T) -> Result<CMatrix<T>> {
    a.require_square("psd_project input")?;
    let defect = a.hermiticity_defect();
    if defect > tol {
        return Err(Error::Contract(format!(
            "psd_project needs a Hermitian input, deviation {defect:e} exceeds {tol:e}"
        )));
    }
    let e = HermitianEigen::new(a)?;
    if e.min() >= T::zero() {
        return Ok(a.clone());
    }
    let target = a.trace().re;
    let clipped = e.reconstruct_with(|x| x.max(T::zero()));
    let tr = clipped.trace().re;
    if tr <= T::zero() {
        return Err(Error::Contract("psd_project: no positive spectrum left".into()));
    }
    Ok(clipped.scale(re(target / tr)))
}

/// Embeds an operator acting on factors `first ⊗ last` of `first ⊗ middle ⊗ last`
/// as `op ⊗ I_middle` with the middle identity interleaved.
pub fn embed_outer<T: Real>(
    op: &CMatrix<T>,
    (da, db, dc): (usize, usize, usize),
) -> Result<CMatrix<T>> {
    if op.rows() != da * dc || op.cols() != da * dc {
        return dim_err("embed_outer: operator does not act on the outer factors");
    }
    let n = da * db * dc;
    let mut out = CMatrix::zeros(n, n);
    for a in 0..da {
        for c in 0..dc {
            for a2 in 0..da {
                for c2 in 0..dc {
                    let v = op[(a * dc + c, a2 * dc + c2)];
                    if v.is_zero() {
                        continue;
                    }
                    for b in 0..db {
                        out[((a * db + b) * dc + c, (a2 * db + b) * dc + c2)] = v;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Lifts `op`, acting on the factors `targets` (in that order) of a tensor
/// product with local dimensions `dims`, to the full space.
pub fn embed_operator<T: Real>(op: &CMatrix<T>, dims: &[usize], targets: &[usize]) -> Result<CMatrix<T>> {
    let sub: usize = targets.iter().map(|&t| dims.get(t).copied().unwrap_or(0)).product();
    if op.rows() != sub || op.cols() != sub {
        return dim_err(format!("operator is {}x{}, target factors have dimension {sub}", op.rows(), op.cols()));
    }
    let mut seen = vec![false; dims.len()];
    for &t in targets {
        if t >= dims.len() || seen[t] {
            return dim_err("target factors must be distinct and in range");
        }
        seen[t] = true;
    }
    let total: usize = dims.iter().product();
    let strides: Vec<usize> = (0..dims.len()).map(|i| dims[i + 1..].iter().product()).collect();
    // split a full index into (index on targets, remainder with target digits zeroed)
    let split = |idx: usize| -> (usize, usize) {
        let mut t_idx = 0;
        let mut rest = idx;
        for &t in targets {
            let digit = (idx / strides[t]) % dims[t];
            t_idx = t_idx * dims[t] + digit;
            rest -= digit * strides[t];
        }
        (t_idx, rest)
    };
    let join = |t_idx: usize, rest: usize| -> usize {
        let mut idx = rest;
        let mut r = t_idx;
        for &t in targets.iter().rev() {
            idx += (r % dims[t]) * strides[t];
            r /= dims[t];
        }
        idx
    };
    let mut out = CMatrix::zeros(total, total);
    for col in 0..total {
        let (tc, rest) = split(col);
        for tr in 0..sub {
            let v = op[(tr, tc)];
            if !v.is_zero() {
                out[(join(tr, rest), col)] = v;
            }
        }
    }
    Ok(out)
}

/// Row-major vectorization.
pub fn vectorize<T: Real>(a: &CMatrix<T>) -> Vec<C<T>> {
    a.data().to_vec()
}

pub fn unvectorize<T: Real>(v: &[C<T>], n: usize) -> Result<CMatrix<T>> {
    CMatrix::from_vec(n, n, v.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pauli::sigma_x;

    #[test]
    fn trace_norm_of_pauli_is_two() {
        assert!((trace_norm(&sigma_x::<f64>()).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn psd_project_rejects_non_hermitian() {
        let a = CMatrix::<f64>::unit(2, 0, 1);
        assert!(matches!(psd_project(&a, 1e-12), Err(Error::Contract(_))));
    }

    #[test]
    fn partial_trace_dimension_error() {
        let a = CMatrix::<f64>::identity(6);
        assert!(matches!(
            partial_trace(&a, (4, 2), Subsystem::A),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn embed_outer_matches_kron_when_middle_is_last() {
        let op = CMatrix::<f64>::from_fn(4, 4, |i, j| crate::scalar::cplx(i as f64, j as f64));
        let e = embed_outer(&op, (2, 1, 2)).unwrap();
        assert_eq!(e, op);
    }
}

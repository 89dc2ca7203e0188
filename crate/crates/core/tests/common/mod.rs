#![allow(dead_code)]

use oqbm::linalg::random::ginibre;
use oqbm::linalg::{CMatrix, HermitianEigen};
use oqbm::oqw::{Edge, OQWKernel};
use oqbm::scalar::cplx;
use oqbm::C;
use rand::Rng;

pub type M = CMatrix<f64>;

pub fn z(re: f64) -> C<f64> {
    cplx(re, 0.0)
}

/// Taylor series of the exponential, independent of the library's scaling-and-squaring.
pub fn taylor_exp(a: &M) -> M {
    let mut term = M::identity(a.rows());
    let mut sum = term.clone();
    for k in 1..80 {
        term = (&term * a).scale_real(1.0 / k as f64);
        sum += &term;
    }
    sum
}

/// Random complete Kraus family: Ginibre blocks normalized by `S^{-1/2}`.
pub fn random_kraus_family<R: Rng>(count: usize, dim: usize, rng: &mut R) -> Vec<M> {
    let blocks: Vec<M> = (0..count).map(|_| ginibre(dim, dim, rng)).collect();
    let mut s = M::zeros(dim, dim);
    for b in &blocks {
        s += &(&b.adjoint() * b);
    }
    let inv_sqrt = HermitianEigen::new(&s).unwrap().reconstruct_with(|x| 1.0 / x.sqrt());
    blocks.iter().map(|b| b * &inv_sqrt).collect()
}

/// Random OQW on `nv` vertices; every vertex gets 1 to 3 distinct targets.
pub fn random_kernel<R: Rng>(nv: usize, dim: usize, rng: &mut R) -> OQWKernel<f64> {
    let mut edges = Vec::new();
    for x in 0..nv {
        let k = rng.random_range(1..=3.min(nv));
        let mut targets: Vec<usize> = (0..nv).collect();
        for i in 0..k {
            let j = rng.random_range(i..nv);
            targets.swap(i, j);
        }
        for (y, kraus) in targets[..k].iter().zip(random_kraus_family(k, dim, rng)) {
            edges.push(Edge { from: x, to: *y, kraus });
        }
    }
    OQWKernel::new(nv, edges, 1e-10).unwrap()
}

/// Random stochastic matrix on `n` states.
pub fn random_stochastic<R: Rng>(n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let row: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.05).collect();
            let s: f64 = row.iter().sum();
            row.into_iter().map(|v| v / s).collect()
        })
        .collect()
}

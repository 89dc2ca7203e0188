//! Compensated accumulators and a schedule-independent ensemble reducer.

use rayon::prelude::*;

use crate::linalg::CMatrix;
use crate::scalar::{Real, C};

/// Neumaier-compensated sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum<T> {
    sum: T,
    comp: T,
}

impl<T: Real> KahanSum<T> {
    pub fn new() -> Self {
        Self { sum: T::zero(), comp: T::zero() }
    }

    #[inline]
    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &Self) {
        self.add(other.sum);
        self.add(other.comp);
    }

    #[inline]
    pub fn value(&self) -> T {
        self.sum + self.comp
    }
}

/// Running mean and variance of a scalar sample.
#[derive(Clone, Debug, Default)]
pub struct Moments<T> {
    n: usize,
    s1: KahanSum<T>,
    s2: KahanSum<T>,
}

impl<T: Real> Moments<T> {
    pub fn new() -> Self {
        Self { n: 0, s1: KahanSum::new(), s2: KahanSum::new() }
    }

    pub fn push(&mut self, x: T) {
        self.n += 1;
        self.s1.add(x);
        self.s2.add(x * x);
    }

    pub fn merge(&mut self, other: &Self) {
        self.n += other.n;
        self.s1.merge(&other.s1);
        self.s2.merge(&other.s2);
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> T {
        if self.n == 0 {
            return T::zero();
        }
        self.s1.value() / T::from_usize_lossy(self.n)
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> T {
        if self.n < 2 {
            return T::zero();
        }
        let n = T::from_usize_lossy(self.n);
        let m = self.mean();
        ((self.s2.value() - n * m * m) / (n - T::one())).max(T::zero())
    }

    pub fn stderr(&self) -> T {
        if self.n == 0 {
            return T::zero();
        }
        (self.variance() / T::from_usize_lossy(self.n)).sqrt()
    }
}

/// Entrywise mean and variance of a matrix-valued sample.
#[derive(Clone, Debug)]
pub struct MatrixMoments<T> {
    rows: usize,
    cols: usize,
    n: usize,
    re: Vec<Moments<T>>,
    im: Vec<Moments<T>>,
}

impl<T: Real> MatrixMoments<T> {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            n: 0,
            re: vec![Moments::new(); rows * cols],
            im: vec![Moments::new(); rows * cols],
        }
    }

    pub fn push(&mut self, m: &CMatrix<T>) {
        self.n += 1;
        for (k, z) in m.data().iter().enumerate() {
            self.re[k].push(z.re);
            self.im[k].push(z.im);
        }
    }

    /// Adds `m` scaled by `w`; used for weighted or zero-padded samples.
    pub fn push_weighted(&mut self, m: &CMatrix<T>, w: T) {
        self.n += 1;
        for (k, z) in m.data().iter().enumerate() {
            self.re[k].push(z.re * w);
            self.im[k].push(z.im * w);
        }
    }

    /// Records a sample equal to the zero matrix.
    pub fn push_zero(&mut self) {
        self.n += 1;
        for k in 0..self.re.len() {
            self.re[k].push(T::zero());
            self.im[k].push(T::zero());
        }
    }

    pub fn merge(&mut self, other: &Self) {
        self.n += other.n;
        for k in 0..self.re.len() {
            self.re[k].merge(&other.re[k]);
            self.im[k].merge(&other.im[k]);
        }
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> CMatrix<T> {
        CMatrix::from_fn(self.rows, self.cols, |i, j| {
            let k = i * self.cols + j;
            C::new(self.re[k].mean(), self.im[k].mean())
        })
    }

    /// Sum over entries of the variance of the entry mean.
    pub fn total_mean_variance(&self) -> T {
        self.re
            .iter()
            .chain(self.im.iter())
            .map(|m| {
                let s = m.stderr();
                s * s
            })
            .sum()
    }

    /// Bound on the standard error of the mean in trace norm:
    /// `‖X‖₁ ≤ √d ‖X‖_F`, applied to the entrywise standard errors.
    pub fn trace_norm_stderr(&self) -> T {
        T::from_usize_lossy(self.rows).sqrt() * self.total_mean_variance().sqrt()
    }
}

/// Default number of paths folded sequentially inside one parallel task.
pub const DEFAULT_CHUNK: usize = 256;

/// Runs `per_path(index, &mut acc)` for `index in 0..n`, split into fixed
/// chunks. Chunk accumulators are merged in chunk order, so the result is the
/// same for every thread count.
pub fn chunked_reduce<A, I, F, M>(n: usize, chunk: usize, init: I, per_path: F, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(usize, &mut A) + Sync,
    M: Fn(&mut A, A),
{
    let chunk = chunk.max(1);
    let n_chunks = n.div_ceil(chunk);
    let parts: Vec<A> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = init();
            for i in c * chunk..((c + 1) * chunk).min(n) {
                per_path(i, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = init();
    for p in parts {
        merge(&mut total, p);
    }
    total
}

/// Fallible variant: the first error in index order wins.
pub fn try_chunked_reduce<A, E, I, F, M>(
    n: usize,
    chunk: usize,
    init: I,
    per_path: F,
    merge: M,
) -> Result<A, E>
where
    A: Send,
    E: Send,
    I: Fn() -> A + Sync,
    F: Fn(usize, &mut A) -> Result<(), E> + Sync,
    M: Fn(&mut A, A),
{
    let chunk = chunk.max(1);
    let n_chunks = n.div_ceil(chunk);
    let parts: Vec<Result<A, E>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = init();
            for i in c * chunk..((c + 1) * chunk).min(n) {
                per_path(i, &mut acc)?;
            }
            Ok(acc)
        })
        .collect();
    let mut total = init();
    for p in parts {
        merge(&mut total, p?);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_recovers_small_terms() {
        let mut k = KahanSum::<f64>::new();
        k.add(1.0);
        for _ in 0..1000 {
            k.add(1e-16);
        }
        assert!((k.value() - (1.0 + 1e-13)).abs() < 1e-18);
    }

    #[test]
    fn reduction_independent_of_pool() {
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                chunked_reduce(
                    10_000,
                    37,
                    Moments::<f64>::new,
                    |i, acc| acc.push((i as f64).sin()),
                    |a, b| a.merge(&b),
                )
            })
        };
        let a = run(1);
        let b = run(3);
        assert_eq!(a.mean().to_bits(), b.mean().to_bits());
        assert_eq!(a.variance().to_bits(), b.variance().to_bits());
    }
}

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{mul_adjoint_into, mul_into, CMatrix, DensityMatrix};
use crate::oqw::{QuantumTrajectory, DEGENERATE_THRESHOLD};
use crate::rng::path_rng;
use crate::scalar::Real;

use super::kraus::kraus_exact;
use super::params::OQBMParams;

/// Repeated probe measurement with the exact pair `K_±`, allocation free.
#[derive(Clone, Debug)]
pub struct ProbeStepper<T> {
    kp: CMatrix<T>,
    km: CMatrix<T>,
    ep: CMatrix<T>,
    em: CMatrix<T>,
    tmp: CMatrix<T>,
    out: CMatrix<T>,
}

impl<T: Real> ProbeStepper<T> {
    pub fn new(p: &OQBMParams<T>) -> Result<Self> {
        let (kp, km) = kraus_exact(p)?;
        Ok(Self::from_pair(kp, km))
    }

    pub fn from_pair(kp: CMatrix<T>, km: CMatrix<T>) -> Self {
        let d = kp.rows();
        let ep = &kp.adjoint() * &kp;
        let em = &km.adjoint() * &km;
        Self { kp, km, ep, em, tmp: CMatrix::zeros(d, d), out: CMatrix::zeros(d, d) }
    }

    /// Probability of the `+1` outcome in state `rho`.
    pub fn prob_plus(&self, rho: &CMatrix<T>) -> T {
        self.ep.trace_product_re(rho)
    }

    /// Draws `Δ ∈ {+1, −1}` and replaces `rho` by the normalized post-state.
    pub fn step<R: Rng + ?Sized>(&mut self, rho: &mut CMatrix<T>, rng: &mut R) -> Result<i8> {
        let pp = self.ep.trace_product_re(rho).max(T::zero());
        let pm = self.em.trace_product_re(rho).max(T::zero());
        let thr = T::lit(DEGENERATE_THRESHOLD);
        if pp < thr && pm < thr {
            return Err(Error::DegenerateStep { vertex: 0, threshold: DEGENERATE_THRESHOLD });
        }
        let total = pp + pm;
        if (total - T::one()).abs() > T::lit(1e-9) {
            return Err(Error::Contract(format!("outcome probabilities sum to {total}")));
        }
        let u = T::lit(rng.random::<f64>()) * total;
        let plus = (u < pp && pp >= thr) || pm < thr;
        let (k, prob) = if plus { (&self.kp, pp) } else { (&self.km, pm) };
        mul_into(k, rho, &mut self.tmp);
        mul_adjoint_into(&self.tmp, k, &mut self.out);
        let inv = T::one() / prob;
        for (r, o) in rho.data_mut().iter_mut().zip(self.out.data()) {
            *r = *o * inv;
        }
        let d = rho.rows();
        for i in 0..d {
            rho[(i, i)].im = T::zero();
            for j in i + 1..d {
                let z = (rho[(i, j)] + rho[(j, i)].conj()) * T::lit(0.5);
                rho[(i, j)] = z;
                rho[(j, i)] = z.conj();
            }
        }
        Ok(if plus { 1 } else { -1 })
    }
}

/// Samples `(X_n, ϱ_n)` with `X_n = x₀ + δ Σ Δ_k` on stream `(seed, stream)`.
pub fn probe_measurement_unravel<T: Real>(
    p: &OQBMParams<T>,
    rho0: &DensityMatrix<T>,
    x0: T,
    n_steps: usize,
    seed: u64,
    stream: u64,
) -> Result<QuantumTrajectory<T, T>> {
    let mut stepper = ProbeStepper::new(p)?;
    let mut rng = path_rng(seed, stream);
    let mut rho = rho0.matrix().clone();
    let delta = p.delta();
    let mut steps = 0i64;
    let mut traj = QuantumTrajectory {
        times: vec![0],
        positions: vec![x0],
        states: vec![rho0.clone()],
        rng_seed: seed,
        stream,
    };
    for n in 1..=n_steps {
        steps += i64::from(stepper.step(&mut rho, &mut rng)?);
        traj.times.push(n);
        traj.positions.push(x0 + delta * T::lit(steps as f64));
        traj.states.push(DensityMatrix::new_unchecked(rho.clone()));
    }
    Ok(traj)
}

/// Final positions `X_n` of `n_paths` independent unravelings, path `i` on
/// stream `i`. Order and values do not depend on the thread count.
pub fn unravel_final_positions<T: Real>(
    p: &OQBMParams<T>,
    rho0: &DensityMatrix<T>,
    x0: T,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<T>> {
    let proto = ProbeStepper::new(p)?;
    let delta = p.delta();
    (0..n_paths)
        .into_par_iter()
        .map_init(
            || proto.clone(),
            |stepper, i| {
                let mut rng = path_rng(seed, i as u64);
                let mut rho = rho0.matrix().clone();
                let mut steps = 0i64;
                for _ in 0..n_steps {
                    steps += i64::from(stepper.step(&mut rho, &mut rng)?);
                }
                Ok(x0 + delta * T::lit(steps as f64))
            },
        )
        .collect()
}

//! Euler–Maruyama integration of the diffusive Belavkin equation
//!
//! `dϱ = 𝓛(ϱ)dt + (Nϱ + ϱN† − T(ϱ)ϱ)dB`, `dX = T(ϱ)dt + dB`,
//! `T(ϱ) = Tr((N + N†)ϱ)`,
//!
//! its linear (unnormalized) form under the reference Wiener measure, and the
//! Girsanov weight linking the two.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{dim_err, Error, Result};
use crate::linalg::{min_eigenvalue, mul_adjoint_into, mul_into, psd_project, CMatrix, DensityMatrix};
use crate::lindblad::LindbladGenerator;
use crate::rng::path_rng;
use crate::scalar::{Real, C};
use crate::stats::{chunked_reduce, MatrixMoments, Moments, DEFAULT_CHUNK};

/// Paths whose trace falls below this before renormalization are aborted.
pub const COLLAPSE_TRACE: f64 = 1e-12;

/// Largest admissible `dt·‖N‖²`.
pub const STABILITY_GUARD: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct SDEConfig<T> {
    pub dt: T,
    pub t_final: T,
    /// Divide by the trace after every step.
    pub renormalize: bool,
    /// Project onto PSD matrices when the smallest eigenvalue drops below
    /// `−psd_guard`; `None` disables the projection.
    pub psd_guard: Option<T>,
    pub seed: u64,
    /// Record ensemble statistics every this many steps (0: only at the end).
    pub record_every: usize,
}

impl<T: Real> SDEConfig<T> {
    pub fn new(dt: T, t_final: T, seed: u64) -> Self {
        Self { dt, t_final, renormalize: true, psd_guard: Some(T::lit(DEFAULT_PSD_GUARD)), seed, record_every: 0 }
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round().to_usize().unwrap_or(0)
    }

    pub fn validate(&self, g: &LindbladGenerator<T>) -> Result<()> {
        if !(self.dt > T::zero()) || !(self.t_final > T::zero()) {
            return Err(Error::Config("dt and t_final must be positive".into()));
        }
        if self.dt > self.t_final {
            return Err(Error::Config(format!("dt {} exceeds t_final {}", self.dt, self.t_final)));
        }
        let n2 = g.n_norm() * g.n_norm();
        if self.dt * n2 > T::lit(STABILITY_GUARD) {
            return Err(Error::Config(format!(
                "dt*|N|^2 = {:e} exceeds {STABILITY_GUARD}",
                (self.dt * n2).to_f64_lossy()
            )));
        }
        Ok(())
    }
}

/// Default projection threshold. Euler–Maruyama steps from near-pure states
/// routinely produce eigenvalues of order `−dt‖N‖²`, so the projection fires
/// often; the clipped mass is reported per path.
pub const DEFAULT_PSD_GUARD: f64 = 1e-10;

/// Diagnostics of one step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepInfo<T> {
    pub pre_trace: T,
    /// Trace mass removed by the PSD projection (0 when not triggered).
    pub clipped_mass: T,
}

/// Scratch buffers for allocation-free stepping.
#[derive(Clone, Debug)]
pub struct SdeWorkspace<T> {
    a: CMatrix<T>,
    b: CMatrix<T>,
    c: CMatrix<T>,
}

impl<T: Real> SdeWorkspace<T> {
    pub fn new(d: usize) -> Self {
        Self { a: CMatrix::zeros(d, d), b: CMatrix::zeros(d, d), c: CMatrix::zeros(d, d) }
    }
}

/// Shared kernel: `ρ ← ρ + 𝓛(ρ)dt + (Nρ + ρN† − sρ)dB`, returning `T(ρ)` at the
/// left endpoint. `nonlinear` selects `s = T(ρ)` (normalized) or `s = 0`.
fn em_update<T: Real>(g: &LindbladGenerator<T>, rho: &mut CMatrix<T>, dt: T, db: T, nonlinear: bool, ws: &mut SdeWorkspace<T>) -> T {
    let d = g.dim();
    mul_into(g.k(), rho, &mut ws.a);
    mul_into(g.n(), rho, &mut ws.b);
    mul_adjoint_into(&ws.b, g.n(), &mut ws.c);
    let t = {
        let mut s = T::zero();
        for i in 0..d {
            s += ws.b[(i, i)].re;
        }
        s * T::lit(2.0)
    };
    let s = if nonlinear { t } else { T::zero() };
    for i in 0..d {
        for j in i..d {
            let lij = ws.a[(i, j)] + ws.a[(j, i)].conj() + ws.c[(i, j)];
            let nij = ws.b[(i, j)] + ws.b[(j, i)].conj() - rho[(i, j)] * s;
            let v = rho[(i, j)] + lij * dt + nij * db;
            if i == j {
                rho[(i, i)] = C::new(v.re, T::zero());
            } else {
                // Hermitize: take the upper triangle and mirror it
                rho[(i, j)] = v;
                rho[(j, i)] = v.conj();
            }
        }
    }
    t
}

/// One Euler–Maruyama step of the normalized equation, in place.
#[allow(clippy::too_many_arguments)]
pub fn belavkin_step_in_place<T: Real>(
    g: &LindbladGenerator<T>,
    rho: &mut CMatrix<T>,
    x: &mut T,
    db: T,
    dt: T,
    renormalize: bool,
    psd_guard: Option<T>,
    ws: &mut SdeWorkspace<T>,
) -> Result<StepInfo<T>> {
    let t = em_update(g, rho, dt, db, true, ws);
    *x += t * dt + db;
    let tr = rho.trace().re;
    if !(tr >= T::lit(COLLAPSE_TRACE)) {
        return Err(Error::Integration { step: 0, reason: format!("trace {tr:e} before renormalization") });
    }
    if renormalize {
        rho.scale_mut(C::new(T::one() / tr, T::zero()));
    }
    let mut clipped = T::zero();
    if let Some(guard) = psd_guard {
        let lmin = min_eigenvalue(rho)?;
        if lmin < -guard {
            let e = crate::linalg::HermitianEigen::new(rho)?;
            clipped = e.values.iter().filter(|&&v| v < T::zero()).map(|&v| -v).sum();
            *rho = psd_project(rho, T::lit(1e-8))?;
        }
    }
    Ok(StepInfo { pre_trace: tr, clipped_mass: clipped })
}

/// `(ϱ, X) ↦ (ϱ', X')` for one increment `dB` of variance `dt`.
pub fn belavkin_step<T: Real>(
    g: &LindbladGenerator<T>,
    rho: &DensityMatrix<T>,
    x: T,
    db: T,
    dt: T,
) -> Result<(DensityMatrix<T>, T)> {
    if rho.dim() != g.dim() {
        return dim_err("state and generator differ in dimension");
    }
    let mut m = rho.matrix().clone();
    let mut x = x;
    let mut ws = SdeWorkspace::new(g.dim());
    belavkin_step_in_place(g, &mut m, &mut x, db, dt, true, Some(T::lit(DEFAULT_PSD_GUARD)), &mut ws)?;
    Ok((DensityMatrix::new_unchecked(m), x))
}

/// Linear step `ς ← ς + 𝓛(ς)dt + (Nς + ςN†)dW`; returns `T(ς)` (unnormalized).
pub fn unnormalized_step_in_place<T: Real>(g: &LindbladGenerator<T>, sigma: &mut CMatrix<T>, dw: T, dt: T, ws: &mut SdeWorkspace<T>) -> T {
    em_update(g, sigma, dt, dw, false, ws)
}

pub fn unnormalized_step<T: Real>(g: &LindbladGenerator<T>, sigma: &CMatrix<T>, dw: T, dt: T) -> Result<CMatrix<T>> {
    if sigma.rows() != g.dim() || sigma.cols() != g.dim() {
        return dim_err("state and generator differ in dimension");
    }
    let mut m = sigma.clone();
    let mut ws = SdeWorkspace::new(g.dim());
    unnormalized_step_in_place(g, &mut m, dw, dt, &mut ws);
    Ok(m)
}

/// A path of the linear equation under the reference measure.
#[derive(Clone, Debug)]
pub struct ReferencePath<T> {
    pub dt: T,
    /// Wiener increments `dW_k`.
    pub dw: Vec<T>,
    /// `T(ϱ_k)` at the left endpoints, `ϱ_k = ς_k / Tr ς_k`.
    pub drift: Vec<T>,
    /// `Tr ς_k`, starting with `Tr ς_0`.
    pub traces: Vec<T>,
    pub final_state: CMatrix<T>,
}

impl<T: Real> ReferencePath<T> {
    /// `W_t`, the reference-measure position increment.
    pub fn w(&self) -> T {
        self.dw.iter().copied().sum()
    }
}

/// Integrates the linear equation on stream `(seed, stream)`.
pub fn run_unnormalized<T: Real>(
    g: &LindbladGenerator<T>,
    sigma0: &CMatrix<T>,
    dt: T,
    n_steps: usize,
    seed: u64,
    stream: u64,
) -> ReferencePath<T> {
    let mut rng = path_rng(seed, stream);
    let sq = dt.sqrt();
    let mut s = sigma0.clone();
    let mut ws = SdeWorkspace::new(g.dim());
    let mut path = ReferencePath {
        dt,
        dw: Vec::with_capacity(n_steps),
        drift: Vec::with_capacity(n_steps),
        traces: Vec::with_capacity(n_steps + 1),
        final_state: CMatrix::zeros(0, 0),
    };
    path.traces.push(s.trace().re);
    for _ in 0..n_steps {
        let z: f64 = rng.sample(StandardNormal);
        let dw = T::lit(z) * sq;
        let tr = s.trace().re;
        let t_unnorm = unnormalized_step_in_place(g, &mut s, dw, dt, &mut ws);
        path.drift.push(t_unnorm / tr);
        path.dw.push(dw);
        path.traces.push(s.trace().re);
    }
    path.final_state = s;
    path
}

/// `exp(Σ T_k dW_k − ½ Σ T_k² dt)` by left-point quadrature.
pub fn girsanov_weight<T: Real>(path: &ReferencePath<T>) -> T {
    let mut a = crate::stats::KahanSum::new();
    for (&t, &dw) in path.drift.iter().zip(&path.dw) {
        a.add(t * dw - T::lit(0.5) * t * t * path.dt);
    }
    a.value().exp()
}

/// Initial position law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialPosition<T> {
    Fixed(T),
    Gaussian { mean: T, var: T },
}

/// Aggregated ensemble output.
#[derive(Clone, Debug)]
pub struct EnsembleStats<T> {
    pub times: Vec<T>,
    pub mean_state: Vec<CMatrix<T>>,
    /// Trace-norm standard-error bound of each mean state.
    pub state_stderr: Vec<T>,
    pub position: Vec<Moments<T>>,
    /// `X_T` per path, in path order (aborted paths omitted).
    pub final_positions: Vec<T>,
    pub clip_events: usize,
    pub max_clipped_mass: T,
    pub aborted: Vec<usize>,
    pub n_paths: usize,
}

impl<T: Real> EnsembleStats<T> {
    /// Sorted final positions, i.e. the empirical CDF support.
    pub fn empirical_cdf(&self) -> Vec<T> {
        let mut v = self.final_positions.clone();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        v
    }
}

struct Acc<T> {
    states: Vec<MatrixMoments<T>>,
    pos: Vec<Moments<T>>,
    finals: Vec<T>,
    clip_events: usize,
    max_clip: T,
    aborted: Vec<usize>,
}

/// Runs `n_paths` normalized trajectories; path `i` uses stream `i` of
/// `cfg.seed`. Deterministic for any thread count.
pub fn ensemble_run<T: Real>(
    g: &LindbladGenerator<T>,
    rho0: &DensityMatrix<T>,
    x0: InitialPosition<T>,
    n_paths: usize,
    cfg: &SDEConfig<T>,
) -> Result<EnsembleStats<T>> {
    cfg.validate(g)?;
    if rho0.dim() != g.dim() {
        return dim_err("state and generator differ in dimension");
    }
    let d = g.dim();
    let n_steps = cfg.n_steps();
    let every = if cfg.record_every == 0 { n_steps.max(1) } else { cfg.record_every };
    let checkpoints: Vec<usize> = (0..=n_steps).filter(|k| k % every == 0 || *k == n_steps).collect();
    let n_cp = checkpoints.len();
    let sq = cfg.dt.sqrt();
    let acc = chunked_reduce(
        n_paths,
        DEFAULT_CHUNK,
        || Acc {
            states: vec![MatrixMoments::new(d, d); n_cp],
            pos: vec![Moments::new(); n_cp],
            finals: Vec::new(),
            clip_events: 0,
            max_clip: T::zero(),
            aborted: Vec::new(),
        },
        |i, acc| {
            let mut rng = path_rng(cfg.seed, i as u64);
            let mut x = match x0 {
                InitialPosition::Fixed(x) => x,
                InitialPosition::Gaussian { mean, var } => {
                    let z: f64 = rng.sample(StandardNormal);
                    mean + var.sqrt() * T::lit(z)
                }
            };
            let mut rho = rho0.matrix().clone();
            let mut ws = SdeWorkspace::new(d);
            let mut local_states = Vec::with_capacity(n_cp);
            let mut local_pos = Vec::with_capacity(n_cp);
            let mut clip_total = T::zero();
            let mut clips = 0;
            local_states.push(rho.clone());
            local_pos.push(x);
            let mut next_cp = 1;
            for k in 1..=n_steps {
                let z: f64 = rng.sample(StandardNormal);
                match belavkin_step_in_place(g, &mut rho, &mut x, T::lit(z) * sq, cfg.dt, cfg.renormalize, cfg.psd_guard, &mut ws) {
                    Ok(info) => {
                        if info.clipped_mass > T::zero() {
                            clips += 1;
                            clip_total += info.clipped_mass;
                        }
                    }
                    Err(_) => {
                        acc.aborted.push(i);
                        return;
                    }
                }
                if next_cp < n_cp && checkpoints[next_cp] == k {
                    local_states.push(rho.clone());
                    local_pos.push(x);
                    next_cp += 1;
                }
            }
            for (m, s) in acc.states.iter_mut().zip(&local_states) {
                m.push(s);
            }
            for (m, &p) in acc.pos.iter_mut().zip(&local_pos) {
                m.push(p);
            }
            acc.finals.push(x);
            acc.clip_events += clips;
            acc.max_clip = acc.max_clip.max(clip_total);
        },
        |a, b| {
            for (m, o) in a.states.iter_mut().zip(&b.states) {
                m.merge(o);
            }
            for (m, o) in a.pos.iter_mut().zip(&b.pos) {
                m.merge(o);
            }
            a.finals.extend(b.finals);
            a.clip_events += b.clip_events;
            a.max_clip = a.max_clip.max(b.max_clip);
            a.aborted.extend(b.aborted);
        },
    );
    Ok(EnsembleStats {
        times: checkpoints.iter().map(|&k| cfg.dt * T::from_usize_lossy(k)).collect(),
        mean_state: acc.states.iter().map(MatrixMoments::mean).collect(),
        state_stderr: acc.states.iter().map(MatrixMoments::trace_norm_stderr).collect(),
        position: acc.pos,
        final_positions: acc.finals,
        clip_events: acc.clip_events,
        max_clipped_mass: acc.max_clip,
        aborted: acc.aborted,
        n_paths,
    })
}

/// Final positions only, for large ensembles; path `i` on stream `i`.
pub fn final_positions<T: Real>(
    g: &LindbladGenerator<T>,
    rho0: &DensityMatrix<T>,
    x0: T,
    n_paths: usize,
    cfg: &SDEConfig<T>,
) -> Result<Vec<T>> {
    use rayon::prelude::*;
    cfg.validate(g)?;
    let d = g.dim();
    let n_steps = cfg.n_steps();
    let sq = cfg.dt.sqrt();
    (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(cfg.seed, i as u64);
            let mut rho = rho0.matrix().clone();
            let mut ws = SdeWorkspace::new(d);
            let mut x = x0;
            for step in 0..n_steps {
                let z: f64 = rng.sample(StandardNormal);
                belavkin_step_in_place(g, &mut rho, &mut x, T::lit(z) * sq, cfg.dt, cfg.renormalize, cfg.psd_guard, &mut ws)
                    .map_err(|e| match e {
                        Error::Integration { reason, .. } => Error::Integration { step, reason },
                        other => other,
                    })?;
            }
            Ok(x)
        })
        .collect()
}

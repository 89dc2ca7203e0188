//! Experiment dispatch. Every experiment returns rows tagged with the core
//! module that produced the number and the oracle it was compared against.

use std::time::Instant;

use oqbm::belavkin::{
    ensemble_run, final_positions, girsanov_weight, run_unnormalized, InitialPosition, SDEConfig,
};
use oqbm::linalg::random::{ginibre, random_density};
use oqbm::linalg::{trace_norm, DensityMatrix, HermitianEigen};
use oqbm::lindblad::{evolve_exact, evolve_q, invariant_state, residual, Grid, LindbladGenerator, QField, CFL};
use oqbm::measure::PointerMap;
use oqbm::nondemolition::{
    check_nondemolition, consistency_check, hadamard_counterexample, oqw_dilation, oqw_initial_state,
};
use oqbm::oqbm::{
    completeness_defect, dilation_check, kraus_truncated, lattice_kernel, oqbm_iterate, toyfock_evolve,
    toyfock_evolve_factorized, unravel_final_positions, BoundaryPolicy, LatticeField, OQBMParams, ToyFockRegister,
};
use oqbm::oqw::{expectation_identity_check, Edge, OQWKernel, ROUNDOFF_FLOOR};
use oqbm::rng::aux_rng;
use oqbm::stats::Moments;
use oqbm::{Complex64, Matrix};
use rand::{Rng, RngCore};
use rayon::prelude::*;

use crate::config::{invalid_field, ConfigError, ConsistencyConfig, DilationConfig, ExperimentConfig, ExperimentKind, Model, Reference};
use crate::ks::{ks_distance, ks_distance_normal, KsError};
use crate::report::{Bound, ConvergenceReport, Row};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] oqbm::Error),
    #[error(transparent)]
    Ks(#[from] KsError),
    #[error("thread pool: {0}")]
    Threads(String),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

const LINALG: &str = "linalg-core";
const OQW: &str = "oqw";
const DISCRETE: &str = "oqbm-discrete";
const SDE: &str = "belavkin-sde";
const PDE: &str = "lindblad-pde";
const CONSISTENCY: &str = "nondemolition-consistency";

/// Independent seed for sub-task `tag` of a run.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    aux_rng(seed, tag).next_u64()
}

/// Runs `cfg.kind` with `cfg.seed` (default 0).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    let kind = match cfg.kind {
        Some(k) => k,
        None => return Err(invalid_field("kind", "required").into()),
    };
    run_kind(cfg, kind, cfg.seed.unwrap_or(0))
}

pub fn run_kind(cfg: &ExperimentConfig, kind: ExperimentKind, seed: u64) -> Result<ConvergenceReport> {
    let start = Instant::now();
    let rows = match kind {
        ExperimentKind::SimulateOqw => simulate_oqw(cfg, seed)?,
        ExperimentKind::SimulateBelavkin => simulate_belavkin(cfg, seed)?,
        ExperimentKind::SolveLindblad => solve_lindblad(cfg)?,
        ExperimentKind::TrajectoryConvergence => trajectory_convergence(cfg, seed)?,
        ExperimentKind::ChannelConvergence => channel_convergence(cfg)?,
        ExperimentKind::DilationAudit => dilation_audit(cfg, seed)?,
        ExperimentKind::RegimeMap => regime_map(cfg)?,
        ExperimentKind::ConsistencyAudit => consistency_audit(cfg, seed)?,
    };
    Ok(ConvergenceReport { kind, seed, rows, wall_clock: start.elapsed() })
}

/// Runs `f` on a dedicated pool of `threads` workers.
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::Threads(e.to_string()))?;
    Ok(pool.install(f))
}

struct Rows {
    rows: Vec<Row>,
    module: &'static str,
    oracle: &'static str,
}

impl Rows {
    fn new(module: &'static str, oracle: &'static str) -> Self {
        Self { rows: Vec::new(), module, oracle }
    }

    fn tag(&mut self, module: &'static str, oracle: &'static str) -> &mut Self {
        self.module = module;
        self.oracle = oracle;
        self
    }

    fn push(&mut self, point: usize, parameter: &'static str, value: f64, metric: impl Into<String>, measured: f64, bound: Bound) {
        self.rows.push(Row {
            point,
            parameter,
            value,
            metric: metric.into(),
            measured,
            bound,
            module: self.module,
            oracle: self.oracle,
        });
    }
}

fn without_m(model: &Model, kind: ExperimentKind) -> Result<()> {
    if model.m.is_some() {
        return Err(invalid_field("model.m", format!("{kind} uses the exact dilation, which needs M = 0")).into());
    }
    Ok(())
}

fn trajectory_convergence(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<Row>> {
    let model = cfg.model()?;
    without_m(&model, ExperimentKind::TrajectoryConvergence)?;
    let taus = cfg.require_taus(1)?;
    let t = cfg.require_t_final()?;
    let n_paths = cfg.require_n_paths()?;
    let mut out = Rows::new(DISCRETE, "");
    let reference_sample = match cfg.reference {
        Reference::Gaussian => {
            if model.n.max_abs() > 0.0 {
                return Err(invalid_field("reference", "the Gaussian law is exact only for model.n = 0").into());
            }
            out.tag(DISCRETE, "gaussian-cdf");
            None
        }
        Reference::Sde => {
            let dt = cfg.dt.unwrap_or(taus[taus.len() - 1]);
            let g = LindbladGenerator::new(model.n.clone(), model.h.clone())?;
            let sde = SDEConfig::new(dt, t, derive_seed(seed, u64::MAX));
            out.tag(DISCRETE, "belavkin-sde");
            Some(final_positions(&g, &model.rho0, cfg.x0, n_paths, &sde)?)
        }
    };
    let mut ks = Vec::with_capacity(taus.len());
    for (k, &tau) in taus.iter().enumerate() {
        let steps = cfg.steps_for(tau, k)?;
        let p = OQBMParams::new(model.n.clone(), model.h.clone(), None, tau)?;
        let xs = unravel_final_positions(&p, &model.rho0, cfg.x0, steps, n_paths, derive_seed(seed, k as u64))?;
        let d = match &reference_sample {
            Some(r) => ks_distance(&xs, r)?,
            None => ks_distance_normal(&xs, cfg.x0, t)?,
        };
        let bound = if k + 1 == taus.len() { Bound::AtMost(cfg.tolerances.ks_final()) } else { Bound::Info };
        out.push(k, "tau", tau, "ks_distance", d, bound);
        ks.push(d);
    }
    for k in 1..ks.len() {
        out.push(k, "tau", taus[k], "ks_ratio", ks[k] / ks[k - 1], Bound::AtMost(1.0));
    }
    Ok(out.rows)
}

/// `ρ₀·δ·g_{0,var}(x)` on `2·half + 1` sites of spacing `δ`.
pub fn gaussian_lattice(delta: f64, half: usize, var: f64, rho0: &Matrix) -> oqbm::Result<LatticeField<f64>> {
    let norm = 1.0 / (2.0 * std::f64::consts::PI * var).sqrt();
    let sites = (0..2 * half + 1)
        .map(|i| {
            let x = (i as f64 - half as f64) * delta;
            rho0.scale_real(delta * norm * (-(x * x) / (2.0 * var)).exp())
        })
        .collect();
    LatticeField::new(-(half as f64) * delta, delta, sites, BoundaryPolicy::AbsorbAndTrack)
}

/// `∫‖Q_walk − Q_pde‖₁ dx` at `t` with `dx = δ = √τ`.
pub fn walk_vs_pde(model: &Model, tau: f64, t: f64, steps: usize, half_width: f64, var: f64) -> oqbm::Result<f64> {
    let p = OQBMParams::new(model.n.clone(), model.h.clone(), None, tau)?;
    let delta = p.delta();
    let f0 = gaussian_lattice(delta, (half_width / delta).ceil() as usize, var, model.rho0.matrix())?;
    let walk = oqbm_iterate(&p, &f0, steps, true)?;
    let g = LindbladGenerator::from_params(&p);
    let q = evolve_q(&g, &QField::from_lattice(&f0)?, t, CFL * tau)?;
    QField::from_lattice(&walk)?.distance(&q)
}

fn channel_convergence(cfg: &ExperimentConfig) -> Result<Vec<Row>> {
    let model = cfg.model()?;
    without_m(&model, ExperimentKind::ChannelConvergence)?;
    let taus = cfg.require_taus(2)?;
    let t = cfg.require_t_final()?;
    let half_width = cfg.window.half_width.unwrap_or(8.0);
    let var = cfg.window.initial_variance.unwrap_or(0.5);
    let mut out = Rows::new(DISCRETE, "lindblad-pde");
    let mut errs = Vec::with_capacity(taus.len());
    for (k, &tau) in taus.iter().enumerate() {
        let steps = cfg.steps_for(tau, k)?;
        let e = walk_vs_pde(&model, tau, t, steps, half_width, var)?;
        out.push(k, "tau", tau, "walk_pde_l1", e, Bound::Info);
        errs.push(e);
    }
    let [lo, hi] = cfg.tolerances.ratio_band();
    out.tag(PDE, "tau-sweep");
    for k in 1..errs.len() {
        out.push(k, "tau", taus[k], "error_ratio", errs[k] / errs[k - 1], Bound::Within(lo, hi));
    }
    Ok(out.rows)
}

/// Random field on `n` sites with the outer `pad` sites on each side empty.
pub fn random_field<R: Rng>(p: &OQBMParams<f64>, n: usize, pad: usize, rng: &mut R) -> oqbm::Result<LatticeField<f64>> {
    let d = p.dim();
    let w: Vec<f64> = (0..n).map(|i| if i < pad || i + pad >= n { 0.0 } else { rng.random::<f64>() }).collect();
    let total: f64 = w.iter().sum();
    let sites = w.iter().map(|&wi| random_density::<f64, _>(d, rng).matrix().scale_real(wi / total)).collect();
    let half = (n / 2) as f64;
    LatticeField::new(-half * p.delta(), p.delta(), sites, BoundaryPolicy::AbsorbAndTrack)
}

fn dilation_audit(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<Row>> {
    let model = cfg.model()?;
    let taus = cfg.require_taus(1)?;
    let sites = cfg.window.sites.unwrap_or(65);
    if sites < 5 || sites % 2 == 0 {
        return Err(invalid_field("window.sites", "need an odd count of at least 5").into());
    }
    let tol = &cfg.tolerances;
    let mut out = Rows::new(DISCRETE, "");
    let mut scaled = Vec::with_capacity(taus.len());
    for (k, &tau) in taus.iter().enumerate() {
        let full = OQBMParams::new(model.n.clone(), model.h.clone(), model.m.clone(), tau)?;
        let p = full.without_m();
        let field = random_field(&p, sites, 2, &mut aux_rng(seed, k as u64))?;
        out.tag(DISCRETE, "dense-dilation");
        out.push(k, "tau", tau, "dilation_exact", dilation_check(&p, &field, true)?, Bound::AtMost(tol.dilation()));
        let trunc = dilation_check(&p, &field, false)? / tau.powf(1.5);
        out.push(k, "tau", tau, "dilation_truncated_scaled", trunc, Bound::Info);
        let (bp, bm) = kraus_truncated(&full);
        let defect = completeness_defect(&bp, &bm) / tau.powf(1.5);
        out.tag(DISCRETE, "completeness");
        out.push(k, "tau", tau, "defect_scaled", defect, Bound::Info);
        scaled.push(defect);
    }
    if scaled.len() > 1 {
        let max = scaled.iter().copied().fold(f64::MIN, f64::max);
        let min = scaled.iter().copied().fold(f64::MAX, f64::min);
        out.tag(DISCRETE, "tau-sweep");
        out.push(0, "tau", taus[0], "defect_spread", max / min, Bound::AtMost(tol.defect_spread()));
    }

    let dil = cfg.dilation.clone().unwrap_or_default();
    let p = OQBMParams::new(model.n.clone(), model.h.clone(), None, taus[0])?;
    let d = p.dim();
    let phi: Vec<Complex64> = match &dil.psi0 {
        Some(v) if v.len() == d => v.iter().map(|z| Complex64::new(z[0], z[1])).collect(),
        Some(v) => {
            return Err(invalid_field("dilation.psi0", format!("has {} entries, expected {d}", v.len())).into())
        }
        None => (0..d).map(|g| Complex64::new(if g == 0 { 1.0 } else { 0.0 }, 0.0)).collect(),
    };
    let norm: f64 = phi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(invalid_field("dilation.psi0", "not normalized").into());
    }
    let window = dil.toy_window;
    let n = dil.n_probes;
    let reg0 = ToyFockRegister::product(&phi, window, window / 2, n)?;
    let origin = -((window / 2) as f64) * p.delta();
    let f0 = reg0.reduced_field(origin, p.delta(), BoundaryPolicy::AbsorbAndTrack)?;
    let reg = toyfock_evolve(&p, &reg0, n)?;
    let fac = toyfock_evolve_factorized(&p, &reg0, n)?;
    let f = reg.reduced_field(origin, p.delta(), BoundaryPolicy::AbsorbAndTrack)?;
    let iterated = oqbm_iterate(&p, &f0, n, true)?;
    out.tag(DISCRETE, "oqbm_step");
    out.push(n, "n_probes", n as f64, "toyfock_vs_step", f.distance(&iterated)?, Bound::AtMost(tol.toyfock()));
    out.tag(DISCRETE, "unit-norm");
    out.push(n, "n_probes", n as f64, "toyfock_norm_defect", (reg.norm() - 1.0).abs(), Bound::AtMost(tol.toyfock()));
    let gap = reg.state().iter().zip(fac.state()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    out.tag(DISCRETE, "factorized-order");
    out.push(n, "n_probes", n as f64, "toyfock_factorization", gap, Bound::AtMost(tol.dilation()));
    Ok(out.rows)
}

fn regime_map(cfg: &ExperimentConfig) -> Result<Vec<Row>> {
    let model = cfg.model()?;
    let Some(reg) = &cfg.regime else {
        return Err(invalid_field("regime", "required for regime-map").into());
    };
    if reg.lambdas.is_empty() || reg.lambdas.iter().any(|l| !l.is_finite()) {
        return Err(invalid_field("regime.lambdas", "need finite values").into());
    }
    let tol = &cfg.tolerances;
    let mut out = Rows::new(PDE, "invariant_state");
    for (k, &lambda) in reg.lambdas.iter().enumerate() {
        let g = LindbladGenerator::new(model.n.scale_real(lambda), model.h.clone())?;
        let inv = invariant_state(&g)?;
        let drift = g.drift_operator();
        let states = inv.states();
        out.push(k, "lambda", lambda, "n_invariant", states.len() as f64, Bound::Info);
        for (j, s) in states.iter().enumerate() {
            let v = s.matrix().trace_product_re(&drift);
            out.push(k, "lambda", lambda, format!("residual[{j}]"), residual(&g, s.matrix()), Bound::AtMost(tol.residual()));
            out.push(k, "lambda", lambda, format!("speed[{j}]"), v, Bound::Info);
            if let Some(slope) = reg.speed_slope {
                let e = (v.abs() - slope * lambda.abs()).abs();
                out.push(k, "lambda", lambda, format!("speed_error[{j}]"), e, Bound::AtMost(tol.speed()));
            }
        }
    }
    Ok(out.rows)
}

/// Random complete Kraus family `G_k S^{-1/2}` from Ginibre blocks.
fn random_kraus_family<R: Rng>(count: usize, dim: usize, rng: &mut R) -> oqbm::Result<Vec<Matrix>> {
    let blocks: Vec<Matrix> = (0..count).map(|_| ginibre(dim, dim, rng)).collect();
    let mut s = Matrix::zeros(dim, dim);
    for b in &blocks {
        s += &(&b.adjoint() * b);
    }
    let inv_sqrt = HermitianEigen::new(&s)?.reconstruct_with(|x| 1.0 / x.sqrt());
    Ok(blocks.iter().map(|b| b * &inv_sqrt).collect())
}

/// Random OQW where every vertex moves to 1 to 3 distinct targets.
pub fn random_kernel<R: Rng>(nv: usize, dim: usize, rng: &mut R) -> oqbm::Result<OQWKernel<f64>> {
    let mut edges = Vec::new();
    for x in 0..nv {
        let k = rng.random_range(1..=3.min(nv));
        let mut targets: Vec<usize> = (0..nv).collect();
        for i in 0..k {
            let j = rng.random_range(i..nv);
            targets.swap(i, j);
        }
        for (y, kraus) in targets[..k].iter().zip(random_kraus_family(k, dim, rng)?) {
            edges.push(Edge { from: x, to: *y, kraus });
        }
    }
    OQWKernel::new(nv, edges, 1e-10)
}

fn consistency_audit(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<Row>> {
    let c = cfg.consistency.clone().unwrap_or_default();
    if c.n_vertices < 2 || c.gyro_dim == 0 {
        return Err(invalid_field("consistency", "need at least 2 vertices and a nonempty gyroscope").into());
    }
    let tol = &cfg.tolerances;
    let mut rng = aux_rng(seed, 0);
    let kernel = random_kernel(c.n_vertices, c.gyro_dim, &mut rng)?;
    let rho_g = random_density::<f64, _>(c.gyro_dim, &mut rng);
    let me = oqw_dilation(&kernel, c.n_steps, 0)?;
    let start = 1 % c.n_vertices;
    let rho0 = oqw_initial_state(&rho_g, c.n_vertices, c.n_steps, start, 0);
    let mut out = Rows::new(CONSISTENCY, "commutation-certificate");
    let cert = check_nondemolition(&me);
    let nv = c.n_vertices;
    out.push(0, "n_steps", c.n_steps as f64, "max_commutator", cert.max_commutator, Bound::AtMost(tol.consistency()));
    out.push(0, "n_steps", c.n_steps as f64, "factorization_defect", cert.max_factorization_defect, Bound::AtMost(tol.consistency()));
    let pointers: Vec<(PointerMap, DensityMatrix<f64>)> = (0..=c.n_steps)
        .map(|k| {
            if c.noisy_pointers {
                (PointerMap::shift(nv, move |x| (x * (k + 1)) % nv), random_density::<f64, _>(nv, &mut rng))
            } else {
                (PointerMap::perfect(nv, 0), DensityMatrix::basis(nv, 0))
            }
        })
        .collect();
    let r = consistency_check(&me, &rho0, &pointers)?;
    out.tag(CONSISTENCY, "sequential-indirect-measurement");
    out.push(0, "n_steps", c.n_steps as f64, "joint_law_tv", r.max_total_variation, Bound::AtMost(tol.consistency()));
    out.push(0, "n_steps", c.n_steps as f64, "conditional_state_distance", r.max_state_distance, Bound::AtMost(tol.consistency()));
    if c.counterexample {
        let bad = hadamard_counterexample::<f64>(c.gyro_dim);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = DensityMatrix::pure(&[Complex64::new(h, 0.0), Complex64::new(h, 0.0)])?;
        let rho0 = rho_g.tensor(&plus);
        let perfect: Vec<_> = (0..2).map(|_| (PointerMap::perfect(2, 0), DensityMatrix::basis(2, 0))).collect();
        let r = consistency_check(&bad, &rho0, &perfect)?;
        out.tag(CONSISTENCY, "hadamard-counterexample");
        out.push(1, "n_steps", 1.0, "counterexample_commutator", check_nondemolition(&bad).max_commutator, Bound::Info);
        out.push(1, "n_steps", 1.0, "counterexample_tv", r.max_total_variation, Bound::AtLeast(tol.counterexample()));
    }
    Ok(out.rows)
}

fn simulate_oqw(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<Row>> {
    let model = cfg.model()?;
    let n_paths = cfg.require_n_paths()?;
    let Some(n_steps) = cfg.n_steps else {
        return Err(invalid_field("n_steps", "required for simulate-oqw").into());
    };
    let (kernel, start) = match &cfg.walk {
        Some(w) => {
            let mut edges = Vec::with_capacity(w.edges.len());
            for (i, e) in w.edges.iter().enumerate() {
                let field = format!("walk.edges[{i}].kraus");
                let kraus = e.kraus.to_matrix(&field)?;
                if kraus.rows() != model.rho0.dim() {
                    return Err(invalid_field(&field, "dimension differs from rho0").into());
                }
                if e.from >= w.n_vertices || e.to >= w.n_vertices {
                    return Err(invalid_field(&format!("walk.edges[{i}]"), "vertex out of range").into());
                }
                edges.push(Edge { from: e.from, to: e.to, kraus });
            }
            if w.start >= w.n_vertices {
                return Err(invalid_field("walk.start", "vertex out of range").into());
            }
            let kernel = OQWKernel::new(w.n_vertices, edges, 1e-10)
                .map_err(|e| invalid_field("walk.edges", e.to_string()))?;
            (kernel, w.start)
        }
        None => {
            let tau = *cfg.require_taus(1)?.first().expect("nonempty");
            let p = OQBMParams::new(model.n.clone(), model.h.clone(), None, tau)?;
            let sites = cfg.window.sites.unwrap_or(2 * n_steps + 3);
            (lattice_kernel(&p, sites)?, sites / 2)
        }
    };
    let rep = expectation_identity_check(&kernel, &model.rho0, start, n_steps, n_paths, seed)?;
    let mut out = Rows::new(OQW, "oqw_apply");
    for (x, (&d, &se)) in rep.per_site_distance.iter().zip(&rep.per_site_stderr).enumerate() {
        if d > 0.0 || se > 0.0 {
            out.push(x, "site", x as f64, "site_distance", d, Bound::Info);
        }
    }
    let bound = cfg.tolerances.stderr_factor() * rep.stderr_sum + ROUNDOFF_FLOOR;
    out.push(n_steps, "n_steps", n_steps as f64, "discrepancy", rep.discrepancy, Bound::AtMost(bound));
    Ok(out.rows)
}

fn simulate_belavkin(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<Row>> {
    let model = cfg.model()?;
    let dt = cfg.require_dt()?;
    let t = cfg.require_t_final()?;
    let n_paths = cfg.require_n_paths()?;
    let g = LindbladGenerator::new(model.n.clone(), model.h.clone())?;
    let mut sde = SDEConfig::new(dt, t, seed);
    sde.record_every = cfg.record_every.unwrap_or(0);
    let stats = ensemble_run(&g, &model.rho0, InitialPosition::Fixed(cfg.x0), n_paths, &sde)?;
    let mut out = Rows::new(SDE, "lindblad-semigroup");
    for (k, &tk) in stats.times.iter().enumerate() {
        let exact = evolve_exact(&g, model.rho0.matrix(), tk)?;
        let err = trace_norm(&(&stats.mean_state[k] - &exact))?;
        let bound = 3.0 * stats.state_stderr[k] + 10.0 * dt;
        out.tag(SDE, "lindblad-semigroup");
        out.push(k, "t", tk, "mean_state_error", err, Bound::AtMost(bound));
        out.tag(SDE, "none");
        out.push(k, "t", tk, "mean_position", stats.position[k].mean(), Bound::Info);
        out.push(k, "t", tk, "position_variance", stats.position[k].variance(), Bound::Info);
    }
    let last = stats.times.len() - 1;
    out.push(last, "t", t, "aborted_paths", stats.aborted.len() as f64, Bound::Info);
    out.push(last, "t", t, "max_clipped_mass", stats.max_clipped_mass, Bound::Info);

    if cfg.girsanov {
        let steps = sde.n_steps();
        let ref_seed = derive_seed(seed, 1);
        let x0 = cfg.x0;
        let weighted: Vec<(f64, f64)> = (0..n_paths)
            .into_par_iter()
            .map(|i| {
                let p = run_unnormalized(&g, model.rho0.matrix(), dt, steps, ref_seed, i as u64);
                (girsanov_weight(&p), x0 + p.w())
            })
            .collect();
        let tests: [(&str, fn(f64) -> f64); 3] = [("x", |x| x), ("x^2", |x| x * x), ("cos_x", f64::cos)];
        out.tag(SDE, "girsanov-reweighting");
        for (name, f) in tests {
            let mut w = Moments::new();
            for &(wt, x) in &weighted {
                w.push(wt * f(x));
            }
            let mut direct = Moments::new();
            for &x in &stats.final_positions {
                direct.push(f(x));
            }
            let se = (w.stderr().powi(2) + direct.stderr().powi(2)).sqrt();
            let gap = (w.mean() - direct.mean()).abs();
            out.push(last, "t", t, format!("girsanov_gap[{name}]"), gap, Bound::AtMost(cfg.tolerances.stderr_factor() * se));
        }
    }
    Ok(out.rows)
}

fn solve_lindblad(cfg: &ExperimentConfig) -> Result<Vec<Row>> {
    let model = cfg.model()?;
    let Some(dx) = cfg.dx.filter(|&d| d > 0.0) else {
        return Err(invalid_field("dx", "required and positive for solve-lindblad").into());
    };
    let t = cfg.require_t_final()?;
    let half_width = cfg.window.half_width.unwrap_or(9.0);
    let var = cfg.window.initial_variance.unwrap_or(1.0);
    let dt = cfg.dt.unwrap_or(CFL * dx * dx);
    let g = LindbladGenerator::new(model.n.clone(), model.h.clone())?;
    let grid = Grid::symmetric(half_width, dx)?;
    let q0 = QField::gaussian(grid, cfg.x0, var, model.rho0.matrix())?;
    let q = evolve_q(&g, &q0, t, dt)?;
    let tol = &cfg.tolerances;
    let mut out = Rows::new(PDE, "mass-balance");
    out.push(0, "t", t, "mass_balance", (q.mass() + q.leak - q0.mass()).abs(), Bound::AtMost(tol.marginal()));
    out.push(0, "t", t, "leak", q.leak, Bound::Info);
    let marginal = evolve_exact(&g, &q0.gyro_marginal(), t)?;
    out.tag(PDE, "lindblad-semigroup");
    out.push(0, "t", t, "marginal_error", trace_norm(&(&q.gyro_marginal() - &marginal))?, Bound::AtMost(tol.marginal()));
    out.tag(LINALG, "hermitian-eigen");
    out.push(0, "t", t, "min_eigenvalue", q.min_eigenvalue()?, Bound::AtLeast(-tol.residual()));
    out.tag(PDE, "none");
    out.push(0, "t", t, "mean_position", q.mean_position(), Bound::Info);
    if model.n.max_abs() == 0.0 && model.h.max_abs() == 0.0 {
        let s = var + t;
        let norm = 1.0 / (2.0 * std::f64::consts::PI * s).sqrt();
        let mut err = 0.0;
        for (i, v) in q.values.iter().enumerate() {
            let x = grid.x(i) - cfg.x0;
            let exact = model.rho0.matrix().scale_real(norm * (-(x * x) / (2.0 * s)).exp());
            err += trace_norm(&(v - &exact))? * dx;
        }
        out.tag(PDE, "heat-kernel");
        out.push(0, "t", t, "heat_kernel_l1", err, Bound::AtMost(tol.heat_kernel()));
    }
    Ok(out.rows)
}

impl Default for ConsistencyConfig {
    fn default() -> Self {
        Self { n_vertices: 3, gyro_dim: 2, n_steps: 2, noisy_pointers: true, counterexample: true }
    }
}

impl Default for DilationConfig {
    fn default() -> Self {
        Self { n_probes: 8, toy_window: 33, psi0: None }
    }
}

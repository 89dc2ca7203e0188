mod common;

use common::{z, M};
use oqbm::belavkin::{
    belavkin_step, belavkin_step_in_place, ensemble_run, final_positions, girsanov_weight, run_unnormalized,
    unnormalized_step, InitialPosition, SDEConfig, SdeWorkspace,
};
use oqbm::linalg::pauli::{sigma_minus, sigma_x, sigma_y, sigma_z};
use oqbm::linalg::random::{random_density, random_hermitian};
use oqbm::linalg::{min_eigenvalue, trace_norm, DensityMatrix};
use oqbm::lindblad::{evolve_exact, LindbladGenerator};
use oqbm::rng::{aux_rng, path_rng};
use oqbm::scalar::cplx;
use oqbm::stats::{MatrixMoments, Moments};
use oqbm::Error;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn plus() -> DensityMatrix<f64> {
    DensityMatrix::pure(&[z(1.0), z(1.0)]).unwrap()
}

fn gen(n: M, h: M) -> LindbladGenerator<f64> {
    LindbladGenerator::new(n, h).unwrap()
}

fn i_sigma_y() -> M {
    sigma_y::<f64>().scale(cplx(0.0, 1.0))
}

#[test]
fn zero_coupling_step_is_commutator_only() {
    let mut rng = aux_rng(40, 0);
    let h = random_hermitian::<f64, _>(2, 1.0, &mut rng);
    let g = gen(M::zeros(2, 2), h.clone());
    let rho = random_density::<f64, _>(2, &mut rng);
    let (dt, db) = (1e-3, 0.037);
    let (next, x) = belavkin_step(&g, &rho, 0.5, db, dt).unwrap();
    let comm = &(&h * rho.matrix()) - &(rho.matrix() * &h);
    let oracle = rho.matrix() + &comm.scale(cplx(0.0, -dt));
    assert!((next.matrix() - &oracle).max_abs() < 1e-15);
    assert_eq!(x, 0.5 + db);
}

#[test]
fn anti_hermitian_coupling_has_no_drift() {
    let g = gen(i_sigma_y(), M::zeros(2, 2));
    let mut rng = aux_rng(41, 0);
    let mut rho = random_density::<f64, _>(2, &mut rng);
    let mut x = 0.0;
    let mut w = 0.0;
    let mut r = path_rng(41, 1);
    for _ in 0..1000 {
        let db = 0.03 * r.sample::<f64, _>(StandardNormal);
        assert!(g.drift(rho.matrix()).abs() < 1e-15);
        let (next, nx) = belavkin_step(&g, &rho, x, db, 1e-3).unwrap();
        rho = next;
        x = nx;
        w += db;
    }
    assert!((x - w).abs() < 1e-12);
}

#[test]
fn stability_guard_is_enforced() {
    let g = gen(sigma_z::<f64>().scale_real(2.0), M::zeros(2, 2));
    let cfg = SDEConfig::new(0.05, 1.0, 0);
    assert!(matches!(ensemble_run(&g, &plus(), InitialPosition::Fixed(0.0), 10, &cfg), Err(Error::Config(_))));
    let cfg = SDEConfig::new(2.0, 1.0, 0);
    assert!(matches!(cfg.validate(&gen(M::zeros(2, 2), M::zeros(2, 2))), Err(Error::Config(_))));
}

#[test]
fn collapse_is_an_integration_failure() {
    let g = gen(M::identity(2), M::zeros(2, 2));
    // an input whose trace is already below the collapse guard
    let mut x = 0.0;
    let mut ws = SdeWorkspace::new(2);
    let mut sigma = M::unit(2, 0, 0).scale_real(1e-14);
    let r = belavkin_step_in_place(&g, &mut sigma, &mut x, 0.0, 1e-3, true, None, &mut ws);
    assert!(matches!(r, Err(Error::Integration { .. })));
}

#[test]
fn dephasing_trajectories_polarize() {
    let g = gen(sigma_z(), M::zeros(2, 2));
    let (t, n): (f64, usize) = (10.0, 2000);
    let cfg = SDEConfig::new(1e-3, t, 42);
    let mut up = Moments::new();
    let mut down = Moments::new();
    let mut unresolved = 0;
    for i in 0..n {
        let mut r = path_rng(42, i as u64);
        let mut rho = plus().matrix().clone();
        let mut x = 0.0;
        let mut ws = SdeWorkspace::new(2);
        for _ in 0..cfg.n_steps() {
            let db = cfg.dt.sqrt() * r.sample::<f64, _>(StandardNormal);
            belavkin_step_in_place(&g, &mut rho, &mut x, db, cfg.dt, true, cfg.psd_guard, &mut ws).unwrap();
        }
        let p0 = rho[(0, 0)].re;
        if p0 > 0.99 {
            up.push(x / t);
        } else if p0 < 0.01 {
            down.push(x / t);
        } else {
            unresolved += 1;
        }
    }
    assert!(unresolved < n / 100, "{unresolved} paths not polarized");
    let frac = up.count() as f64 / n as f64;
    assert!((frac - 0.5).abs() <= 5.0 * (0.25 / n as f64).sqrt(), "fraction {frac}");
    // the transient before polarization biases X_t/t towards 0 by O(1/t)
    assert!((up.mean() - 2.0).abs() < 0.25, "{}", up.mean());
    assert!((down.mean() + 2.0).abs() < 0.25, "{}", down.mean());
}

#[test]
fn unnormalized_trace_is_constant_without_coupling() {
    let mut rng = aux_rng(43, 0);
    let g = gen(M::zeros(3, 3), random_hermitian::<f64, _>(3, 1.0, &mut rng));
    let mut s = random_density::<f64, _>(3, &mut rng).matrix().scale_real(0.7);
    for k in 0..100 {
        s = unnormalized_step(&g, &s, 0.1 * (k as f64).sin(), 1e-3).unwrap();
        assert!((s.trace().re - 0.7).abs() < 1e-14);
    }
}

#[test]
fn unnormalized_mean_follows_semigroup() {
    let n = &sigma_minus::<f64>() + &sigma_z::<f64>().scale_real(0.5);
    let g = gen(n, sigma_x::<f64>().scale_real(0.3));
    let sigma0 = plus().matrix().clone();
    let (dt, steps, paths) = (1e-3, 1000, 100_000);
    let mut mean = MatrixMoments::new(2, 2);
    let mut tr = Moments::new();
    for i in 0..paths {
        let p = run_unnormalized(&g, &sigma0, dt, steps, 44, i as u64);
        mean.push(&p.final_state);
        tr.push(*p.traces.last().unwrap());
    }
    let oracle = evolve_exact(&g, &sigma0, 1.0).unwrap();
    let err = trace_norm(&(&mean.mean() - &oracle)).unwrap();
    assert!(err <= 5.0 * mean.trace_norm_stderr(), "{err} vs {}", mean.trace_norm_stderr());
    // martingale: E Tr ς_t = Tr ς_0
    assert!((tr.mean() - 1.0).abs() <= 5.0 * tr.stderr(), "{} ± {}", tr.mean(), tr.stderr());
}

#[test]
fn girsanov_weight_is_one_without_drift() {
    let g = gen(i_sigma_y(), sigma_z::<f64>().scale_real(0.4));
    let p = run_unnormalized(&g, plus().matrix(), 1e-3, 500, 45, 0);
    assert_eq!(girsanov_weight(&p), 1.0);
}

#[test]
fn girsanov_weight_tracks_unnormalized_trace() {
    let g = gen(sigma_z(), M::zeros(2, 2));
    let mut worst = 0.0f64;
    let mut rel = Moments::new();
    for i in 0..50 {
        let p = run_unnormalized(&g, plus().matrix(), 1e-4, 10_000, 46, i);
        let tr = *p.traces.last().unwrap();
        let e = (girsanov_weight(&p) - tr).abs() / tr;
        worst = worst.max(e);
        rel.push(e);
    }
    // the two differ by Σ T²(dt − dW²)/2 per path, of spread up to √(n/2)·T²dt ≈ 0.03
    assert!(worst <= 0.05, "worst relative gap {worst} (mean {})", rel.mean());
}

#[test]
fn importance_sampling_matches_normalized_dynamics() {
    let g = gen(sigma_z::<f64>().scale_real(0.8), sigma_x::<f64>().scale_real(0.5));
    let (dt, steps, paths) = (1e-3, 1000, 4000);
    let cfg = SDEConfig::new(dt, 1.0, 47);
    let direct = final_positions(&g, &plus(), 0.0, paths, &cfg).unwrap();
    let tests: [fn(f64) -> f64; 3] = [|x| x, |x| x * x, |x| (x).cos()];
    let mut weighted: Vec<Moments<f64>> = vec![Moments::new(); 3];
    for i in 0..paths {
        let p = run_unnormalized(&g, plus().matrix(), dt, steps, 48, i as u64);
        let w = girsanov_weight(&p);
        for (m, f) in weighted.iter_mut().zip(&tests) {
            m.push(w * f(p.w()));
        }
    }
    for (m, f) in weighted.iter().zip(&tests) {
        let mut d = Moments::new();
        for &x in &direct {
            d.push(f(x));
        }
        let se = (m.stderr().powi(2) + d.stderr().powi(2)).sqrt();
        assert!((m.mean() - d.mean()).abs() <= 5.0 * se, "{} vs {} (se {se})", m.mean(), d.mean());
    }
}

#[test]
fn zero_coupling_ensemble_is_unitary_and_brownian() {
    let h = sigma_x::<f64>().scale_real(0.7);
    let g = gen(M::zeros(2, 2), h.clone());
    let rho0 = DensityMatrix::basis(2, 0);
    let cfg = SDEConfig::new(1e-3, 1.0, 49);
    let s = ensemble_run(&g, &rho0, InitialPosition::Fixed(0.0), 4000, &cfg).unwrap();
    let u = oqbm::linalg::matrix_exp(&h.scale(cplx(0.0, -1.0))).unwrap();
    let oracle = u.sandwich(rho0.matrix());
    assert!(trace_norm(&(s.mean_state.last().unwrap() - &oracle)).unwrap() <= 10.0 * cfg.dt);
    // state is deterministic here
    assert!(*s.state_stderr.last().unwrap() < 1e-12);
    let pos = s.position.last().unwrap();
    assert!(pos.mean().abs() <= 5.0 * pos.stderr());
    // Var(X_1) = 1 with standard error ≈ √(2/n)
    assert!((pos.variance() - 1.0).abs() <= 5.0 * (2.0 / 4000.0f64).sqrt());
}

#[test]
fn dephasing_mean_decays_at_rate_two() {
    let g = gen(sigma_z(), M::zeros(2, 2));
    let mut cfg = SDEConfig::new(1e-3, 1.0, 50);
    cfg.record_every = 250;
    let rho0 = plus();
    let s = ensemble_run(&g, &rho0, InitialPosition::Fixed(0.0), 4000, &cfg).unwrap();
    for ((t, m), se) in s.times.iter().zip(&s.mean_state).zip(&s.state_stderr) {
        let off = 0.5 * (-2.0 * t).exp();
        assert!((m[(0, 1)].re - off).abs() <= 3.0 * se + 10.0 * cfg.dt, "t={t}: {} vs {off}", m[(0, 1)].re);
    }
}

#[test]
fn mean_position_obeys_drift_identity() {
    let n = &sigma_minus::<f64>() + &sigma_z::<f64>().scale_real(0.4);
    let g = gen(n, sigma_y::<f64>().scale_real(0.3));
    let rho0 = plus();
    let mut cfg = SDEConfig::new(1e-3, 1.0, 51);
    cfg.record_every = 500;
    let s = ensemble_run(&g, &rho0, InitialPosition::Fixed(0.0), 8000, &cfg).unwrap();
    // ∫₀ᵗ Tr((N+N†)e^{s𝓛}ρ₀) ds by composite Simpson on 200 panels
    let drift_op = g.drift_operator();
    let rate = |u: f64| evolve_exact(&g, rho0.matrix(), u).unwrap().trace_product_re(&drift_op);
    for (t, pos) in s.times.iter().zip(&s.position) {
        let panels = 200;
        let h = t / panels as f64;
        let integral = if *t == 0.0 {
            0.0
        } else {
            (0..=panels)
                .map(|k| {
                    let w = if k == 0 || k == panels { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                    w * rate(k as f64 * h)
                })
                .sum::<f64>()
                * h
                / 3.0
        };
        assert!((pos.mean() - integral).abs() <= 5.0 * pos.stderr() + 1e-12, "t={t}: {} vs {integral}", pos.mean());
    }
}

#[test]
fn mean_state_duality_for_reference_couplings() {
    for (k, n) in [sigma_minus::<f64>(), sigma_z(), i_sigma_y()].into_iter().enumerate() {
        let g = gen(n, M::zeros(2, 2));
        let rho0 = plus();
        let cfg = SDEConfig::new(1e-3, 1.0, 52 + k as u64);
        let s = ensemble_run(&g, &rho0, InitialPosition::Fixed(0.0), 2000, &cfg).unwrap();
        assert!(s.aborted.is_empty());
        let oracle = evolve_exact(&g, rho0.matrix(), 1.0).unwrap();
        let err = trace_norm(&(s.mean_state.last().unwrap() - &oracle)).unwrap();
        let bound = 3.0 * s.state_stderr.last().unwrap() + 10.0 * cfg.dt;
        assert!(err <= bound, "coupling {k}: {err} > {bound}");
    }
}

#[test]
fn ensembles_are_thread_count_independent() {
    let g = gen(sigma_minus::<f64>().scale_real(1.5), sigma_x::<f64>().scale_real(0.2));
    let cfg = SDEConfig::new(1e-3, 0.3, 53);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let s = ensemble_run(&g, &plus(), InitialPosition::Gaussian { mean: 0.0, var: 0.5 }, 700, &cfg).unwrap();
            let f = final_positions(&g, &plus(), 0.0, 300, &cfg).unwrap();
            (s.mean_state.last().unwrap().clone(), s.final_positions, s.position.last().unwrap().variance(), f)
        })
    };
    let a = run(1);
    let b = run(4);
    assert!(a.0.data().iter().zip(b.0.data()).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
    assert_eq!(a.1, b.1);
    assert_eq!(a.2.to_bits(), b.2.to_bits());
    assert_eq!(a.3, b.3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn step_invariants_along_paths(seed in any::<u64>(), scale in 0.1f64..2.0) {
        let mut rng = aux_rng(seed, 10);
        let n = oqbm::linalg::random::random_bounded::<f64, _>(2, scale, &mut rng);
        let g = gen(n, random_hermitian::<f64, _>(2, 1.0, &mut rng));
        let dt: f64 = 1e-3;
        let n2 = g.n_norm() * g.n_norm();
        let mut rho = random_density::<f64, _>(2, &mut rng).matrix().clone();
        let mut x = 0.0;
        let mut ws = SdeWorkspace::new(2);
        let mut r = path_rng(seed, 0);
        let mut clipped = 0.0;
        for _ in 0..1000 {
            let db = dt.sqrt() * r.sample::<f64, _>(StandardNormal);
            let t = g.drift(&rho);
            let x_before = x;
            let info = belavkin_step_in_place(&g, &mut rho, &mut x, db, dt, true, Some(1e-10), &mut ws).unwrap();
            // the exact flow preserves the trace, so only discretization error remains
            prop_assert!((info.pre_trace - 1.0).abs() <= dt);
            prop_assert!((rho.trace().re - 1.0).abs() <= 1e-8);
            prop_assert!((x - x_before).abs() <= t.abs() * dt + 8.0 * dt.sqrt());
            prop_assert!(min_eigenvalue(&rho).unwrap() >= -1e-10);
            // a single step overshoots the boundary by the second-order terms, at most ‖N‖²(dB² + dt)
            prop_assert!(info.clipped_mass <= n2 * (db * db + dt) + 1e-12, "{} vs {}", info.clipped_mass, n2 * (db * db + dt));
            clipped += info.clipped_mass;
        }
        prop_assert!(clipped.is_finite());
    }
}

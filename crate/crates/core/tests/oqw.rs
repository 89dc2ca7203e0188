mod common;

use common::{random_kernel, random_stochastic, taylor_exp, z, M};
use oqbm::linalg::pauli::{sigma_minus, sigma_z};
use oqbm::linalg::random::random_density;
use oqbm::linalg::{DensityMatrix, HermitianEigen};
use oqbm::oqbm::{lattice_kernel, v_tau_generator, OQBMParams};
use oqbm::oqw::{expectation_identity_check, oqw_apply, run_trajectory, sample_step, DiagonalState, Edge, OQWKernel};
use oqbm::rng::{aux_rng, path_rng};
use oqbm::Error;
use proptest::prelude::*;

fn mat_vec_power(p: &[Vec<f64>], start: usize, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; p.len()];
    v[start] = 1.0;
    for _ in 0..n {
        let mut w = vec![0.0; p.len()];
        for (x, row) in p.iter().enumerate() {
            for (y, &pxy) in row.iter().enumerate() {
                w[y] += v[x] * pxy;
            }
        }
        v = w;
    }
    v
}

fn cycle_walk(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|x| {
            let mut row = vec![0.0; n];
            row[(x + 1) % n] += 0.5;
            row[(x + n - 1) % n] += 0.3;
            row[x] += 0.2;
            row
        })
        .collect()
}

#[test]
fn identity_walk_leaves_state_unchanged() {
    let edges = (0..3).map(|x| Edge { from: x, to: x, kraus: M::identity(2) }).collect();
    let k = OQWKernel::new(3, edges, 1e-10).unwrap();
    let mut rng = aux_rng(20, 0);
    let sites: Vec<M> = (0..3).map(|_| random_density::<f64, _>(2, &mut rng).matrix().scale_real(1.0 / 3.0)).collect();
    let s = DiagonalState::new(sites).unwrap();
    let out = oqw_apply(&k, &s).unwrap();
    assert!(out.distance(&s).unwrap() < 1e-15);
}

#[test]
fn classical_walk_follows_markov_chain() {
    let p = cycle_walk(5);
    let k = OQWKernel::<f64>::classical(&p, 2).unwrap();
    let rho = DensityMatrix::maximally_mixed(2);
    let mut s = DiagonalState::point(5, 0, &rho);
    for n in 1..=12 {
        s = oqw_apply(&k, &s).unwrap();
        let oracle = mat_vec_power(&p, 0, n);
        for (site, &q) in s.sites().iter().zip(&oracle) {
            assert!((site - &rho.matrix().scale_real(q)).max_abs() < 1e-15);
        }
    }
}

#[test]
fn unbiased_lattice_is_a_fair_coin() {
    let p = OQBMParams::new(M::zeros(2, 2), M::zeros(2, 2), None, 0.01).unwrap();
    let k = lattice_kernel(&p, 41).unwrap();
    let rho = DensityMatrix::basis(2, 0);
    let mut s = DiagonalState::point(41, 20, &rho);
    let n = 10;
    for _ in 0..n {
        s = oqw_apply(&k, &s).unwrap();
    }
    for j in 0..=n {
        let binom = (0..j).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64) / 2f64.powi(n as i32);
        let site = 20 + 2 * j - n;
        assert!((s.sites()[site][(0, 0)].re - binom).abs() < 1e-14);
    }
}

#[test]
fn state_outside_kernel_is_rejected() {
    let k = OQWKernel::<f64>::classical(&cycle_walk(3), 1).unwrap();
    let s = DiagonalState::point(4, 0, &DensityMatrix::basis(1, 0));
    assert!(matches!(oqw_apply(&k, &s), Err(Error::Domain(_))));
}

#[test]
fn classical_sampling_matches_row_and_keeps_state() {
    let p = cycle_walk(4);
    let k = OQWKernel::<f64>::classical(&p, 2).unwrap();
    let mut rng = aux_rng(21, 0);
    let rho = random_density::<f64, _>(2, &mut rng);
    let n = 100_000;
    let mut counts = [0usize; 4];
    let mut r = path_rng(21, 1);
    for _ in 0..n {
        let (y, post) = sample_step(&k, &rho, 1, &mut r).unwrap();
        counts[y] += 1;
        assert!((post.matrix() - rho.matrix()).max_abs() < 1e-14);
    }
    for y in 0..4 {
        let q = p[1][y];
        let se = (q * (1.0 - q) / n as f64).sqrt();
        assert!((counts[y] as f64 / n as f64 - q).abs() <= 5.0 * se + 1e-12);
    }
}

#[test]
fn dephasing_step_probability() {
    let tau = 0.01;
    let p = OQBMParams::new(sigma_z(), M::zeros(2, 2), None, tau).unwrap();
    let k = lattice_kernel(&p, 3).unwrap();
    // V|0,0⟩ = cos δ |0,0⟩ + sin δ |0,1⟩, so p₊ = (1 + sin 2δ)/2
    let delta = tau.sqrt();
    let closed = 0.5 * (1.0 + (2.0 * delta).sin());
    let v = taylor_exp(&v_tau_generator(&p));
    let kp = M::from_fn(2, 2, |a, b| (v[(2 * a, 2 * b)] + v[(2 * a + 1, 2 * b)]).scale(std::f64::consts::FRAC_1_SQRT_2));
    let rho = DensityMatrix::basis(2, 0);
    let direct = kp.sandwich(rho.matrix()).trace().re;
    assert!((direct - closed).abs() < 1e-14);
    let n = 100_000;
    let mut r = path_rng(22, 0);
    let right = (0..n).filter(|_| sample_step(&k, &rho, 1, &mut r).unwrap().0 == 2).count();
    let se = (closed * (1.0 - closed) / n as f64).sqrt();
    assert!((right as f64 / n as f64 - closed).abs() <= 5.0 * se);
}

#[test]
fn rank_one_kraus_collapses() {
    let u = [z(0.6), z(0.8)];
    let u2 = [z(0.8), z(-0.6)];
    let e0 = Edge { from: 0, to: 0, kraus: M::outer(&u, &[z(1.0), z(0.0)]) };
    let e1 = Edge { from: 0, to: 1, kraus: M::outer(&u2, &[z(0.0), z(1.0)]) };
    let e2 = Edge { from: 1, to: 1, kraus: M::identity(2) };
    let k = OQWKernel::new(2, vec![e0, e1, e2], 1e-10).unwrap();
    let rho = DensityMatrix::maximally_mixed(2);
    let mut r = path_rng(23, 0);
    for _ in 0..100 {
        let (y, post) = sample_step(&k, &rho, 0, &mut r).unwrap();
        let target = if y == 0 { M::projector(&u) } else { M::projector(&u2) };
        assert!((post.matrix() - &target).max_abs() < 1e-14);
    }
}

#[test]
fn degenerate_step_is_an_error() {
    let e0 = Edge { from: 0, to: 1, kraus: M::unit(2, 0, 0) };
    let e1 = Edge { from: 0, to: 0, kraus: M::unit(2, 1, 1) };
    let e2 = Edge { from: 1, to: 1, kraus: M::identity(2) };
    let k = OQWKernel::new(2, vec![e0, e1, e2], 1e-10).unwrap();
    // zero matrix: every branch has probability 0
    let rho = DensityMatrix::new_unchecked(M::zeros(2, 2));
    let mut r = path_rng(24, 0);
    assert!(matches!(sample_step(&k, &rho, 0, &mut r), Err(Error::DegenerateStep { vertex: 0, .. })));
}

#[test]
fn trajectories_follow_edges_and_stay_normalized() {
    let mut rng = aux_rng(25, 0);
    let k = random_kernel(5, 2, &mut rng);
    let rho = random_density::<f64, _>(2, &mut rng);
    let t = run_trajectory(&k, &rho, 0, 50, 25, 3).unwrap();
    for w in t.positions.windows(2) {
        assert!(k.out_edges(w[0]).iter().any(|&e| k.edges()[e].to == w[1]));
    }
    for s in &t.states {
        assert!((s.matrix().trace().re - 1.0).abs() < 1e-9);
    }
    let again = run_trajectory(&k, &rho, 0, 50, 25, 3).unwrap();
    assert_eq!(t.positions, again.positions);
}

#[test]
fn identity_check_with_zero_steps() {
    let mut rng = aux_rng(26, 0);
    let k = random_kernel(3, 2, &mut rng);
    let rho = random_density::<f64, _>(2, &mut rng);
    let r = expectation_identity_check(&k, &rho, 1, 0, 1000, 1).unwrap();
    assert!(r.discrepancy < 1e-12);
    assert!(r.pass);
}

#[test]
fn identity_check_classical_walk() {
    let p = cycle_walk(5);
    let k = OQWKernel::<f64>::classical(&p, 1).unwrap();
    let rho = DensityMatrix::basis(1, 0);
    let r = expectation_identity_check(&k, &rho, 0, 10, 100_000, 7).unwrap();
    assert!(r.pass, "{r:?}");
    // per-site frequencies within binomial confidence bands
    let exact = mat_vec_power(&p, 0, 10);
    for (x, &q) in exact.iter().enumerate() {
        let se = (q * (1.0 - q) / 1e5).sqrt();
        assert!(r.per_site_distance[x] <= 5.0 * se + 1e-12);
    }
}

#[test]
fn identity_check_oqbm_kernel() {
    let p = OQBMParams::new(sigma_minus(), M::zeros(2, 2), None, 0.05).unwrap();
    let k = lattice_kernel(&p, 41).unwrap();
    let rho = DensityMatrix::pure(&[z(1.0), z(1.0)]).unwrap();
    let r = expectation_identity_check(&k, &rho, 20, 20, 100_000, 8).unwrap();
    assert!(r.pass, "{r:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn oqw_apply_conserves_trace_and_positivity(seed in any::<u64>(), nv in 2usize..8, dim in 1usize..4) {
        let mut rng = aux_rng(seed, 7);
        let k = random_kernel(nv, dim, &mut rng);
        let rho = random_density::<f64, _>(dim, &mut rng);
        let mut s = DiagonalState::point(nv, 0, &rho);
        for _ in 0..1000 {
            s = oqw_apply(&k, &s).unwrap();
        }
        prop_assert!((s.total_trace() - 1.0).abs() <= 1e-7);
        for site in s.sites() {
            prop_assert!(HermitianEigen::new(site).unwrap().min() >= -1e-9);
        }
    }

    #[test]
    fn monte_carlo_matches_channel(seed in any::<u64>(), nv in 2usize..8, dim in 1usize..4, steps in 1usize..8) {
        let mut rng = aux_rng(seed, 8);
        let k = random_kernel(nv, dim, &mut rng);
        let rho = random_density::<f64, _>(dim, &mut rng);
        let r = expectation_identity_check(&k, &rho, 0, steps, 2000, seed).unwrap();
        prop_assert!(r.pass, "{:?}", r);
    }

    #[test]
    fn classical_kernels_are_channels(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = aux_rng(seed, 9);
        let p = random_stochastic(n, &mut rng);
        let k = OQWKernel::<f64>::classical(&p, 1).unwrap();
        let s = oqw_apply(&k, &DiagonalState::point(n, 0, &DensityMatrix::basis(1, 0))).unwrap();
        for (y, site) in s.sites().iter().enumerate() {
            prop_assert!((site[(0, 0)].re - p[0][y]).abs() <= 1e-14);
        }
    }
}

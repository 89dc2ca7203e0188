use oqbm::channel::{apply_channel, choi_matrix, extract_kraus, stinespring_step, KrausChannel};
use oqbm::linalg::pauli::sigma_minus;
use oqbm::linalg::random::{random_density, random_pure, random_unitary};
use oqbm::linalg::{trace_norm, CMatrix, DensityMatrix, HermitianEigen};
use oqbm::measure::{
    indirect_channel, indirect_measure, measure_discrete, restrict_diagonal, unnormalized_state, PointerMap,
};
use oqbm::oqbm::{gyro_channel, v_tau_generator, OQBMParams};
use oqbm::rng::aux_rng;
use oqbm::scalar::cplx;
use oqbm::C;
use proptest::prelude::*;

type M = CMatrix<f64>;

fn z(re: f64) -> C<f64> {
    cplx(re, 0.0)
}

fn plus_state() -> DensityMatrix<f64> {
    DensityMatrix::pure(&[z(1.0), z(1.0)]).unwrap()
}

/// Taylor series of the exponential, summed until terms vanish.
fn taylor_exp(a: &M) -> M {
    let mut term = M::identity(a.rows());
    let mut sum = term.clone();
    for k in 1..60 {
        term = (&term * a).scale_real(1.0 / k as f64);
        sum += &term;
    }
    sum
}

fn swap() -> M {
    M::from_fn(4, 4, |i, j| {
        let (a, b) = (j / 2, j % 2);
        z(if i == b * 2 + a { 1.0 } else { 0.0 })
    })
}

#[test]
fn identity_channel_is_identity() {
    let mut rng = aux_rng(10, 0);
    let rho = random_density::<f64, _>(3, &mut rng);
    let out = apply_channel(&KrausChannel::identity(3), &rho).unwrap();
    assert!((out.matrix() - rho.matrix()).max_abs() < 1e-15);
}

#[test]
fn projector_channel_dephases() {
    let mut rng = aux_rng(11, 0);
    let rho = random_density::<f64, _>(2, &mut rng);
    let ch = KrausChannel::new(vec![M::unit(2, 0, 0), M::unit(2, 1, 1)], 1e-12).unwrap();
    let out = apply_channel(&ch, &rho).unwrap();
    let diag = M::from_diag(&rho.matrix().diagonal());
    assert!((out.matrix() - &diag).max_abs() < 1e-15);
}

#[test]
fn gyro_channel_matches_direct_sum() {
    let p = OQBMParams::new(sigma_minus(), M::zeros(2, 2), None, 0.01).unwrap();
    let ch = gyro_channel(&p, true).unwrap();
    let rho = DensityMatrix::maximally_mixed(2);
    let out = apply_channel(&ch, &rho).unwrap();
    // independent: Taylor-series dilation, Kraus operators from the probe |±⟩ components
    let v = taylor_exp(&v_tau_generator(&p));
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let k = |sign: f64| M::from_fn(2, 2, |a, b| (v[(2 * a, 2 * b)] + v[(2 * a + 1, 2 * b)].scale(sign)).scale(s));
    let (kp, km) = (k(1.0), k(-1.0));
    let oracle = &kp.sandwich(rho.matrix()) + &km.sandwich(rho.matrix());
    assert!((out.matrix() - &oracle).max_abs() < 1e-14);
}

#[test]
fn stinespring_identity_and_swap() {
    let mut rng = aux_rng(12, 0);
    let rho = random_density::<f64, _>(2, &mut rng);
    let probe = DensityMatrix::basis(2, 0);
    let same = stinespring_step(&rho, &M::identity(4), &probe).unwrap();
    assert!((same.matrix() - rho.matrix()).max_abs() < 1e-15);
    let swapped = stinespring_step(&rho, &swap(), &probe).unwrap();
    assert!((swapped.matrix() - probe.matrix()).max_abs() < 1e-15);
}

#[test]
fn stinespring_matches_extracted_kraus_for_v_tau() {
    let p = OQBMParams::new(sigma_minus(), M::zeros(2, 2), None, 0.04).unwrap();
    let v = oqbm::oqbm::v_tau(&p).unwrap();
    let rho = plus_state();
    let probe = DensityMatrix::basis(2, 0);
    let a = stinespring_step(&rho, &v, &probe).unwrap();
    let kraus = extract_kraus(&v, 2, &[z(1.0), z(0.0)]).unwrap();
    let b = apply_channel(&KrausChannel::new(kraus, 1e-12).unwrap(), &rho).unwrap();
    assert!((a.matrix() - b.matrix()).max_abs() < 1e-12);
}

#[test]
fn choi_of_identity_and_dephasing() {
    let c = choi_matrix(&KrausChannel::<f64>::identity(2));
    // |Ω⟩ = |00⟩ + |11⟩
    let omega = M::projector(&[z(1.0), z(0.0), z(0.0), z(1.0)]);
    assert!((&c - &omega).max_abs() < 1e-15);
    let rank = HermitianEigen::new(&c).unwrap().values.iter().filter(|&&x| x > 1e-12).count();
    assert_eq!(rank, 1);

    let deph = KrausChannel::new(vec![M::unit(2, 0, 0), M::unit(2, 1, 1)], 1e-12).unwrap();
    let c = choi_matrix(&deph);
    let oracle = M::from_real_diag(&[1.0, 0.0, 0.0, 1.0]);
    assert!((&c - &oracle).max_abs() < 1e-15);
}

#[test]
fn exact_gyro_channel_is_completely_positive() {
    let mut rng = aux_rng(13, 0);
    for tau in [0.1, 0.01, 0.001] {
        let n = oqbm::linalg::random::random_bounded::<f64, _>(3, 2.0, &mut rng);
        let h = oqbm::linalg::random::random_hermitian::<f64, _>(3, 1.0, &mut rng);
        let p = OQBMParams::new(n, h, None, tau).unwrap();
        let c = choi_matrix(&gyro_channel(&p, true).unwrap());
        assert!(HermitianEigen::new(&c).unwrap().min() >= -1e-10);
    }
}

#[test]
fn measure_basis_and_plus_states() {
    let proj = [M::unit(2, 0, 0), M::unit(2, 1, 1)];
    let out = measure_discrete(&DensityMatrix::basis(2, 0), &proj).unwrap();
    assert!((out[0].probability - 1.0).abs() < 1e-15);
    assert!(out[1].is_null());
    let out = measure_discrete(&plus_state(), &proj).unwrap();
    for o in &out {
        assert!((o.probability - 0.5).abs() < 1e-15);
    }
}

#[test]
fn non_selective_measurement_identity() {
    let mut rng = aux_rng(14, 0);
    let rho = random_density::<f64, _>(3, &mut rng);
    let proj = [M::unit(3, 0, 0), &M::unit(3, 1, 1) + &M::unit(3, 2, 2)];
    let out = measure_discrete(&rho, &proj).unwrap();
    let mut mix = M::zeros(3, 3);
    for o in &out {
        mix.axpy(z(o.probability), o.state.as_ref().unwrap().matrix());
    }
    let oracle = &proj[0].sandwich(rho.matrix()) + &proj[1].sandwich(rho.matrix());
    assert!((&mix - &oracle).max_abs() < 1e-14);
}

#[test]
fn unnormalized_state_of_product_and_entangled_states() {
    let mut rng = aux_rng(15, 0);
    let rho_g = random_density::<f64, _>(2, &mut rng);
    let p = [0.2, 0.5, 0.3];
    let rho = rho_g.matrix().kron(&M::from_real_diag(&p));
    let s = unnormalized_state(&rho, 2, 3).unwrap();
    for x in 0..3 {
        assert!((&s[x] - &rho_g.matrix().scale_real(p[x])).max_abs() < 1e-15);
    }

    // √p0 |u⟩|0⟩ + √p1 |v⟩|1⟩
    let (p0, p1) = (0.3f64, 0.7f64);
    let u = [z(0.6), cplx(0.0, 0.8)];
    let v = [z(1.0 / 2f64.sqrt()), z(-1.0 / 2f64.sqrt())];
    let psi: Vec<C<f64>> =
        (0..4).map(|i| if i % 2 == 0 { u[i / 2].scale(p0.sqrt()) } else { v[i / 2].scale(p1.sqrt()) }).collect();
    let s = unnormalized_state(&M::projector(&psi), 2, 2).unwrap();
    assert!((&s[0] - &M::projector(&u).scale_real(p0)).max_abs() < 1e-15);
    assert!((&s[1] - &M::projector(&v).scale_real(p1)).max_abs() < 1e-15);
}

#[test]
fn perfect_pointer_reproduces_measurement() {
    let mut rng = aux_rng(16, 0);
    let rho = random_density::<f64, _>(6, &mut rng);
    let a0 = 1;
    let psi = PointerMap::perfect(3, a0);
    let out = indirect_measure(&rho, 2, &psi, &DensityMatrix::basis(3, a0)).unwrap();
    let proj: Vec<M> = (0..3).map(|x| M::identity(2).kron(&M::unit(3, x, x))).collect();
    let direct = measure_discrete(&rho, &proj).unwrap();
    for (a, b) in out.iter().zip(&direct) {
        assert!((a.probability - b.probability).abs() < 1e-14);
        assert!((a.state.as_ref().unwrap().matrix() - b.state.as_ref().unwrap().matrix()).max_abs() < 1e-13);
    }
}

#[test]
fn trivial_pointer_reads_pointer_noise() {
    let mut rng = aux_rng(17, 0);
    let rho = random_density::<f64, _>(4, &mut rng);
    let sigma = random_density::<f64, _>(3, &mut rng);
    let out = indirect_measure(&rho, 2, &PointerMap::trivial(2, 3), &sigma).unwrap();
    for (y, o) in out.iter().enumerate() {
        assert!((o.probability - sigma.matrix()[(y, y)].re).abs() < 1e-14);
        assert!((o.state.as_ref().unwrap().matrix() - rho.matrix()).max_abs() < 1e-13);
    }
}

#[test]
fn noisy_pointer_convolves_born_law() {
    let mut rng = aux_rng(18, 0);
    let rho = random_density::<f64, _>(6, &mut rng);
    let sigma = DensityMatrix::new(M::from_real_diag(&[0.7, 0.2, 0.1])).unwrap();
    let psi = PointerMap::shift(3, |x| x);
    let out = indirect_measure(&rho, 2, &psi, &sigma).unwrap();
    let born: Vec<f64> = unnormalized_state(rho.matrix(), 2, 3).unwrap().iter().map(|s| s.trace().re).collect();
    let mut oracle = [0.0; 3];
    for x in 0..3 {
        for y0 in 0..3 {
            oracle[(x + y0) % 3] += born[x] * sigma.matrix()[(y0, y0)].re;
        }
    }
    for (y, o) in out.iter().enumerate() {
        assert!((o.probability - oracle[y]).abs() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn channel_preserves_trace(seed in any::<u64>(), tau in 1e-3f64..0.2) {
        let mut rng = aux_rng(seed, 3);
        let n = oqbm::linalg::random::random_bounded::<f64, _>(2, 2.0, &mut rng);
        let h = oqbm::linalg::random::random_hermitian::<f64, _>(2, 1.0, &mut rng);
        let p = OQBMParams::new(n, h, None, tau).unwrap();
        let rho = random_density::<f64, _>(2, &mut rng);
        for exact in [true, false] {
            let ch = gyro_channel(&p, exact).unwrap();
            let out = ch.apply_matrix(rho.matrix()).unwrap();
            prop_assert!((out.trace().re - 1.0).abs() <= 10.0 * ch.completeness_tol() + 1e-15);
        }
    }

    #[test]
    fn stinespring_equals_extracted_kraus(seed in any::<u64>(), ds in 1usize..4, dp in 1usize..4) {
        let mut rng = aux_rng(seed, 4);
        let v = random_unitary::<f64, _>(ds * dp, &mut rng);
        let rho = random_density::<f64, _>(ds, &mut rng);
        let probe = random_pure::<f64, _>(dp, &mut rng);
        let e = HermitianEigen::new(probe.matrix()).unwrap();
        let phi = e.eigenvector(dp - 1);
        let a = stinespring_step(&rho, &v, &probe).unwrap();
        let kraus = extract_kraus(&v, ds, &phi).unwrap();
        let b = apply_channel(&KrausChannel::new(kraus, 1e-10).unwrap(), &rho).unwrap();
        prop_assert!((a.matrix() - b.matrix()).max_abs() <= 1e-11);
    }

    #[test]
    fn unread_pointer_reproduces_channel(seed in any::<u64>(), shift in 0usize..3) {
        let mut rng = aux_rng(seed, 5);
        let rho = random_density::<f64, _>(6, &mut rng);
        let sigma = random_density::<f64, _>(3, &mut rng);
        let psi = PointerMap::shift(3, |x| (x * (shift + 1)) % 3);
        let mut mix = M::zeros(6, 6);
        for o in indirect_measure(&rho, 2, &psi, &sigma).unwrap() {
            if let Some(s) = &o.state {
                mix.axpy(z(o.probability), s.matrix());
            }
        }
        let ch = indirect_channel(&rho, 2, &psi, &sigma).unwrap();
        let diff = &restrict_diagonal(&mix, 2, 3) - &restrict_diagonal(&ch, 2, 3);
        prop_assert!(diff.max_abs() <= 1e-11);
    }

    #[test]
    fn unnormalized_state_contracts_trace_norm(seed in any::<u64>()) {
        let mut rng = aux_rng(seed, 6);
        let a = random_density::<f64, _>(6, &mut rng);
        let b = random_density::<f64, _>(6, &mut rng);
        let sa = unnormalized_state(a.matrix(), 2, 3).unwrap();
        let sb = unnormalized_state(b.matrix(), 2, 3).unwrap();
        let lhs: f64 = sa.iter().zip(&sb).map(|(x, y)| trace_norm(&(x - y)).unwrap()).sum();
        let full = trace_norm(&(a.matrix() - b.matrix())).unwrap();
        prop_assert!(lhs <= full + 1e-12);
        // equality on X-diagonal differences
        let da = restrict_diagonal(a.matrix(), 2, 3);
        let db = restrict_diagonal(b.matrix(), 2, 3);
        let diag = trace_norm(&(&da - &db)).unwrap();
        prop_assert!((lhs - diag).abs() <= 1e-12);
    }
}

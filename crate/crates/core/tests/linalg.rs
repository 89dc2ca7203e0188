use std::f64::consts::PI;

use oqbm::linalg::pauli::{sigma_minus, sigma_x, sigma_z};
use oqbm::linalg::random::{random_density, random_hermitian, random_unitary};
use oqbm::linalg::{
    matrix_exp, partial_trace, psd_project, trace_norm, CMatrix, DensityMatrix, HermitianEigen, Subsystem, Svd,
};
use oqbm::oqbm::{v_tau_generator, OQBMParams};
use oqbm::rng::aux_rng;
use oqbm::scalar::cplx;
use oqbm::Error;
use proptest::prelude::*;

type M = CMatrix<f64>;

#[test]
fn exp_of_zero_is_identity() {
    let e = matrix_exp(&M::zeros(2, 2)).unwrap();
    assert!((&e - &M::identity(2)).max_abs() < 1e-15);
}

#[test]
fn exp_i_pi_sigma_x_is_minus_identity() {
    let a = sigma_x::<f64>().scale(cplx(0.0, PI));
    let e = matrix_exp(&a).unwrap();
    // cos(π) I + i sin(π) σ_x
    let oracle = &M::identity(2).scale_real(PI.cos()) + &sigma_x::<f64>().scale(cplx(0.0, PI.sin()));
    assert!((&e - &oracle).max_abs() < 1e-13);
    assert!((&e + &M::identity(2)).max_abs() < 1e-13);
}

#[test]
fn exp_of_diagonal_generator() {
    let p = OQBMParams::new(M::zeros(2, 2), sigma_z(), None, 0.1).unwrap();
    let v = matrix_exp(&v_tau_generator(&p)).unwrap();
    let phases: [f64; 4] = [-0.1, -0.1, 0.1, 0.1];
    let oracle = M::from_diag(&phases.map(|t| cplx(t.cos(), t.sin())));
    assert!((&v - &oracle).max_abs() < 1e-14);
}

#[test]
fn partial_trace_of_product_state() {
    let mut rng = aux_rng(1, 0);
    let a = random_density::<f64, _>(2, &mut rng);
    let b = random_density::<f64, _>(3, &mut rng);
    let ab = a.tensor(&b);
    let ra = partial_trace(ab.matrix(), (2, 3), Subsystem::A).unwrap();
    let rb = partial_trace(ab.matrix(), (2, 3), Subsystem::B).unwrap();
    assert!((&ra - a.matrix()).max_abs() < 1e-14);
    assert!((&rb - b.matrix()).max_abs() < 1e-14);
}

#[test]
fn partial_trace_of_bell_state() {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let phi = DensityMatrix::pure(&[cplx(h, 0.0), cplx(0.0, 0.0), cplx(0.0, 0.0), cplx(h, 0.0)]).unwrap();
    let r = partial_trace(phi.matrix(), (2, 2), Subsystem::A).unwrap();
    // explicit contraction ρ_A[i,j] = Σ_k ψ_{ik} conj(ψ_{jk})
    let psi = [[h, 0.0], [0.0, h]];
    let oracle = M::from_fn(2, 2, |i, j| cplx((0..2).map(|k| psi[i][k] * psi[j][k]).sum(), 0.0));
    assert!((&r - &oracle).max_abs() < 1e-15);
    assert!((&r - &M::identity(2).scale_real(0.5)).max_abs() < 1e-15);
}

#[test]
fn trace_norm_small_cases() {
    assert_eq!(trace_norm(&M::zeros(3, 3)).unwrap(), 0.0);
    assert!((trace_norm(&M::from_real_diag(&[1.0, -2.0])).unwrap() - 3.0).abs() < 1e-15);
}

#[test]
fn trace_norm_matches_singular_values() {
    let mut rng = aux_rng(2, 0);
    for _ in 0..10 {
        let a = random_density::<f64, _>(4, &mut rng);
        let b = random_density::<f64, _>(4, &mut rng);
        let diff = a.matrix() - b.matrix();
        let oracle: f64 = Svd::new(&diff).unwrap().sigma.iter().sum();
        assert!((trace_norm(&diff).unwrap() - oracle).abs() < 1e-12);
    }
}

#[test]
fn psd_project_fixed_point_and_clipping() {
    let mut rng = aux_rng(3, 0);
    let rho = random_density::<f64, _>(3, &mut rng);
    assert!((&psd_project(rho.matrix(), 1e-12).unwrap() - rho.matrix()).max_abs() < 1e-15);
    let clipped = psd_project(&M::from_real_diag(&[1.0, -1e-14]), 1e-12).unwrap();
    assert!((&clipped - &M::from_real_diag(&[1.0 - 1e-14, 0.0])).max_abs() < 1e-15);
}

#[test]
fn psd_project_known_spectrum() {
    let mut rng = aux_rng(4, 0);
    let u = random_unitary::<f64, _>(3, &mut rng);
    let lam = [0.7, 0.5, -0.2];
    let a = u.sandwich(&M::from_real_diag(&lam));
    let kept = u.sandwich(&M::from_real_diag(&[0.7, 0.5, 0.0]));
    let oracle = kept.scale_real(1.0 / 1.2);
    assert!((&psd_project(&a, 1e-12).unwrap() - &oracle).max_abs() < 1e-12);
}

#[test]
fn psd_project_rejects_non_hermitian() {
    assert!(matches!(psd_project(&sigma_minus::<f64>(), 1e-12), Err(Error::Contract(_))));
}

#[test]
fn density_validation() {
    assert!(DensityMatrix::new(M::from_real_diag(&[0.5, 0.5])).is_ok());
    assert!(DensityMatrix::new(M::from_real_diag(&[1.0 + 1e-9, 0.0])).is_err());
    assert!(DensityMatrix::new(M::from_real_diag(&[1.0 + 1e-10, -1e-10])).is_err());
    assert!(DensityMatrix::new(sigma_minus::<f64>()).is_err());
    let mut bad = M::identity(2).scale_real(0.5);
    bad[(0, 0)] = cplx(f64::NAN, 0.0);
    assert!(matches!(DensityMatrix::new(bad), Err(Error::NonFinite(_))));
}

#[test]
fn works_in_single_precision() {
    let a = sigma_x::<f32>().scale(oqbm::scalar::cplx(0.0, std::f64::consts::FRAC_PI_2));
    let e = matrix_exp(&a).unwrap();
    assert!((e[(0, 1)].im - 1.0).abs() < 1e-5);
    let h = HermitianEigen::new(&sigma_x::<f32>()).unwrap();
    assert!((h.min() + 1.0).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exponential_of_skew_hermitian_is_unitary(seed in any::<u64>(), dim in 1usize..5, scale in 0.0f64..10.0) {
        let mut rng = aux_rng(seed, 0);
        let a = random_hermitian::<f64, _>(dim, 1.0, &mut rng);
        let norm = HermitianEigen::new(&a).unwrap().values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let a = if norm > 0.0 { a.scale_real(scale / norm) } else { a };
        let plus = matrix_exp(&a.scale(cplx(0.0, 1.0))).unwrap();
        let minus = matrix_exp(&a.scale(cplx(0.0, -1.0))).unwrap();
        prop_assert!((&(&plus * &minus) - &M::identity(dim)).max_abs() <= 1e-9);
    }

    #[test]
    fn partial_trace_is_adjoint_of_tensoring(seed in any::<u64>(), da in 1usize..4, db in 1usize..4) {
        let mut rng = aux_rng(seed, 1);
        let rho = random_density::<f64, _>(da * db, &mut rng);
        let a = random_hermitian::<f64, _>(da, 1.0, &mut rng);
        let lhs = (&partial_trace(rho.matrix(), (da, db), Subsystem::A).unwrap() * &a).trace();
        let rhs = (rho.matrix() * &a.kron(&M::identity(db))).trace();
        prop_assert!((lhs - rhs).norm() <= 1e-10);
    }

    #[test]
    fn trace_norm_is_unitarily_invariant(seed in any::<u64>(), dim in 1usize..5) {
        let mut rng = aux_rng(seed, 2);
        let a = oqbm::linalg::random::ginibre::<f64, _>(dim, dim, &mut rng);
        let u = random_unitary::<f64, _>(dim, &mut rng);
        let v = random_unitary::<f64, _>(dim, &mut rng);
        let t0 = trace_norm(&a).unwrap();
        let t1 = trace_norm(&(&(&u * &a) * &v)).unwrap();
        prop_assert!((t0 - t1).abs() <= 1e-9);
    }
}

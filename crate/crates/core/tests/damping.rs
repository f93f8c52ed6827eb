mod common;

use common::{max_diff, random_state, trace_distance};
use micromaser::dissipation::{apply_damping_dense, apply_damping_with_substeps, dense_lindbladian};
use micromaser::{apply_damping, build_lindblad_bands, thermal_state, DampingPropagator, DensityMatrix, Populations};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn band_propagator_matches_dense_superoperator(
        gamma in 0.0..1.0f64,
        nbar in 0.0..2.0f64,
        duration in 0.0..3.0f64,
        n_max in 1usize..9,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_state(&mut rng, n_max, n_max + 1, 3);
        let bands = build_lindblad_bands(gamma, nbar, n_max).unwrap();
        let banded = DampingPropagator::new(&bands, duration).unwrap().apply(&rho).unwrap();
        let dense = apply_damping_dense(gamma, nbar, &rho, duration).unwrap();
        prop_assert!(max_diff(&banded, &dense) <= 1e-10);
        prop_assert!((banded.trace() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn rk4_converges_to_exact_evolution(
        gamma in 0.01..0.5f64,
        nbar in 0.0..1.0f64,
        n_max in 2usize..16,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_state(&mut rng, n_max, n_max + 1, 2);
        let bands = build_lindblad_bands(gamma, nbar, n_max).unwrap();
        let exact = DampingPropagator::new(&bands, 1.0).unwrap().apply(&rho).unwrap();
        let steps = bands.substeps(1.0);
        let rk = apply_damping(&bands, &rho, 1.0).unwrap();
        let halved = apply_damping_with_substeps(&bands, &rho, 1.0, 2 * steps).unwrap();
        prop_assert!(max_diff(&rk, &exact) <= 1e-8);
        prop_assert!(max_diff(&halved, &exact) <= max_diff(&rk, &exact).max(1e-13));
        prop_assert!((rk.trace() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn damping_contracts_toward_thermal_state(
        gamma in 0.05..1.0f64,
        nbar in 0.0..1.0f64,
        seed in any::<u64>(),
    ) {
        let n_max = 10;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rho = random_state(&mut rng, n_max, 6, 2);
        let bands = build_lindblad_bands(gamma, nbar, n_max).unwrap();
        let step = DampingPropagator::new(&bands, 0.5).unwrap();
        let thermal = thermal_state(nbar, n_max).unwrap();
        let mut distance = trace_distance(&rho, &thermal);
        for _ in 0..10 {
            rho = step.apply(&rho).unwrap();
            let next = trace_distance(&rho, &thermal);
            prop_assert!(next <= distance + 1e-12, "{next} > {distance}");
            distance = next;
        }
    }
}

#[test]
fn thermal_state_is_stationary() {
    for nbar in [0.0, 0.15, 1.0, 3.0] {
        let thermal = thermal_state(nbar, 30).unwrap();
        let bands = build_lindblad_bands(0.3, nbar, 30).unwrap();
        let evolved = DampingPropagator::new(&bands, 5.0).unwrap().apply(&thermal).unwrap();
        assert!(max_diff(&evolved, &thermal) < 1e-13, "nbar={nbar}");
    }
}

#[test]
fn generator_columns_sum_to_zero() {
    let l = dense_lindbladian(0.7, 0.4, 6).unwrap();
    let dim = 7;
    for col in 0..dim * dim {
        let trace: f64 = (0..dim).map(|n| l[(n * dim + n, col)]).sum();
        assert!(trace.abs() < 1e-13, "column {col}");
    }
}

#[test]
fn mean_photon_number_relaxes_exponentially() {
    // <N>(t) = nbar + (N0 - nbar) e^{-gamma t}, exact while the top levels stay empty.
    let (gamma, nbar) = (0.2, 0.15);
    let rho = DensityMatrix::from_populations(&Populations::fock(3, 41)).unwrap();
    let bands = build_lindblad_bands(gamma, nbar, 40).unwrap();
    for t in [0.5, 2.0, 10.0, 40.0] {
        let out = DampingPropagator::new(&bands, t).unwrap().apply(&rho).unwrap();
        let expected = nbar + (3.0 - nbar) * (-gamma * t).exp();
        assert!((out.populations().mean() - expected).abs() < 1e-10, "t={t}");
    }
}

#[test]
fn coherence_decays_at_half_rate() {
    let gamma = 0.3;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let rho = DensityMatrix::from_ket(&[Complex64::new(h, 0.0), Complex64::new(h, 0.0), Complex64::new(0.0, 0.0)])
        .unwrap();
    let bands = build_lindblad_bands(gamma, 0.0, 2).unwrap();
    for t in [0.1, 1.0, 7.0] {
        let out = DampingPropagator::new(&bands, t).unwrap().apply(&rho).unwrap();
        let expected = 0.5 * (-gamma * t / 2.0).exp();
        assert!((out.get(0, 1).re - expected).abs() < 1e-12);
        assert!(out.get(0, 1).im.abs() < 1e-15);
        assert!((out.get(1, 1).re - 0.5 * (-gamma * t).exp()).abs() < 1e-12);
    }
}

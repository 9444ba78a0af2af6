use std::sync::Arc;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vqs_core::ansatz::{AnsatzSpec, ParamPoint};
use vqs_core::ed::{ed_spectrum, EdSector};
use vqs_core::measurement::{
    estimate_energy, estimate_variance, group_by_basis, variance_bases, Axis, BasisScheme, EstimatorConfig,
    MeasurementBasis, MeasurementPlan, ShotBatch,
};
use vqs_core::operator::expectation;
use vqs_core::pauli::PauliSum;
use vqs_core::schwinger::{build_hamiltonian, CpOperator, SchwingerParams};
use vqs_core::sector::{SectorBasis, StateVector};
use vqs_core::simulator::{
    neel_state, sample, Device, InitialStateChannel, NeelPhase, ResourceMode, ResourceParams, Simulator,
};

fn model(n: usize, m: f64) -> PauliSum {
    build_hamiltonian(&SchwingerParams::new(n, m)).unwrap()
}

fn measure_all(state: &StateVector, bases: &[MeasurementBasis], shots: usize, seed: u64) -> Vec<Arc<ShotBatch>> {
    bases
        .iter()
        .enumerate()
        .map(|(i, b)| Arc::new(sample(state, b, shots, seed.wrapping_mul(7919).wrapping_add(i as u64), &[]).unwrap()))
        .collect()
}

fn random_theta(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()
}

#[test]
fn two_sites_match_the_closed_form() {
    for i in 0..5 {
        for k in 0..5 {
            let m = -2.0 + i as f64;
            let gbar = 0.25 + 0.5 * k as f64;
            let p = SchwingerParams { gbar, ..SchwingerParams::new(2, m) };
            let e = ed_spectrum(&build_hamiltonian(&p).unwrap(), EdSector::zero_magnetization(), 1).unwrap()[0].energy;
            let closed = gbar / 2.0 - ((m + gbar / 2.0).powi(2) + 1.0).sqrt();
            assert_abs_diff_eq!(e, closed, epsilon = 1e-10);
        }
    }
}

#[test]
fn bare_vacuum_identities() {
    for n in [4, 8, 12] {
        let m = 0.37;
        let h = model(n, m);
        let vac = neel_state(n, NeelPhase::Vacuum).unwrap();
        let e = expectation(&vac, &h).unwrap();
        let e2 = expectation(&vac, &h.multiply(&h).unwrap()).unwrap();
        assert_abs_diff_eq!(e, -m * n as f64 / 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(e2 - e * e, (n - 1) as f64, epsilon = 1e-10);
    }
}

#[test]
fn bare_vacuum_identities_from_shots() {
    let cfg = EstimatorConfig::default();
    for n in [4, 8] {
        let m = 0.37;
        let h = model(n, m);
        let vac = neel_state(n, NeelPhase::Vacuum).unwrap();
        let data = group_by_basis(measure_all(&vac, &variance_bases(n), 10_000, n as u64));
        let e = estimate_energy(&data, &h, &cfg).unwrap();
        assert!((e.value + m * n as f64 / 2.0).abs() <= 3.0 * e.std_error.max(1e-9), "{e:?}");
        let v = estimate_variance(&data, &h, e.value, &cfg).unwrap();
        let want = (n - 1) as f64;
        assert!((v.variance.value - want).abs() <= 3.0 * v.variance.std_error, "{:?}", v.variance);
    }
}

#[test]
fn square_of_the_hamiltonian_is_covered_by_3n_bases() {
    for n in (2..=12).step_by(2) {
        let h = model(n, 0.1);
        let sq = h.multiply(&h).unwrap();
        let bases = variance_bases(n);
        assert_eq!(bases.len(), 3 * n);
        MeasurementPlan::new(&sq, &bases, BasisScheme::Full).unwrap();
        let reduced = BasisScheme::Reduced.variance_bases(n);
        MeasurementPlan::new(&sq, &reduced, BasisScheme::Reduced).unwrap();
        assert!(reduced.len() < bases.len());
    }
    assert_eq!(variance_bases(8).len(), 24);
}

#[test]
fn eigenstate_has_zero_variance_within_errors() {
    let h = model(8, 0.1);
    let gs = ed_spectrum(&h, EdSector::zero_magnetization(), 1).unwrap().remove(0);
    let data = group_by_basis(measure_all(&gs.state, &variance_bases(8), 100_000, 3));
    let v = estimate_variance(&data, &h, gs.energy, &EstimatorConfig::default()).unwrap();
    assert!(v.variance.value.abs() <= 3.0 * v.variance.std_error, "{:?}", v.variance);
}

#[test]
fn cp_linked_ansatz_keeps_cp_parity() {
    let n = 8;
    let sim = Simulator::new(ResourceParams::new(n), AnsatzSpec::new(n, 5)).unwrap();
    let cp = CpOperator::new(n).unwrap();
    let vac = neel_state(n, NeelPhase::Vacuum).unwrap();
    assert_abs_diff_eq!(cp.parity(&vac).unwrap(), 1.0, epsilon = 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let p = ParamPoint::new(random_theta(sim.n_params(), &mut rng).into_iter().map(f64::abs).collect());
        let s = sim.prepare(&p, &vac).unwrap();
        assert_abs_diff_eq!(cp.parity(&s).unwrap(), 1.0, epsilon = 1e-9);
    }
}

#[test]
fn noisy_fidelity_by_backward_pass_matches_forward_preparation() {
    let n = 6;
    let h = model(n, 0.1);
    let gs = ed_spectrum(&h, EdSector::zero_magnetization(), 1).unwrap().remove(0);
    let sim = Simulator::new(ResourceParams::new(n), AnsatzSpec::new(n, 4)).unwrap();
    let dev = Device::new(sim, NeelPhase::Vacuum, Some(InitialStateChannel { fidelity: 0.9 }));
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..3 {
        let p = ParamPoint::new(random_theta(dev.sim.n_params(), &mut rng).into_iter().map(f64::abs).collect());
        assert_abs_diff_eq!(dev.fidelity(&p, &gs.state).unwrap(), dev.fidelity_forward(&p, &gs.state).unwrap(), epsilon = 1e-10);
    }
}

#[test]
fn native_ising_leaks_out_of_the_zero_magnetization_sector() {
    let n = 6;
    let spec = AnsatzSpec::new(n, 4);
    let ideal = Simulator::new(ResourceParams::new(n), spec.clone()).unwrap();
    let native = Simulator::new(ResourceParams { mode: ResourceMode::NativeIsing, b: 0.0, ..ResourceParams::new(n) }, spec).unwrap();
    let vac = neel_state(n, NeelPhase::Vacuum).unwrap();
    let zero = Arc::new(SectorBasis::zero_magnetization(n).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = ParamPoint::new(random_theta(ideal.n_params(), &mut rng).into_iter().map(f64::abs).collect());
    let (_, lost_ideal) = ideal.prepare(&p, &vac).unwrap().to_full().unwrap().project_onto(zero.clone()).unwrap();
    let (_, lost_native) = native.prepare(&p, &vac.to_full().unwrap()).unwrap().project_onto(zero).unwrap();
    assert!(lost_ideal < 1e-12);
    assert!(lost_native > 1e-3, "{lost_native}");
}

#[test]
fn z_basis_samples_follow_born_probabilities() {
    let n = 6;
    let sim = Simulator::new(ResourceParams::new(n), AnsatzSpec::new(n, 3)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let p = ParamPoint::new(random_theta(sim.n_params(), &mut rng).into_iter().map(f64::abs).collect());
    let state = sim.prepare(&p, &neel_state(n, NeelPhase::Vacuum).unwrap()).unwrap();
    let shots = 50_000;
    let batch = sample(&state, &MeasurementBasis::uniform(n, Axis::Z), shots, 17, &[]).unwrap();
    let basis = state.basis();
    let mut counts = vec![0usize; basis.dim()];
    for b in &batch.bits {
        counts[basis.index(*b).expect("sample in sector")] += 1;
    }
    let mut chi2 = 0.0;
    let mut dof = 0;
    for (c, pr) in counts.iter().zip(state.probabilities()) {
        let expect = pr * shots as f64;
        if expect > 5.0 {
            chi2 += (*c as f64 - expect).powi(2) / expect;
            dof += 1;
        }
    }
    // Mean dof − 1, sd sqrt(2(dof − 1)); five sd is far out in the tail.
    let k = (dof - 1) as f64;
    assert!(chi2 < k + 5.0 * (2.0 * k).sqrt(), "χ² = {chi2} with {dof} cells");
}

#[test]
fn energy_estimator_is_unbiased_and_scales_with_shots() {
    let n = 4;
    let h = model(n, 0.2);
    let sim = Simulator::new(ResourceParams::new(n), AnsatzSpec::new(n, 4)).unwrap();
    let state = sim.prepare(&ParamPoint::new(vec![0.3, 0.2, 0.5, 0.4, -0.6, 0.1]), &neel_state(n, NeelPhase::Vacuum).unwrap()).unwrap();
    let exact = expectation(&state, &h).unwrap();
    let cfg = EstimatorConfig::default();
    let bases = cfg.scheme.energy_bases(n);
    let run = |shots: usize, seed: u64| estimate_energy(&group_by_basis(measure_all(&state, &bases, shots, seed)), &h, &cfg).unwrap();

    let reps = 200;
    let rows: Vec<_> = (0..reps).map(|s| run(500, 1000 + s)).collect();
    let mean = rows.iter().map(|r| r.value).sum::<f64>() / reps as f64;
    let spread = (rows.iter().map(|r| (r.value - mean).powi(2)).sum::<f64>() / (reps - 1) as f64).sqrt();
    let reported = rows.iter().map(|r| r.std_error).sum::<f64>() / reps as f64;
    assert!((mean - exact).abs() < 4.0 * spread / (reps as f64).sqrt(), "mean {mean} vs {exact}");
    assert!((spread / reported - 1.0).abs() < 0.2, "spread {spread}, reported {reported}");

    let wide = run(2_000, 7).std_error;
    let narrow = run(8_000, 7).std_error;
    assert!((wide / narrow - 2.0).abs() < 0.2, "{wide} / {narrow}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn prepared_states_stay_normalized(seed in 0u64..1_000, layers in 1usize..6) {
        let n = 6;
        let sim = Simulator::new(ResourceParams::new(n), AnsatzSpec::new(n, layers)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = ParamPoint::new(random_theta(sim.n_params(), &mut rng).into_iter().map(f64::abs).collect());
        let s = sim.prepare(&p, &neel_state(n, NeelPhase::Anti).unwrap()).unwrap();
        prop_assert!((s.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn energy_never_falls_below_the_ground_state(seed in 0u64..1_000, m in -2.0f64..2.0) {
        let n = 4;
        let h = model(n, m);
        let e0 = ed_spectrum(&h, EdSector::zero_magnetization(), 1).unwrap()[0].energy;
        let sim = Simulator::new(ResourceParams::new(n), AnsatzSpec::new(n, 4)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = ParamPoint::new(random_theta(sim.n_params(), &mut rng).into_iter().map(f64::abs).collect());
        let s = sim.prepare(&p, &neel_state(n, NeelPhase::Vacuum).unwrap()).unwrap();
        prop_assert!(expectation(&s, &h).unwrap() >= e0 - 1e-10);
    }
}

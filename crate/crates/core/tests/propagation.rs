mod common;

use common::*;
use gatesynth::grape::{initial_control, InitialControl};
use gatesynth::{
    build_electrode_model, build_global_field_model, propagate, total_propagator, unitarity_defect,
    CMatrix, ControlSystem, CouplingSpec, PiecewiseControl,
};

fn random_system(seed: u64, n_qubits: usize, m: usize) -> ControlSystem<f64> {
    let mut r = rng(seed);
    let dim = 1 << n_qubits;
    let drift = random_hermitian(&mut r, dim, 1.0);
    let controls = (0..m).map(|_| random_hermitian(&mut r, dim, 1.0)).collect();
    let labels = (0..m).map(|i| format!("H{i}")).collect();
    ControlSystem::new(n_qubits, drift, controls, labels).unwrap()
}

#[test]
fn constant_control_split_into_ten() {
    let sys = random_system(3, 2, 2);
    let one = PiecewiseControl::uniform_from_rows(1.3, &[vec![0.4, -1.1]]).unwrap();
    let ten = PiecewiseControl::uniform_from_rows(1.3, &vec![vec![0.4, -1.1]; 10]).unwrap();
    let a = total_propagator(&sys, &one).unwrap();
    let b = total_propagator(&sys, &ten).unwrap();
    assert!(a.max_abs_diff(&b) <= 1e-10);
}

#[test]
fn random_control_against_substep_oracle() {
    let sys = random_system(4, 2, 2);
    let c = initial_control(2, 2.0, 20, InitialControl::UniformRandom(2.0), 9, 0).unwrap();
    let fast = total_propagator(&sys, &c).unwrap();
    let mut oracle = CMatrix::identity(4);
    for k in 0..c.n_segments() {
        let h = sys.hamiltonian(c.amplitudes(k));
        let step = taylor_expm(&h, c.dt(k) / 100.0);
        for _ in 0..100 {
            oracle = step.matmul(&oracle);
        }
    }
    assert!(
        fast.max_abs_diff(&oracle) <= 1e-8,
        "{}",
        fast.max_abs_diff(&oracle)
    );
}

#[test]
fn propagators_stay_unitary_for_long_sequences() {
    let sys = build_global_field_model(
        &[10.0, 12.0, 8.0],
        &[1.0; 3],
        &CouplingSpec::ising_chain(1.0),
    )
    .unwrap();
    let c = initial_control(2, 5.0, 1000, InitialControl::UniformRandom(20.0), 1, 0).unwrap();
    let cache = propagate(&sys, &c).unwrap();
    assert!(unitarity_defect(&cache.total) <= 1e-9);
    for u in cache
        .segment_props
        .iter()
        .chain(&cache.forward)
        .chain(&cache.backward)
    {
        assert!(unitarity_defect(u) <= 1e-9);
    }
}

#[test]
fn cache_products_are_consistent() {
    let sys =
        build_electrode_model(10.0, &[1.0, 1.0], &CouplingSpec::heisenberg_chain(1.0)).unwrap();
    let c = initial_control(2, 1.0, 7, InitialControl::UniformRandom(3.0), 2, 0).unwrap();
    let cache = propagate(&sys, &c).unwrap();
    for k in 0..7 {
        let full = cache.backward[k].matmul(&cache.forward[k]);
        assert!(full.max_abs_diff(&cache.total) <= 1e-12);
    }
}

#[test]
fn time_reversed_control_inverts_without_drift() {
    let mut r = rng(8);
    let controls = vec![
        random_hermitian(&mut r, 4, 1.0),
        random_hermitian(&mut r, 4, 1.0),
    ];
    let sys =
        ControlSystem::new(2, CMatrix::zeros(4), controls, vec!["a".into(), "b".into()]).unwrap();
    let c = initial_control(2, 1.0, 12, InitialControl::UniformRandom(1.0), 3, 0).unwrap();
    let neg: Vec<Vec<f64>> = (0..12)
        .rev()
        .map(|k| c.amplitudes(k).iter().map(|u| -u).collect())
        .collect();
    let rev = PiecewiseControl::uniform_from_rows(1.0, &neg).unwrap();
    let u = total_propagator(&sys, &c).unwrap();
    let v = total_propagator(&sys, &rev).unwrap();
    assert!(v.matmul(&u).max_abs_diff(&CMatrix::identity(4)) <= 1e-12);
}

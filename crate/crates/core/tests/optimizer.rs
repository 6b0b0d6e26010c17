mod common;

use common::*;
use gatesynth::grape::{initial_control, InitialControl};
use gatesynth::{
    build_electrode_model, build_global_field_model, cnot, fidelity, fidelity_gradient, optimize,
    total_propagator, Config, ControlSystem, CouplingSpec, GateTarget, GradientForm, UpdateMode,
};
use proptest::prelude::*;

fn random_system(seed: u64, n_qubits: usize, m: usize) -> ControlSystem<f64> {
    let mut r = rng(seed);
    let dim = 1 << n_qubits;
    let drift = random_hermitian(&mut r, dim, 1.0);
    let controls = (0..m).map(|_| random_hermitian(&mut r, dim, 1.0)).collect();
    let labels = (0..m).map(|i| format!("H{i}")).collect();
    ControlSystem::new(n_qubits, drift, controls, labels).unwrap()
}

fn central_differences(
    sys: &ControlSystem<f64>,
    target: &GateTarget<f64>,
    c: &gatesynth::Control,
    h: f64,
) -> Vec<f64> {
    let f = |v: &[f64]| {
        let p =
            gatesynth::Control::new(c.times().to_vec(), v.to_vec(), c.n_controls(), None).unwrap();
        fidelity(target, &total_propagator(sys, &p).unwrap()).unwrap()
    };
    let base = c.values().to_vec();
    (0..base.len())
        .map(|i| {
            let mut up = base.clone();
            let mut down = base.clone();
            up[i] += h;
            down[i] -= h;
            (f(&up) - f(&down)) / (2.0 * h)
        })
        .collect()
}

fn relative_gap(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let gap = a
        .iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    gap / scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gradient_matches_finite_differences(seed in any::<u64>(), n_qubits in 1usize..=2, k in 1usize..=5) {
        let sys = random_system(seed, n_qubits, 2);
        let mut r = rng(seed ^ 0x5eed);
        let target = GateTarget::new("random", haar_special_unitary(&mut r, 1 << n_qubits)).unwrap();
        let c = initial_control(2, 1.0, k, InitialControl::UniformRandom(1.0), seed, 0).unwrap();
        let g = fidelity_gradient(&sys, &c, &target, GradientForm::Exact).unwrap();
        let fd = central_differences(&sys, &target, &c, 1e-6);
        prop_assert!(relative_gap(&g, &fd) <= 1e-4, "gap {}", relative_gap(&g, &fd));
    }
}

fn small_problem() -> (ControlSystem<f64>, GateTarget<f64>) {
    let sys =
        build_electrode_model(10.0, &[1.0, 1.0], &CouplingSpec::heisenberg_chain(1.0)).unwrap();
    (sys, cnot())
}

fn assert_monotone(trace: &[f64]) {
    for w in trace.windows(2) {
        assert!(w[1] >= w[0] - 1e-12, "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn traces_are_monotone_in_both_modes() {
    let (sys, target) = small_problem();
    for mode in [UpdateMode::Global, UpdateMode::Local] {
        for run in 0..3 {
            let c =
                initial_control(2, 1.0, 10, InitialControl::UniformRandom(1.0), 5, run).unwrap();
            let cfg = Config {
                mode,
                max_iters: 200,
                seed: 5,
                ..Config::default()
            };
            let out = optimize(&sys, &target, &c, &cfg).unwrap();
            assert_monotone(&out.trace);
            assert_eq!(out.trace.len(), out.iterations + 1);
            assert!((out.trace.last().unwrap() - out.fidelity).abs() <= 1e-10);
        }
    }
}

#[test]
fn bounded_global_field_run_is_monotone() {
    let sys = build_global_field_model(&[10.0, 12.0], &[1.0, 1.0], &CouplingSpec::ising_chain(1.0))
        .unwrap();
    let c = initial_control(2, 1.0, 20, InitialControl::UniformRandom(5.0), 1, 0).unwrap();
    let cfg = Config {
        max_iters: 100,
        amplitude_bound: Some(8.0),
        ..Config::default()
    };
    let out = optimize(&sys, &cnot(), &c, &cfg).unwrap();
    assert_monotone(&out.trace);
    assert!(out.control.values().iter().all(|u| u.abs() <= 8.0));
}

#[test]
fn converged_control_is_a_fixed_point() {
    let (sys, target) = small_problem();
    let c = initial_control(2, 1.0, 10, InitialControl::UniformRandom(1.0), 3, 0).unwrap();
    let solved = optimize(&sys, &target, &c, &Config::default()).unwrap();
    assert!(solved.converged);
    // the reached fidelity becomes the target: nothing left to do
    let u = total_propagator(&sys, &solved.control).unwrap();
    let exact = GateTarget::new("reached", u.clone()).unwrap();
    let again = optimize(&sys, &exact, &solved.control, &Config::default()).unwrap();
    assert_eq!(again.iterations, 0);
    let gap = again
        .control
        .values()
        .iter()
        .zip(solved.control.values())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(gap <= 1e-12);
}

#[test]
fn runs_are_deterministic() {
    let (sys, target) = small_problem();
    for mode in [UpdateMode::Global, UpdateMode::Local] {
        let cfg = Config {
            mode,
            max_iters: 50,
            seed: 42,
            ..Config::default()
        };
        let c1 = initial_control(2, 1.0, 10, InitialControl::UniformRandom(1.0), 42, 2).unwrap();
        let c2 = initial_control(2, 1.0, 10, InitialControl::UniformRandom(1.0), 42, 2).unwrap();
        let a = optimize(&sys, &target, &c1, &cfg).unwrap();
        let b = optimize(&sys, &target, &c2, &cfg).unwrap();
        assert_eq!(a.control, b.control);
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.fidelity.to_bits(), b.fidelity.to_bits());
    }
}

#[test]
fn restarts_draw_different_initial_controls() {
    let a = initial_control::<f64>(2, 1.0, 10, InitialControl::UniformRandom(1.0), 7, 0).unwrap();
    let b = initial_control::<f64>(2, 1.0, 10, InitialControl::UniformRandom(1.0), 7, 1).unwrap();
    assert_ne!(a.values(), b.values());
    assert!(a.values().iter().all(|u| u.abs() <= 1.0));
}

#[test]
fn electrode_cnot_converges() {
    let (sys, target) = small_problem();
    let best = (0..5)
        .map(|run| {
            let c =
                initial_control(2, 1.0, 10, InitialControl::UniformRandom(1.0), 0, run).unwrap();
            optimize(&sys, &target, &c, &Config::default())
                .unwrap()
                .fidelity
        })
        .fold(0.0f64, f64::max);
    assert!(best >= 0.9999, "{best}");
}

mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use common::*;
use gatesynth::geometric::{rotation, two_body_rotation};
use gatesynth::{
    cartan_decompose, cnot, euler_decompose, standard_gate, tensor_product, Pauli, StandardGate,
};
use proptest::prelude::*;

const EPS: f64 = 1e-12;

#[test]
fn euler_round_trip_on_haar_samples() {
    let mut r = rng(11);
    for _ in 0..100 {
        let u = haar_special_unitary(&mut r, 2);
        let e = euler_decompose(&u).unwrap();
        assert!(e.reconstruct().max_abs_diff(&u) <= 1e-9);
        assert!(e.beta >= -EPS && e.beta <= FRAC_PI_2 + EPS);
        assert!(e.alpha + e.gamma > -PI - EPS && e.alpha + e.gamma <= PI + EPS);
        assert!(e.alpha - e.gamma > -PI - EPS && e.alpha - e.gamma <= PI + EPS);
    }
}

#[test]
fn euler_edge_cases() {
    for u in [
        rotation(Pauli::X, 0.4),
        rotation(Pauli::Y, FRAC_PI_2),
        rotation(Pauli::X, 0.0),
        rotation(Pauli::Z, 1.1),
        rotation(Pauli::X, PI).scale(gatesynth::Complex64::new(-1.0, 0.0)),
    ] {
        let e = euler_decompose(&u).unwrap();
        assert!(e.reconstruct().max_abs_diff(&u) <= 1e-12);
    }
    // an x rotation is pure α + γ
    let e = euler_decompose(&rotation::<f64>(Pauli::X, 0.4)).unwrap();
    assert!(e.beta.abs() < EPS && (e.alpha + e.gamma - 0.4).abs() < EPS);
}

#[test]
fn euler_rejects_non_special_unitary() {
    let h = standard_gate::<f64>(StandardGate::Had, 1, 1).unwrap();
    // global phase -1 is allowed in SU(2), a determinant of -1 is not
    let flip = gatesynth::CMatrix::from_fn(2, |r, c| {
        if r == c {
            gatesynth::Complex64::new(if r == 0 { 1.0 } else { -1.0 }, 0.0)
        } else {
            gatesynth::Complex64::new(0.0, 0.0)
        }
    });
    assert!(euler_decompose(&flip).is_err());
    assert!(euler_decompose(&h.matrix().scale(gatesynth::Complex64::new(2.0, 0.0))).is_err());
}

fn assert_canonical(a1: f64, a2: f64, a3: f64) {
    assert!(a1 <= FRAC_PI_4 + 1e-9, "{a1}");
    assert!(a1 + 1e-9 >= a2, "{a1} {a2}");
    assert!(a2 + 1e-9 >= a3.abs(), "{a2} {a3}");
}

#[test]
fn cartan_round_trip_on_haar_samples() {
    let mut r = rng(12);
    for _ in 0..100 {
        let u = haar_special_unitary(&mut r, 4);
        let d = cartan_decompose(&u).unwrap();
        assert!(
            d.reassemble().max_abs_diff(&u) <= 1e-9,
            "{}",
            d.reassemble().max_abs_diff(&u)
        );
        assert_canonical(d.alpha1, d.alpha2, d.alpha3);
        let unit = d.with_unit_phase();
        assert!(unit.reassemble().max_abs_diff(&u) <= 1e-9);
        for k in [
            &d.u1_local.first,
            &d.u1_local.second,
            &d.u2_local.first,
            &d.u2_local.second,
        ] {
            assert!((k.det() - gatesynth::Complex64::new(1.0, 0.0)).norm() <= 1e-9);
        }
    }
}

#[test]
fn cartan_coefficients_are_local_invariants() {
    let mut r = rng(13);
    for _ in 0..20 {
        let u = haar_special_unitary(&mut r, 4);
        let a = tensor_product(
            &haar_special_unitary(&mut r, 2),
            &haar_special_unitary(&mut r, 2),
        );
        let b = tensor_product(
            &haar_special_unitary(&mut r, 2),
            &haar_special_unitary(&mut r, 2),
        );
        let d1 = cartan_decompose(&u).unwrap();
        let d2 = cartan_decompose(&a.matmul(&u).matmul(&b)).unwrap();
        assert!((d1.alpha1 - d2.alpha1).abs() <= 1e-8);
        assert!((d1.alpha2 - d2.alpha2).abs() <= 1e-8);
        assert!((d1.alpha3 - d2.alpha3).abs() <= 1e-8);
    }
}

#[test]
fn local_detection_both_ways() {
    let mut r = rng(14);
    for _ in 0..20 {
        let k = tensor_product(
            &haar_special_unitary(&mut r, 2),
            &haar_special_unitary(&mut r, 2),
        );
        assert!(cartan_decompose(&k).unwrap().is_local(1e-8));
    }
    assert!(!cartan_decompose(cnot::<f64>().matrix())
        .unwrap()
        .is_local(1e-3));
    let zz = two_body_rotation::<f64>(Pauli::Z, 0.05);
    let d = cartan_decompose(&zz).unwrap();
    assert!(!d.is_local(1e-3));
    assert!((d.alpha1 - 0.05).abs() <= 1e-10);
}

#[test]
fn cnot_is_maximally_entangling_on_one_axis() {
    let d = cartan_decompose(cnot::<f64>().matrix()).unwrap();
    assert!((d.alpha1 - FRAC_PI_4).abs() <= 1e-10);
    assert!(d.alpha2.abs() <= 1e-10 && d.alpha3.abs() <= 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn euler_round_trip(a in -PI..PI, b in 0.0..PI, c in -PI..PI) {
        let u = rotation(Pauli::X, a).matmul(&rotation(Pauli::Y, b)).matmul(&rotation(Pauli::X, c));
        let e = euler_decompose(&u).unwrap();
        prop_assert!(e.reconstruct().max_abs_diff(&u) <= 1e-9);
    }

    #[test]
    fn cartan_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let u = haar_special_unitary(&mut r, 4);
        let d = cartan_decompose(&u).unwrap();
        prop_assert!(d.reassemble().max_abs_diff(&u) <= 1e-9);
    }
}

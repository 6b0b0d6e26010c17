//! Target gates and the phase-sensitive fidelity objective.
//!
//! Every model Hamiltonian here is traceless, so reachable propagators have
//! unit determinant. Targets are therefore fixed in SU(2^N): `Had` is the
//! y-rotation `exp(iπ/4 σ_y)` rather than the textbook Hadamard (whose
//! determinant is −1), `T = exp(iπ/8 σ_z)`, and CNOT carries the phase
//! `e^{-iπ/4}`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::operator::{embed_single, unitarity_defect, CMatrix};
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct GateTarget<T> {
    label: String,
    n_qubits: usize,
    matrix: CMatrix<T>,
}

impl<T: Real> GateTarget<T> {
    /// Wraps a special-unitary matrix whose dimension is a power of two.
    pub fn new(label: impl Into<String>, matrix: CMatrix<T>) -> Result<Self> {
        let dim = matrix.dim();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::InvalidArgument(format!(
                "target dimension {dim} is not a power of two"
            )));
        }
        let defect = unitarity_defect(&matrix);
        if defect > T::HERMITIAN_TOL * T::lit(10.0) {
            return Err(Error::NotSpecialUnitary(format!(
                "unitarity defect {defect:e}"
            )));
        }
        let det = matrix.det();
        let one = Complex::new(T::one(), T::zero());
        if (det - one).norm() > T::HERMITIAN_TOL * T::lit(100.0) {
            return Err(Error::NotSpecialUnitary(format!(
                "determinant {}{:+}i differs from 1",
                det.re, det.im
            )));
        }
        Ok(GateTarget {
            label: label.into(),
            n_qubits: dim.trailing_zeros() as usize,
            matrix,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StandardGate {
    I,
    Had,
    T,
}

impl StandardGate {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "i" | "id" | "identity" => Ok(StandardGate::I),
            "had" | "h" => Ok(StandardGate::Had),
            "t" => Ok(StandardGate::T),
            other => Err(Error::InvalidArgument(format!(
                "unknown gate name '{other}'"
            ))),
        }
    }

    /// The single-qubit SU(2) matrix.
    pub fn matrix<T: Real>(self) -> CMatrix<T> {
        let z = T::zero();
        match self {
            StandardGate::I => CMatrix::identity(2),
            StandardGate::Had => {
                let c = T::FRAC_1_SQRT_2();
                CMatrix::from_row_major(vec![
                    Complex::new(c, z),
                    Complex::new(c, z),
                    Complex::new(-c, z),
                    Complex::new(c, z),
                ])
                .expect("2x2")
            }
            StandardGate::T => {
                let phi = T::PI() / T::lit(8.0);
                CMatrix::diagonal(&[
                    Complex::from_polar(T::one(), phi),
                    Complex::from_polar(T::one(), -phi),
                ])
            }
        }
    }

    fn short(self) -> &'static str {
        match self {
            StandardGate::I => "identity",
            StandardGate::Had => "had",
            StandardGate::T => "t",
        }
    }
}

/// The named single-qubit gate on `qubit` (1-based) of an `n_qubits` register.
pub fn standard_gate<T: Real>(
    gate: StandardGate,
    qubit: usize,
    n_qubits: usize,
) -> Result<GateTarget<T>> {
    let matrix = embed_single(&gate.matrix(), qubit, n_qubits)?;
    let label = match gate {
        StandardGate::I => "identity".to_string(),
        g => format!("{}{}", g.short(), qubit),
    };
    GateTarget::new(label, matrix)
}

/// `e^{-iπ/4} diag(I, X)`.
pub fn cnot<T: Real>() -> GateTarget<T> {
    let phase = Complex::from_polar(T::one(), -T::FRAC_PI_4());
    let mut m = CMatrix::zeros(4);
    m[(0, 0)] = phase;
    m[(1, 1)] = phase;
    m[(2, 3)] = phase;
    m[(3, 2)] = phase;
    GateTarget::new("cnot", m).expect("CNOT is special unitary")
}

/// `diag(1, 1, 1, 1, 1, 1, iX)`.
pub fn toffoli_like<T: Real>() -> GateTarget<T> {
    let mut m = CMatrix::identity(8);
    let i = Complex::new(T::zero(), T::one());
    m[(6, 6)] = Complex::new(T::zero(), T::zero());
    m[(7, 7)] = Complex::new(T::zero(), T::zero());
    m[(6, 7)] = i;
    m[(7, 6)] = i;
    GateTarget::new("toffoli-like", m).expect("Toffoli-like gate is special unitary")
}

/// `{I⊗I, Had⊗I, T⊗I, I⊗Had, I⊗T, CNOT}` in that order.
pub fn universal_set_2q<T: Real>() -> Vec<GateTarget<T>> {
    vec![
        standard_gate(StandardGate::I, 1, 2).expect("valid"),
        standard_gate(StandardGate::Had, 1, 2).expect("valid"),
        standard_gate(StandardGate::T, 1, 2).expect("valid"),
        standard_gate(StandardGate::Had, 2, 2).expect("valid"),
        standard_gate(StandardGate::T, 2, 2).expect("valid"),
        cnot(),
    ]
}

/// Resolves a gate name: `identity`, `had<n>`, `t<n>`, `cnot`, `toffoli-like`.
pub fn gate_by_name<T: Real>(name: &str, n_qubits: usize) -> Result<GateTarget<T>> {
    let lower = name.trim().to_ascii_lowercase();
    match lower.as_str() {
        "identity" | "i" => {
            let dim = 1usize << n_qubits;
            return GateTarget::new("identity", CMatrix::identity(dim));
        }
        "cnot" => {
            if n_qubits != 2 {
                return Err(Error::InvalidArgument("cnot is a two-qubit gate".into()));
            }
            return Ok(cnot());
        }
        "toffoli-like" | "toffoli" => {
            if n_qubits != 3 {
                return Err(Error::InvalidArgument(
                    "toffoli-like is a three-qubit gate".into(),
                ));
            }
            return Ok(toffoli_like());
        }
        _ => {}
    }
    let split = lower
        .find(|c: char| c.is_ascii_digit())
        .ok_or_else(|| Error::InvalidArgument(format!("unknown gate name '{name}'")))?;
    let (head, tail) = lower.split_at(split);
    let gate = match head {
        "had" => StandardGate::Had,
        "t" => StandardGate::T,
        _ => {
            return Err(Error::InvalidArgument(format!(
                "unknown gate name '{name}'"
            )))
        }
    };
    let qubit: usize = tail
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad qubit index in '{name}'")))?;
    standard_gate(gate, qubit, n_qubits)
}

/// `(1/N) Re Tr(U_T^dag U)` without argument checks.
pub(crate) fn fidelity_unchecked<T: Real>(target: &CMatrix<T>, u: &CMatrix<T>) -> T {
    let n = target.dim();
    let (a, b) = (target.as_slice(), u.as_slice());
    let mut acc = T::zero();
    // Re Tr(A^dag B) = Σ_ij Re(conj(a_ij) b_ij)
    for (x, y) in a.iter().zip(b) {
        acc += x.re * y.re + x.im * y.im;
    }
    acc / T::from_usize(n).expect("dimension fits")
}

/// Gate fidelity `F = (1/N) Re Tr(U_T^dag U)`, in `[-1, 1]` for unitary `U`.
pub fn fidelity<T: Real>(target: &GateTarget<T>, u: &CMatrix<T>) -> Result<T> {
    if u.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            found: u.dim(),
        });
    }
    Ok(fidelity_unchecked(target.matrix(), u))
}

/// Gate error `‖U - U_T‖²` (Frobenius); equals `2N(1 - F)` for unitary `U`.
pub fn gate_error<T: Real>(target: &GateTarget<T>, u: &CMatrix<T>) -> Result<T> {
    if u.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            found: u.dim(),
        });
    }
    Ok((u - target.matrix()).frobenius_norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn identity_embedding() {
        let g = standard_gate::<f64>(StandardGate::I, 1, 2).unwrap();
        assert_eq!(g.matrix(), &CMatrix::identity(4));
    }

    #[test]
    fn had_and_t_closed_form() {
        let had = StandardGate::Had.matrix::<f64>();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let expected =
            CMatrix::from_row_major(vec![c(s, 0.0), c(s, 0.0), c(-s, 0.0), c(s, 0.0)]).unwrap();
        assert!(had.max_abs_diff(&expected) < 1e-16);
        let t = StandardGate::T.matrix::<f64>();
        let p = std::f64::consts::PI / 8.0;
        assert!((t[(0, 0)] - c(p.cos(), p.sin())).norm() < 1e-16);
        assert!((t[(1, 1)] - c(p.cos(), -p.sin())).norm() < 1e-16);
    }

    #[test]
    fn cnot_properties() {
        let g = cnot::<f64>();
        assert!((g.matrix().det() - c(1.0, 0.0)).norm() < 1e-14);
        let sq = g.matrix().matmul(g.matrix());
        assert!(sq.max_abs_diff(&CMatrix::identity(4).scale(c(0.0, -1.0))) < 1e-15);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((g.matrix()[(0, 0)] - c(h, -h)).norm() < 1e-15);
    }

    #[test]
    fn toffoli_like_properties() {
        let g = toffoli_like::<f64>();
        assert!((g.matrix().det() - c(1.0, 0.0)).norm() < 1e-14);
        assert_eq!(g.matrix()[(6, 7)], c(0.0, 1.0));
        assert_eq!(g.matrix()[(7, 6)], c(0.0, 1.0));
        assert!(unitarity_defect(g.matrix()) <= 1e-15);
    }

    #[test]
    fn universal_set_shape() {
        let set = universal_set_2q::<f64>();
        assert_eq!(set.len(), 6);
        assert_eq!(set[0].matrix(), &CMatrix::identity(4));
        let labels: Vec<&str> = set.iter().map(|g| g.label()).collect();
        assert_eq!(labels, ["identity", "had1", "t1", "had2", "t2", "cnot"]);
        for g in &set {
            assert!((g.matrix().det() - c(1.0, 0.0)).norm() <= 1e-10);
        }
    }

    #[test]
    fn gate_names() {
        assert_eq!(
            gate_by_name::<f64>("had2", 2).unwrap().matrix(),
            universal_set_2q()[3].matrix()
        );
        assert_eq!(gate_by_name::<f64>("T1", 2).unwrap().label(), "t1");
        assert!(gate_by_name::<f64>("swap", 2).is_err());
        assert!(gate_by_name::<f64>("cnot", 3).is_err());
        assert!(gate_by_name::<f64>("had3", 2).is_err());
        assert!(StandardGate::parse("sqrtx").is_err());
    }

    #[test]
    fn rejects_non_special_unitary() {
        let x = crate::operator::Pauli::X.matrix::<f64>();
        assert!(matches!(
            GateTarget::new("x", x),
            Err(Error::NotSpecialUnitary(_))
        ));
    }

    #[test]
    fn fidelity_examples() {
        let g = cnot::<f64>();
        assert!((fidelity(&g, g.matrix()).unwrap() - 1.0).abs() < 1e-15);
        assert!((fidelity(&g, &-g.matrix()).unwrap() + 1.0).abs() < 1e-15);
        let f = fidelity(&g, &CMatrix::identity(4)).unwrap();
        assert!((f - 2f64.sqrt() / 4.0).abs() < 1e-15);
        assert!(fidelity(&g, &CMatrix::identity(2)).is_err());
    }

    #[test]
    fn gate_error_examples() {
        let g = toffoli_like::<f64>();
        assert!(gate_error(&g, g.matrix()).unwrap().abs() < 1e-15);
        assert!((gate_error(&g, &-g.matrix()).unwrap() - 32.0).abs() < 1e-13);
        assert!(gate_error(&g, &CMatrix::identity(4)).is_err());
    }

    #[test]
    fn global_phase_gives_cosine() {
        let g = cnot::<f64>();
        for phi in [0.1, 0.7, 2.0, -1.3] {
            let f = fidelity(&g, &g.matrix().scale(Complex::from_polar(1.0, phi))).unwrap();
            assert!((f - phi.cos()).abs() < 1e-14);
        }
    }
}

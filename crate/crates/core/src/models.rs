//! Control-system models `H(u) = H0 + Σ_m u_m H_m` for coupled spin chains.
//!
//! Four constructions are provided:
//!
//! * [`build_basic_nmr`]: Ising chain with independent local x/y drives,
//! * [`build_crosstalk`]: the same drives mixed by a linear cross-talk matrix,
//! * [`build_global_field_model`]: Ising chain with Zeeman splittings driven by
//!   one global field (collective X and Y sums, off-resonant terms kept),
//! * [`build_electrode_model`]: Heisenberg chain under a fixed global drive,
//!   controlled through local σ_z detunings.
//!
//! Energies are in units of the coupling constant `J` (ħ = 1), times in `1/J`.

use crate::error::{Error, Result};
use crate::operator::{embed_pauli, pauli_product, CMatrix, Pauli};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingKind {
    /// `σ_z σ_z`
    Ising,
    /// `σ_x σ_x + σ_y σ_y + σ_z σ_z`
    Heisenberg,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Topology<T> {
    /// Uniform chain, `J_{n,n+1} = strength`.
    NearestNeighbour(T),
    /// Explicit `N×N` matrix; only entries with `n < n'` are used. The lower
    /// triangle must be zero or mirror the upper one.
    Explicit(Vec<Vec<T>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSpec<T> {
    pub topology: Topology<T>,
    pub kind: CouplingKind,
}

impl<T: Real> CouplingSpec<T> {
    pub fn ising_chain(strength: T) -> Self {
        CouplingSpec {
            topology: Topology::NearestNeighbour(strength),
            kind: CouplingKind::Ising,
        }
    }

    pub fn heisenberg_chain(strength: T) -> Self {
        CouplingSpec {
            topology: Topology::NearestNeighbour(strength),
            kind: CouplingKind::Heisenberg,
        }
    }

    /// Non-zero couplings as 1-based `(n, n', J)` with `n < n'`.
    pub fn pairs(&self, n_qubits: usize) -> Result<Vec<(usize, usize, T)>> {
        match &self.topology {
            Topology::NearestNeighbour(j) => {
                if !j.is_finite() {
                    return Err(Error::InvalidArgument(
                        "coupling strength must be finite".into(),
                    ));
                }
                Ok((1..n_qubits).map(|n| (n, n + 1, *j)).collect())
            }
            Topology::Explicit(m) => {
                if m.len() != n_qubits || m.iter().any(|row| row.len() != n_qubits) {
                    return Err(Error::InvalidArgument(format!(
                        "coupling matrix must be {n_qubits}x{n_qubits}"
                    )));
                }
                let mut out = Vec::new();
                for n in 0..n_qubits {
                    if m[n][n] != T::zero() {
                        return Err(Error::InvalidArgument(
                            "coupling matrix diagonal must be zero".into(),
                        ));
                    }
                    for k in n + 1..n_qubits {
                        let (upper, lower) = (m[n][k], m[k][n]);
                        if !upper.is_finite() || !lower.is_finite() {
                            return Err(Error::InvalidArgument(
                                "coupling strengths must be finite".into(),
                            ));
                        }
                        if lower != T::zero() && lower != upper {
                            return Err(Error::InvalidArgument(format!(
                                "coupling matrix entries ({},{}) and ({},{}) disagree",
                                n + 1,
                                k + 1,
                                k + 1,
                                n + 1
                            )));
                        }
                        if upper != T::zero() {
                            out.push((n + 1, k + 1, upper));
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    /// `Σ_{n<n'} J_{nn'} (coupling operator)^{(n,n')}`.
    pub fn hamiltonian(&self, n_qubits: usize) -> Result<CMatrix<T>> {
        let axes: &[Pauli] = match self.kind {
            CouplingKind::Ising => &[Pauli::Z],
            CouplingKind::Heisenberg => &Pauli::ALL,
        };
        let mut h = CMatrix::zeros(1 << n_qubits);
        for (n, k, j) in self.pairs(n_qubits)? {
            for &axis in axes {
                h.add_scaled_assign(j, &pauli_product(&[(n, axis), (k, axis)], n_qubits)?);
            }
        }
        Ok(h)
    }

    fn require(&self, kind: CouplingKind, model: &str) -> Result<()> {
        if self.kind != kind {
            return Err(Error::InvalidArgument(format!(
                "{model} model requires {kind:?} coupling, got {:?}",
                self.kind
            )));
        }
        Ok(())
    }
}

/// Parameters a [`ControlSystem`] was built from, so it can be rebuilt.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelDescriptor<T> {
    BasicNmr {
        n_qubits: usize,
        coupling: CouplingSpec<T>,
    },
    Crosstalk {
        n_qubits: usize,
        coupling: CouplingSpec<T>,
        alpha: Vec<Vec<T>>,
    },
    GlobalField {
        omegas: Vec<T>,
        gammas: Vec<T>,
        coupling: CouplingSpec<T>,
    },
    Electrode {
        rabi: T,
        gbars: Vec<T>,
        coupling: CouplingSpec<T>,
    },
    Custom,
}

impl<T: Real> ModelDescriptor<T> {
    pub fn build(&self) -> Result<ControlSystem<T>> {
        match self {
            ModelDescriptor::BasicNmr { n_qubits, coupling } => {
                build_basic_nmr(coupling, *n_qubits)
            }
            ModelDescriptor::Crosstalk {
                n_qubits,
                coupling,
                alpha,
            } => build_crosstalk(&build_basic_nmr(coupling, *n_qubits)?, alpha),
            ModelDescriptor::GlobalField {
                omegas,
                gammas,
                coupling,
            } => build_global_field_model(omegas, gammas, coupling),
            ModelDescriptor::Electrode {
                rabi,
                gbars,
                coupling,
            } => build_electrode_model(*rabi, gbars, coupling),
            ModelDescriptor::Custom => Err(Error::InvalidArgument(
                "custom systems carry no build recipe".into(),
            )),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelDescriptor::BasicNmr { .. } => "basic-nmr",
            ModelDescriptor::Crosstalk { .. } => "crosstalk",
            ModelDescriptor::GlobalField { .. } => "global-field",
            ModelDescriptor::Electrode { .. } => "electrode",
            ModelDescriptor::Custom => "custom",
        }
    }
}

/// Drift plus an ordered list of control Hamiltonians.
#[derive(Debug, Clone)]
pub struct ControlSystem<T> {
    n_qubits: usize,
    drift: CMatrix<T>,
    controls: Vec<CMatrix<T>>,
    labels: Vec<String>,
    descriptor: ModelDescriptor<T>,
}

impl<T: Real> ControlSystem<T> {
    pub fn new(
        n_qubits: usize,
        drift: CMatrix<T>,
        controls: Vec<CMatrix<T>>,
        labels: Vec<String>,
    ) -> Result<Self> {
        Self::with_descriptor(n_qubits, drift, controls, labels, ModelDescriptor::Custom)
    }

    fn with_descriptor(
        n_qubits: usize,
        drift: CMatrix<T>,
        controls: Vec<CMatrix<T>>,
        labels: Vec<String>,
        descriptor: ModelDescriptor<T>,
    ) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidArgument("need at least one qubit".into()));
        }
        let dim = 1usize << n_qubits;
        if controls.is_empty() {
            return Err(Error::InvalidArgument("need at least one control".into()));
        }
        if labels.len() != controls.len() {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} controls",
                labels.len(),
                controls.len()
            )));
        }
        for m in std::iter::once(&drift).chain(&controls) {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: m.dim(),
                });
            }
            let defect = m.hermiticity_defect();
            if defect > T::HERMITIAN_TOL {
                return Err(Error::NotHermitian {
                    defect: defect.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(ControlSystem {
            n_qubits,
            drift,
            controls,
            labels,
            descriptor,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.drift.dim()
    }

    pub fn n_controls(&self) -> usize {
        self.controls.len()
    }

    pub fn drift(&self) -> &CMatrix<T> {
        &self.drift
    }

    pub fn controls(&self) -> &[CMatrix<T>] {
        &self.controls
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn descriptor(&self) -> &ModelDescriptor<T> {
        &self.descriptor
    }

    /// Same controls, different drift; used for switchable-coupling idealisations.
    pub fn with_drift(&self, drift: CMatrix<T>) -> Result<Self> {
        Self::new(
            self.n_qubits,
            drift,
            self.controls.clone(),
            self.labels.clone(),
        )
    }

    /// `H0 + Σ_m u_m H_m`.
    pub fn hamiltonian(&self, amplitudes: &[T]) -> CMatrix<T> {
        assert_eq!(
            amplitudes.len(),
            self.controls.len(),
            "amplitude count does not match control count"
        );
        let mut h = self.drift.clone();
        for (u, hm) in amplitudes.iter().zip(&self.controls) {
            if *u != T::zero() {
                h.add_scaled_assign(*u, hm);
            }
        }
        h
    }
}

/// Ising-coupled chain with local x/y controls, ordered
/// `[σ_x^(1), σ_y^(1), …, σ_x^(N), σ_y^(N)]`.
pub fn build_basic_nmr<T: Real>(
    coupling: &CouplingSpec<T>,
    n_qubits: usize,
) -> Result<ControlSystem<T>> {
    coupling.require(CouplingKind::Ising, "basic NMR")?;
    if n_qubits == 0 {
        return Err(Error::InvalidArgument("need at least one qubit".into()));
    }
    let drift = coupling.hamiltonian(n_qubits)?;
    let mut controls = Vec::with_capacity(2 * n_qubits);
    let mut labels = Vec::with_capacity(2 * n_qubits);
    for n in 1..=n_qubits {
        for axis in [Pauli::X, Pauli::Y] {
            controls.push(embed_pauli(axis, n, n_qubits)?);
            labels.push(format!("{}{}", axis.label(), n));
        }
    }
    ControlSystem::with_descriptor(
        n_qubits,
        drift,
        controls,
        labels,
        ModelDescriptor::BasicNmr {
            n_qubits,
            coupling: coupling.clone(),
        },
    )
}

/// Replaces control `m` of a basic NMR system by `Σ_{m'} α_{m m'} H_{m'}`.
pub fn build_crosstalk<T: Real>(
    base: &ControlSystem<T>,
    alpha: &[Vec<T>],
) -> Result<ControlSystem<T>> {
    let coupling = match base.descriptor() {
        ModelDescriptor::BasicNmr { coupling, .. } => coupling.clone(),
        _ => {
            return Err(Error::InvalidArgument(
                "cross-talk is defined on top of the basic NMR model".into(),
            ))
        }
    };
    let m = base.n_controls();
    if alpha.len() != m || alpha.iter().any(|row| row.len() != m) {
        return Err(Error::InvalidArgument(format!(
            "cross-talk matrix must be {m}x{m}"
        )));
    }
    let mut controls = Vec::with_capacity(m);
    for row in alpha {
        let mut h = CMatrix::zeros(base.dim());
        for (a, hm) in row.iter().zip(base.controls()) {
            if !a.is_finite() {
                return Err(Error::InvalidArgument(
                    "cross-talk entries must be finite".into(),
                ));
            }
            if *a != T::zero() {
                h.add_scaled_assign(*a, hm);
            }
        }
        controls.push(h);
    }
    let labels = (1..=m).map(|i| format!("H{i}")).collect();
    ControlSystem::with_descriptor(
        base.n_qubits(),
        base.drift().clone(),
        controls,
        labels,
        ModelDescriptor::Crosstalk {
            n_qubits: base.n_qubits(),
            coupling,
            alpha: alpha.to_vec(),
        },
    )
}

/// Ising chain with Zeeman terms `-ω_n/2 σ_z^(n)`, driven by a single global
/// field whose two quadratures couple through `Σ γ̄_n σ_x^(n)` and
/// `Σ γ̄_n σ_y^(n)`.
///
/// The field signs are absorbed into the amplitudes (`u_1 = -γ0 B_x / 2`,
/// `u_2 = +γ0 B_y / 2`), so the stored operators are the plain collective sums.
pub fn build_global_field_model<T: Real>(
    omegas: &[T],
    gammas: &[T],
    coupling: &CouplingSpec<T>,
) -> Result<ControlSystem<T>> {
    coupling.require(CouplingKind::Ising, "global-field")?;
    let n_qubits = omegas.len();
    if n_qubits == 0 {
        return Err(Error::InvalidArgument("need at least one qubit".into()));
    }
    if gammas.len() != n_qubits {
        return Err(Error::InvalidArgument(format!(
            "{} coupling ratios for {} qubits",
            gammas.len(),
            n_qubits
        )));
    }
    let mut drift = coupling.hamiltonian(n_qubits)?;
    let dim = 1 << n_qubits;
    let mut xsum = CMatrix::zeros(dim);
    let mut ysum = CMatrix::zeros(dim);
    for n in 1..=n_qubits {
        drift.add_scaled_assign(
            -T::half() * omegas[n - 1],
            &embed_pauli(Pauli::Z, n, n_qubits)?,
        );
        xsum.add_scaled_assign(gammas[n - 1], &embed_pauli(Pauli::X, n, n_qubits)?);
        ysum.add_scaled_assign(gammas[n - 1], &embed_pauli(Pauli::Y, n, n_qubits)?);
    }
    ControlSystem::with_descriptor(
        n_qubits,
        drift,
        vec![xsum, ysum],
        vec!["Xsum".into(), "Ysum".into()],
        ModelDescriptor::GlobalField {
            omegas: omegas.to_vec(),
            gammas: gammas.to_vec(),
            coupling: coupling.clone(),
        },
    )
}

/// Heisenberg chain under a fixed global drive `-Ω Σ γ̄_n σ_x^(n)`, with one
/// σ_z^(n) control per qubit (the electrode-induced detuning).
pub fn build_electrode_model<T: Real>(
    rabi: T,
    gbars: &[T],
    coupling: &CouplingSpec<T>,
) -> Result<ControlSystem<T>> {
    coupling.require(CouplingKind::Heisenberg, "electrode")?;
    if !rabi.is_finite() {
        return Err(Error::InvalidArgument(
            "Rabi frequency must be finite".into(),
        ));
    }
    let n_qubits = gbars.len();
    if n_qubits == 0 {
        return Err(Error::InvalidArgument("need at least one qubit".into()));
    }
    let mut drift = coupling.hamiltonian(n_qubits)?;
    let mut controls = Vec::with_capacity(n_qubits);
    let mut labels = Vec::with_capacity(n_qubits);
    for n in 1..=n_qubits {
        drift.add_scaled_assign(-rabi * gbars[n - 1], &embed_pauli(Pauli::X, n, n_qubits)?);
        controls.push(embed_pauli(Pauli::Z, n, n_qubits)?);
        labels.push(format!("Z{n}"));
    }
    ControlSystem::with_descriptor(
        n_qubits,
        drift,
        controls,
        labels,
        ModelDescriptor::Electrode {
            rabi,
            gbars: gbars.to_vec(),
            coupling: coupling.clone(),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    fn real_diag(m: &CMatrix<f64>) -> Vec<f64> {
        m.diag().iter().map(|z| z.re).collect()
    }

    fn is_diagonal(m: &CMatrix<f64>) -> bool {
        (0..m.dim()).all(|r| (0..m.dim()).all(|c| r == c || m[(r, c)].norm() == 0.0))
    }

    #[test]
    fn basic_nmr_single_qubit() {
        let sys = build_basic_nmr(&CouplingSpec::ising_chain(3.0), 1).unwrap();
        assert_eq!(sys.drift(), &CMatrix::zeros(2));
        assert_eq!(sys.controls()[0], Pauli::X.matrix());
        assert_eq!(sys.controls()[1], Pauli::Y.matrix());
        assert_eq!(sys.labels(), &["X1", "Y1"]);
    }

    #[test]
    fn basic_nmr_two_and_three_qubits() {
        let two = build_basic_nmr(&CouplingSpec::ising_chain(1.0), 2).unwrap();
        assert!(is_diagonal(two.drift()));
        assert_eq!(real_diag(two.drift()), vec![1.0, -1.0, -1.0, 1.0]);
        assert_eq!(two.n_controls(), 4);

        let three = build_basic_nmr(&CouplingSpec::ising_chain(1.0), 3).unwrap();
        assert_eq!(
            real_diag(three.drift()),
            vec![2.0, 0.0, -2.0, 0.0, 0.0, -2.0, 0.0, 2.0]
        );
        assert_eq!(three.labels(), &["X1", "Y1", "X2", "Y2", "X3", "Y3"]);
    }

    #[test]
    fn crosstalk_identity_and_permutation() {
        let base = build_basic_nmr(&CouplingSpec::ising_chain(1.0), 1).unwrap();
        let same = build_crosstalk(&base, &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(same.controls(), base.controls());
        assert_eq!(same.drift(), base.drift());
        let swapped = build_crosstalk(&base, &[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(swapped.controls()[0], Pauli::Y.matrix());
        assert_eq!(swapped.controls()[1], Pauli::X.matrix());
    }

    #[test]
    fn crosstalk_size_mismatch() {
        let base = build_basic_nmr(&CouplingSpec::ising_chain(1.0), 2).unwrap();
        assert!(matches!(
            build_crosstalk(&base, &[vec![1.0, 0.0], vec![0.0, 1.0]]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn global_field_two_qubit_drift_and_controls() {
        let sys =
            build_global_field_model(&[10.0, 12.0], &[1.0, 1.0], &CouplingSpec::ising_chain(1.0))
                .unwrap();
        assert!(is_diagonal(sys.drift()));
        assert_eq!(real_diag(sys.drift()), vec![-10.0, 0.0, -2.0, 12.0]);
        let xi = embed_pauli::<f64>(Pauli::X, 1, 2).unwrap();
        let ix = embed_pauli::<f64>(Pauli::X, 2, 2).unwrap();
        assert_eq!(sys.controls()[0], &xi + &ix);
        assert_eq!(sys.n_controls(), 2);
    }

    #[test]
    fn global_field_length_mismatch() {
        assert!(
            build_global_field_model(&[10.0, 12.0], &[1.0], &CouplingSpec::ising_chain(1.0))
                .is_err()
        );
    }

    #[test]
    fn electrode_heisenberg_entries() {
        let sys =
            build_electrode_model(0.0, &[1.0, 1.0], &CouplingSpec::heisenberg_chain(1.0)).unwrap();
        let h = sys.drift();
        let re = |r: usize, c: usize| h[(r, c)];
        let one = Complex::new(1.0, 0.0);
        assert_eq!(re(0, 0), one);
        assert_eq!(re(1, 1), -one);
        assert_eq!(re(1, 2), one * 2.0);
        assert_eq!(re(2, 1), one * 2.0);
        assert_eq!(re(2, 2), -one);
        assert_eq!(re(3, 3), one);
        for k in 0..4 {
            for (r, c) in [(0, k), (k, 0), (3, k), (k, 3)] {
                if r != c {
                    assert_eq!(re(r, c).norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn electrode_with_drive() {
        let coupling = CouplingSpec::heisenberg_chain(1.0);
        let bare = build_electrode_model(0.0, &[1.0, 1.0], &coupling).unwrap();
        let driven = build_electrode_model(10.0, &[1.0, 1.0], &coupling).unwrap();
        let xi = embed_pauli::<f64>(Pauli::X, 1, 2).unwrap();
        let ix = embed_pauli::<f64>(Pauli::X, 2, 2).unwrap();
        let expected = bare.drift() - &(&xi + &ix).scale_real(10.0);
        assert_eq!(driven.drift(), &expected);
        assert_eq!(driven.controls()[0], embed_pauli(Pauli::Z, 1, 2).unwrap());
        assert_eq!(driven.controls()[1], embed_pauli(Pauli::Z, 2, 2).unwrap());
    }

    #[test]
    fn coupling_kind_enforced() {
        assert!(build_basic_nmr(&CouplingSpec::heisenberg_chain(1.0), 2).is_err());
        assert!(build_electrode_model(1.0, &[1.0, 1.0], &CouplingSpec::ising_chain(1.0)).is_err());
    }

    #[test]
    fn explicit_coupling_matrix() {
        let spec = CouplingSpec {
            topology: Topology::Explicit(vec![
                vec![0.0, 1.0, 0.5],
                vec![1.0, 0.0, 0.0],
                vec![0.0, 0.0, 0.0],
            ]),
            kind: CouplingKind::Ising,
        };
        assert_eq!(spec.pairs(3).unwrap(), vec![(1, 2, 1.0), (1, 3, 0.5)]);
        let bad = CouplingSpec {
            topology: Topology::Explicit(vec![vec![0.0, 1.0], vec![2.0, 0.0]]),
            kind: CouplingKind::Ising,
        };
        assert!(bad.pairs(2).is_err());
    }

    #[test]
    fn descriptor_rebuild_is_identical() {
        let sys =
            build_electrode_model(10.0, &[1.0, 0.9, 1.1], &CouplingSpec::heisenberg_chain(1.0))
                .unwrap();
        let again = sys.descriptor().build().unwrap();
        assert_eq!(sys.drift(), again.drift());
        assert_eq!(sys.controls(), again.controls());
        assert_eq!(sys.labels(), again.labels());
    }
}

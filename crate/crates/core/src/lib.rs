//! Optimal-control synthesis of quantum gates for coupled spin-qubit models.
//!
//! The numerical core is generic over the real scalar type (`f32` or `f64`,
//! see [`Real`]); the aliases at the crate root fix it to `f64`, which is what
//! the fidelity thresholds in this crate are calibrated for.

pub mod error;
pub mod gates;
pub mod geometric;
pub mod grape;
pub mod io;
pub mod models;
pub mod operator;
pub mod propagation;
pub mod scalar;
pub mod spectrum;

pub use error::{Error, Result};
pub use gates::{
    cnot, fidelity, gate_by_name, gate_error, standard_gate, toffoli_like, universal_set_2q,
    GateTarget, StandardGate,
};
pub use geometric::{
    cartan_decompose, euler_decompose, sequence_to_control, CartanDecomposition, Decomposition,
    EulerAngles, HardPulseSequence, LocalPair,
};
pub use grape::{
    clip_amplitudes, fidelity_gradient, initial_control, line_search_step, optimize,
    update_direction, GradientForm, InitialControl, OptimizationResult, OptimizerConfig,
    SearchDirection, StepSchedule, UpdateMode,
};
pub use models::{
    build_basic_nmr, build_crosstalk, build_electrode_model, build_global_field_model,
    ControlSystem, CouplingKind, CouplingSpec, ModelDescriptor, Topology,
};
pub use operator::{
    embed_pauli, herm_expm, tensor_product, unitarity_defect, CMatrix, HermitianEigen, Pauli,
};
pub use propagation::{
    evolve_fidelity, propagate, segment_propagator, total_propagator, PiecewiseControl,
    PropagationCache,
};
pub use scalar::Real;
pub use spectrum::{bandwidth_summary, control_spectrum, SpectrumResult};

pub type Complex64 = num_complex::Complex<f64>;
pub type Matrix = CMatrix<f64>;
pub type System = ControlSystem<f64>;
pub type Control = PiecewiseControl<f64>;
pub type Target = GateTarget<f64>;
pub type Cache = PropagationCache<f64>;
pub type Config = OptimizerConfig<f64>;
pub type Outcome = OptimizationResult<f64>;
pub type Spectrum = SpectrumResult<f64>;

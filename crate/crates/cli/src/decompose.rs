//! `decompose`: Euler or Cartan factorisation of a target and the matching
//! hard-pulse sequence for the basic NMR model.

use std::path::Path;

use gatesynth::{
    cartan_decompose, euler_decompose, fidelity, io, sequence_to_control, Decomposition,
    GateTarget, HardPulseSequence,
};
use serde::Serialize;

use crate::error::CliError;
use crate::output::{write_atomic, write_text};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Angles {
    /// `U = U_x(α) U_y(β) U_x(γ)`.
    Euler { alpha: f64, beta: f64, gamma: f64 },
    /// Interaction angles of `exp(-i α_zz ZZ)` etc.; `phase` is `[re, im]`.
    Cartan {
        alpha_zz: f64,
        alpha_yy: f64,
        alpha_xx: f64,
        phase: [f64; 2],
        local: bool,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionReport {
    pub target: String,
    pub angles: Angles,
    /// `max |reconstructed - target|`.
    pub reconstruction_error: f64,
    pub pulse_amplitude: f64,
    pub coupling: f64,
    pub sequence_duration: f64,
    pub sequence_segments: usize,
    /// Fidelity of the hard-pulse sequence with the coupling switched off
    /// during pulses.
    pub sequence_fidelity: f64,
    /// Fidelity of the same pulses with the coupling always on.
    pub sequence_fidelity_fixed_coupling: f64,
    /// Per segment: coupling on (free evolution) or off (pulse).
    pub coupling_on: Vec<bool>,
}

pub fn decompose(
    target: &GateTarget<f64>,
    pulse_amplitude: f64,
    coupling: f64,
) -> Result<(DecompositionReport, HardPulseSequence<f64>), CliError> {
    let (decomp, angles, rebuilt) = match target.n_qubits() {
        1 => {
            let e = euler_decompose(target.matrix())?;
            let rebuilt = e.reconstruct();
            (
                Decomposition::Euler(e),
                Angles::Euler {
                    alpha: e.alpha,
                    beta: e.beta,
                    gamma: e.gamma,
                },
                rebuilt,
            )
        }
        2 => {
            let c = cartan_decompose(target.matrix())?;
            let rebuilt = c.reassemble();
            let angles = Angles::Cartan {
                alpha_zz: c.alpha1,
                alpha_yy: c.alpha2,
                alpha_xx: c.alpha3,
                phase: [c.phase.re, c.phase.im],
                local: c.is_local(1e-9),
            };
            (Decomposition::Cartan(c), angles, rebuilt)
        }
        n => {
            return Err(CliError::Config(format!(
                "decompose handles one- and two-qubit targets, got {n} qubits"
            )))
        }
    };
    let seq = sequence_to_control(&decomp, pulse_amplitude, coupling)?;
    let system = seq.system(coupling)?;
    let switched = seq.propagate_switchable(&system)?;
    let fixed = gatesynth::total_propagator(&system, &seq.control)?;
    let report = DecompositionReport {
        target: target.label().to_string(),
        angles,
        reconstruction_error: rebuilt.max_abs_diff(target.matrix()),
        pulse_amplitude,
        coupling,
        sequence_duration: seq.control.t_final(),
        sequence_segments: seq.control.n_segments(),
        sequence_fidelity: fidelity(target, &switched)?,
        sequence_fidelity_fixed_coupling: fidelity(target, &fixed)?,
        coupling_on: seq.coupling_on.clone(),
    };
    Ok((report, seq))
}

/// Writes `decomposition.json` and the pulse field `sequence.csv`.
pub fn write_decomposition(
    dir: &Path,
    report: &DecompositionReport,
    seq: &HardPulseSequence<f64>,
) -> Result<(), CliError> {
    write_text(
        &dir.join("decomposition.json"),
        &serde_json::to_string_pretty(report).expect("report serialises"),
    )?;
    write_atomic(&dir.join("sequence.csv"), |buf| {
        Ok(io::write_field_csv(&seq.control, buf)?)
    })
}

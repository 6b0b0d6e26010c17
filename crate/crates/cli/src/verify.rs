//! `verify`: recompute everything about a stored field from scratch.

use std::fmt;
use std::path::Path;

use gatesynth::{
    bandwidth_summary, fidelity, gate_error, io, propagate, unitarity_defect, Control, Matrix,
};
use serde::Serialize;

use crate::config::JobConfig;
use crate::error::CliError;
use crate::run::{max_amplitude, read_summary, spectrum_of, FIDELITY_AGREEMENT};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub fidelity: f64,
    pub gate_error: f64,
    /// Largest `‖U†U - I‖` over segment, cumulative and total propagators.
    pub unitarity_defect: f64,
    pub max_amplitude: f64,
    /// Bound from the field file, else from the config.
    pub amplitude_bound: Option<f64>,
    pub within_bound: bool,
    pub bandwidth_99: f64,
    /// `1 - F` within the configured target infidelity.
    pub meets_target: bool,
    pub summary_fidelity: Option<f64>,
    /// `None` when no summary was found.
    pub summary_agrees: Option<bool>,
}

impl VerifyReport {
    /// Problems worth a non-zero exit under `--strict`.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.within_bound {
            out.push(format!(
                "amplitude {} exceeds bound {}",
                self.max_amplitude,
                self.amplitude_bound.unwrap_or(f64::NAN)
            ));
        }
        if !self.meets_target {
            out.push(format!("fidelity {} below target", self.fidelity));
        }
        if self.summary_agrees == Some(false) {
            out.push(format!(
                "fidelity {} disagrees with summary value {}",
                self.fidelity,
                self.summary_fidelity.unwrap_or(f64::NAN)
            ));
        }
        out
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "fidelity          {:.12}", self.fidelity)?;
        writeln!(f, "gate error        {:.6e}", self.gate_error)?;
        writeln!(f, "unitarity defect  {:.3e}", self.unitarity_defect)?;
        match self.amplitude_bound {
            Some(b) => writeln!(
                f,
                "max amplitude     {:.6} (bound {b}, {})",
                self.max_amplitude,
                if self.within_bound { "ok" } else { "VIOLATED" }
            )?,
            None => writeln!(f, "max amplitude     {:.6} (unbounded)", self.max_amplitude)?,
        }
        writeln!(f, "bandwidth_99      {:.6}", self.bandwidth_99)?;
        writeln!(f, "meets target      {}", self.meets_target)?;
        match (self.summary_fidelity, self.summary_agrees) {
            (Some(s), Some(true)) => write!(f, "summary           agrees (F = {s:.12})"),
            (Some(s), _) => write!(f, "summary           MISMATCH (summary F = {s:.12})"),
            _ => write!(f, "summary           not found"),
        }
    }
}

/// Checks `field` against the model and target of `cfg`. The summary is
/// `summary` if given, else `summary.json` next to the field file if present.
pub fn verify(
    field: &Path,
    cfg: &JobConfig,
    summary: Option<&Path>,
) -> Result<VerifyReport, CliError> {
    let system = cfg.system()?;
    let target = cfg.target()?;
    let control: Control = io::load_field_csv(field)
        .map_err(|e| CliError::Config(format!("{}: {e}", field.display())))?;
    if control.n_controls() != system.n_controls() {
        return Err(CliError::Config(format!(
            "{} has {} control channels but the {} model has {}",
            field.display(),
            control.n_controls(),
            cfg.model.kind.name(),
            system.n_controls()
        )));
    }
    if control.n_segments() == 0 {
        return Err(CliError::Config(format!(
            "{} has no segments",
            field.display()
        )));
    }
    let cache = propagate(&system, &control)?;
    let defect = cache
        .segment_props
        .iter()
        .chain(&cache.forward)
        .chain(std::iter::once(&cache.total))
        .map(|u: &Matrix| unitarity_defect(u))
        .fold(0.0, f64::max);
    let f = fidelity(&target, &cache.total)?;
    let bound = control.bound().or(cfg.optimizer.amplitude_bound);
    let amp = max_amplitude(&control);
    let spectrum = spectrum_of(&control)?;

    let default_summary = field.with_file_name(crate::run::SUMMARY_FILE);
    let summary_path = summary
        .map(Path::to_path_buf)
        .or_else(|| default_summary.exists().then_some(default_summary));
    let summary_fidelity = match summary_path {
        Some(p) => Some(read_summary(&p)?.fidelity),
        None => None,
    };
    Ok(VerifyReport {
        fidelity: f,
        gate_error: gate_error(&target, &cache.total)?,
        unitarity_defect: defect,
        max_amplitude: amp,
        amplitude_bound: bound,
        within_bound: bound.is_none_or(|b| amp <= b),
        bandwidth_99: bandwidth_summary(&spectrum, 0.99)?,
        meets_target: 1.0 - f <= cfg.optimizer.target_infidelity,
        summary_fidelity,
        summary_agrees: summary_fidelity.map(|s| (s - f).abs() <= FIDELITY_AGREEMENT),
    })
}

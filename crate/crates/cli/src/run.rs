//! `synthesize`: best-of-restarts optimisation and its artefacts.

use std::path::{Path, PathBuf};

use gatesynth::{
    bandwidth_summary, control_spectrum, fidelity, gate_error, initial_control, io, optimize,
    total_propagator, Control, GateTarget, Outcome, Spectrum, System,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::JobConfig;
use crate::error::CliError;
use crate::output::{write_atomic, write_text};

/// Tolerance for the stored-field round trip and for `verify`.
pub const FIDELITY_AGREEMENT: f64 = 1e-10;

pub const FIELD_FILE: &str = "field.csv";
pub const SPECTRUM_FILE: &str = "spectrum.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFIG_FILE: &str = "config.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub model: String,
    pub target: String,
    #[serde(rename = "t_F")]
    pub t_final: f64,
    #[serde(rename = "K")]
    pub segments: usize,
    pub fidelity: f64,
    pub gate_error: f64,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time_s: f64,
    pub bandwidth_99: f64,
    pub restarts: usize,
    pub best_restart: usize,
    pub seed: u64,
    pub max_amplitude: f64,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub config: JobConfig,
    pub result: Outcome,
    pub best_restart: usize,
    /// Final fidelity of every restart, in restart order.
    pub restart_fidelities: Vec<f64>,
    pub field_path: PathBuf,
    pub spectrum_path: PathBuf,
    pub summary_path: PathBuf,
    pub summary: Summary,
}

/// Runs `f` on a pool of `workers` threads (0: rayon's default).
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> Result<R, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("optimizer.workers: {e}")))?;
    Ok(pool.install(f))
}

/// Starting control of restart `index`. A configured initial field seeds
/// restart 0; every other restart draws from its own RNG stream.
pub fn starting_control(
    cfg: &JobConfig,
    system: &System,
    index: usize,
) -> Result<Control, CliError> {
    if let (Some(path), 0) = (&cfg.control.field, index) {
        let c: Control = io::load_field_csv(path)
            .map_err(|e| CliError::Config(format!("control.field: {e}")))?;
        if c.n_controls() != system.n_controls() {
            return Err(CliError::Config(format!(
                "control.field: {} channels, model has {} controls",
                c.n_controls(),
                system.n_controls()
            )));
        }
        return Ok(c);
    }
    Ok(initial_control(
        system.n_controls(),
        cfg.control.t_final,
        cfg.control.segments,
        cfg.init(),
        cfg.optimizer.seed,
        index as u64,
    )?)
}

/// Index of the best fidelity; the earliest restart wins ties.
pub fn best_index(fidelities: &[f64]) -> usize {
    let mut best = 0;
    for (i, f) in fidelities.iter().enumerate() {
        if *f > fidelities[best] {
            best = i;
        }
    }
    best
}

/// Optimises every restart and returns the best outcome with its index and
/// all final fidelities.
pub fn solve(
    cfg: &JobConfig,
    system: &System,
    target: &GateTarget<f64>,
) -> Result<(Outcome, usize, Vec<f64>), CliError> {
    let ocfg = cfg.optimizer_config();
    let restarts = cfg.optimizer.restarts;
    let outcomes: Vec<Result<Outcome, CliError>> = with_workers(cfg.optimizer.workers, || {
        (0..restarts)
            .into_par_iter()
            .map(|r| {
                let c0 = starting_control(cfg, system, r)?;
                Ok(optimize(system, target, &c0, &ocfg)?)
            })
            .collect()
    })?;
    let outcomes: Vec<Outcome> = outcomes.into_iter().collect::<Result<_, _>>()?;
    let fidelities: Vec<f64> = outcomes.iter().map(|o| o.fidelity).collect();
    let best = best_index(&fidelities);
    let outcome = outcomes
        .into_iter()
        .nth(best)
        .expect("at least one restart");
    Ok((outcome, best, fidelities))
}

/// Spectrum of a control, resampling onto its own segment count if the grid
/// is not uniform.
pub fn spectrum_of(control: &Control) -> Result<Spectrum, CliError> {
    let uniform;
    let c = if control.is_uniform(gatesynth::spectrum::UNIFORM_GRID_TOL) {
        control
    } else {
        uniform = control.resample_uniform(control.n_segments())?;
        &uniform
    };
    Ok(control_spectrum(c)?)
}

pub fn max_amplitude(control: &Control) -> f64 {
    control.values().iter().fold(0.0, |m, u| m.max(u.abs()))
}

/// Builds the system, optimises, writes field, spectrum, summary and a config
/// snapshot into the output directory, then checks that the stored field
/// reproduces the reported fidelity.
pub fn run(cfg: &JobConfig) -> Result<RunRecord, CliError> {
    cfg.validate()?;
    let system = cfg.system()?;
    let target = cfg.target()?;
    let (result, best_restart, restart_fidelities) = solve(cfg, &system, &target)?;
    let spectrum = spectrum_of(&result.control)?;
    let bandwidth = bandwidth_summary(&spectrum, 0.99)?;
    let u = total_propagator(&system, &result.control)?;
    let summary = Summary {
        model: cfg.model.kind.name().to_string(),
        target: cfg.target_label(),
        t_final: result.control.t_final(),
        segments: result.control.n_segments(),
        fidelity: result.fidelity,
        gate_error: gate_error(&target, &u)?,
        iterations: result.iterations,
        converged: result.converged,
        wall_time_s: result.wall_time,
        bandwidth_99: bandwidth,
        restarts: cfg.optimizer.restarts,
        best_restart,
        seed: cfg.optimizer.seed,
        max_amplitude: max_amplitude(&result.control),
    };

    let dir = &cfg.output.dir;
    let field_path = dir.join(FIELD_FILE);
    let spectrum_path = dir.join(SPECTRUM_FILE);
    let summary_path = dir.join(SUMMARY_FILE);
    write_atomic(&field_path, |buf| {
        Ok(io::write_field_csv(&result.control, buf)?)
    })?;
    write_atomic(&spectrum_path, |buf| {
        Ok(io::write_spectrum_csv(&spectrum, buf)?)
    })?;
    write_text(&dir.join(CONFIG_FILE), &cfg.to_toml())?;
    write_text(
        &summary_path,
        &serde_json::to_string_pretty(&summary).expect("summary serialises"),
    )?;

    let stored: Control = io::load_field_csv(&field_path)?;
    let again = fidelity(&target, &total_propagator(&system, &stored)?)?;
    if (again - summary.fidelity).abs() > FIDELITY_AGREEMENT {
        return Err(CliError::Numerical(gatesynth::Error::InvalidArgument(
            format!(
                "stored field gives F = {again}, run reported {}",
                summary.fidelity
            ),
        )));
    }

    Ok(RunRecord {
        config: cfg.clone(),
        result,
        best_restart,
        restart_fidelities,
        field_path,
        spectrum_path,
        summary_path,
        summary,
    })
}

pub fn read_summary(path: &Path) -> Result<Summary, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

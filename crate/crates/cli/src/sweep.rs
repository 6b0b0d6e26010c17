//! `sweep`: best-of-restarts fidelity over an (Ω, K) grid for the electrode
//! model.

use std::path::Path;

use gatesynth::{gate_by_name, io, optimize, Outcome};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::JobConfig;
use crate::error::CliError;
use crate::output::write_atomic;
use crate::run::{best_index, starting_control, with_workers};

/// Gate time of sweep cells unless `[sweep].t_final` says otherwise.
pub const DEFAULT_SWEEP_T_FINAL: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub rabi: f64,
    pub segments: usize,
    pub target: String,
    pub t_final: f64,
    pub restarts: usize,
    pub best_fidelity: f64,
    pub best_restart: usize,
    pub converged: bool,
    pub iterations: usize,
    pub max_iters: usize,
}

struct Cell {
    rabi: f64,
    segments: usize,
    target: String,
    config: JobConfig,
}

fn sweep_t_final(base: &JobConfig) -> f64 {
    base.sweep
        .as_ref()
        .map_or(DEFAULT_SWEEP_T_FINAL, |s| s.t_final)
}

fn cells(base: &JobConfig, rabi: &[f64], segments: &[usize], targets: &[String]) -> Vec<Cell> {
    let t_final = sweep_t_final(base);
    let mut out = Vec::new();
    for &om in rabi {
        for &k in segments {
            for t in targets {
                let mut config = base.clone();
                config.model.rabi = Some(om);
                config.control.t_final = t_final;
                config.control.segments = k;
                config.control.field = None;
                config.target.gate = Some(t.clone());
                config.target.file = None;
                out.push(Cell {
                    rabi: om,
                    segments: k,
                    target: t.clone(),
                    config,
                });
            }
        }
    }
    out
}

/// Runs every cell with `restarts` restarts at the gate time of
/// `[sweep].t_final` (1 if absent), all jobs sharing one pool. Each
/// restart uses its own RNG stream, so the table is reproducible.
pub fn sweep(
    base: &JobConfig,
    rabi: &[f64],
    segments: &[usize],
    targets: &[String],
    restarts: usize,
) -> Result<Vec<(SweepCell, Outcome)>, CliError> {
    if restarts == 0 {
        return Err(CliError::Config(
            "sweep.restarts: must be at least 1".into(),
        ));
    }
    let grid = cells(base, rabi, segments, targets);
    let mut prepared = Vec::with_capacity(grid.len());
    for cell in &grid {
        cell.config.validate()?;
        let system = cell.config.system()?;
        let target = gate_by_name(&cell.target, cell.config.n_qubits())
            .map_err(|e| CliError::Config(format!("sweep.targets: {e}")))?;
        prepared.push((system, target));
    }
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|c| (0..restarts).map(move |r| (c, r)))
        .collect();
    let ocfg = base.optimizer_config();
    let results: Vec<Result<Outcome, CliError>> = with_workers(base.optimizer.workers, || {
        jobs.par_iter()
            .map(|&(c, r)| {
                let (system, target) = &prepared[c];
                let c0 = starting_control(&grid[c].config, system, r)?;
                Ok(optimize(system, target, &c0, &ocfg)?)
            })
            .collect()
    })?;
    let mut results = results.into_iter();
    let mut out = Vec::with_capacity(grid.len());
    for cell in &grid {
        let runs: Vec<Outcome> = results.by_ref().take(restarts).collect::<Result<_, _>>()?;
        let fids: Vec<f64> = runs.iter().map(|o| o.fidelity).collect();
        let best = best_index(&fids);
        let outcome = runs.into_iter().nth(best).expect("restarts >= 1");
        out.push((
            SweepCell {
                rabi: cell.rabi,
                segments: cell.segments,
                target: cell.target.clone(),
                t_final: cell.config.control.t_final,
                restarts,
                best_fidelity: outcome.fidelity,
                best_restart: best,
                converged: outcome.converged,
                iterations: outcome.iterations,
                max_iters: ocfg.max_iters,
            },
            outcome,
        ));
    }
    Ok(out)
}

/// Grid, targets and restart count from the config's `[sweep]` section,
/// with `restarts` overriding the configured count.
pub fn sweep_from_config(
    cfg: &JobConfig,
    restarts: Option<usize>,
) -> Result<Vec<(SweepCell, Outcome)>, CliError> {
    let s = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep: section missing from config".into()))?;
    let targets = match (&s.targets, &cfg.target.gate) {
        (Some(t), _) => t.clone(),
        (None, Some(g)) => vec![g.clone()],
        (None, None) => {
            return Err(CliError::Config(
                "sweep.targets: required when target is a file".into(),
            ))
        }
    };
    sweep(
        cfg,
        &s.rabi,
        &s.segments,
        &targets,
        restarts.unwrap_or(s.restarts),
    )
}

pub fn cell_file_name(cell: &SweepCell) -> String {
    format!("rabi{}_K{}_{}.csv", cell.rabi, cell.segments, cell.target)
}

pub fn write_table(path: &Path, cells: &[SweepCell]) -> Result<(), CliError> {
    write_atomic(path, |buf| {
        let mut w = csv::Writer::from_writer(buf);
        for c in cells {
            w.serialize(c)
                .map_err(|e| CliError::Config(format!("sweep table: {e}")))?;
        }
        w.flush().map_err(|e| CliError::io(path, e))?;
        Ok(())
    })
}

/// Writes `sweep.csv` and the best field of every cell under `dir/cells`.
pub fn write_sweep(dir: &Path, results: &[(SweepCell, Outcome)]) -> Result<(), CliError> {
    for (cell, outcome) in results {
        let path = dir.join("cells").join(cell_file_name(cell));
        write_atomic(&path, |buf| Ok(io::write_field_csv(&outcome.control, buf)?))?;
    }
    let table: Vec<SweepCell> = results.iter().map(|(c, _)| c.clone()).collect();
    write_table(&dir.join("sweep.csv"), &table)
}

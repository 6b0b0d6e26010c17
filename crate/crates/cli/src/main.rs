use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gatesynth::{bandwidth_summary, gate_by_name, io, Control, GateTarget};
use gatesynth_cli::decompose::{decompose, write_decomposition};
use gatesynth_cli::output::write_atomic;
use gatesynth_cli::run::spectrum_of;
use gatesynth_cli::sweep::write_sweep;
use gatesynth_cli::{run, sweep_from_config, verify, CliError, JobConfig};

#[derive(Parser)]
#[command(
    name = "gatesynth",
    version,
    about = "Optimal-control synthesis of quantum gates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML job configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `[output].dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed (overrides `[optimizer].seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Exit with status 2 unless the result meets its threshold.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Optimise a control field for the configured model and target.
    Synthesize {
        #[command(flatten)]
        common: Common,
        /// Number of restarts (overrides `[optimizer].restarts`).
        #[arg(long)]
        restarts: Option<usize>,
    },
    /// Best-of-restarts fidelity over the `[sweep]` grid (electrode model).
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Restarts per cell (overrides `[sweep].restarts`).
        #[arg(long)]
        restarts: Option<usize>,
    },
    /// Recompute fidelity, unitarity, bound compliance and spectrum of a field.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Field CSV to check.
        #[arg(long)]
        field: PathBuf,
        /// Summary JSON to compare against (default: next to the field).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Euler (one qubit) or Cartan (two qubits) decomposition and hard pulses.
    Decompose {
        /// Gate name, e.g. `cnot`, `had1`.
        #[arg(long, conflicts_with_all = ["matrix", "config"])]
        gate: Option<String>,
        /// Number of qubits for `--gate`.
        #[arg(long, default_value_t = 2)]
        qubits: usize,
        /// Gate CSV.
        #[arg(long, conflicts_with = "config")]
        matrix: Option<PathBuf>,
        /// Take the target from a job configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Hard-pulse amplitude.
        #[arg(long, default_value_t = 10.0)]
        amplitude: f64,
        /// Ising coupling J.
        #[arg(long, default_value_t = 1.0)]
        coupling: f64,
        /// Directory for `decomposition.json` and `sequence.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One-sided magnitude spectrum and 99% bandwidth of a field CSV.
    Spectrum {
        /// Field CSV.
        field: PathBuf,
        /// Spectrum CSV to write.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Power fraction for the bandwidth summary.
        #[arg(long, default_value_t = 0.99)]
        fraction: f64,
    },
}

fn load(common: &Common) -> Result<JobConfig, CliError> {
    let mut cfg = JobConfig::load(&common.config)?;
    if let Some(dir) = &common.out {
        cfg.output.dir = dir.clone();
    }
    if let Some(seed) = common.seed {
        cfg.optimizer.seed = seed;
    }
    Ok(cfg)
}

/// Prints a line, ignoring a closed stdout (e.g. piped into `head`).
fn emit(text: impl std::fmt::Display) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn json(value: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(value).expect("serialisable")
}

fn load_field(path: &Path) -> Result<Control, CliError> {
    io::load_field_csv(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synthesize { common, restarts } => {
            let mut cfg = load(&common)?;
            if let Some(r) = restarts {
                cfg.optimizer.restarts = r;
            }
            let record = run(&cfg)?;
            emit(json(&record.summary));
            if common.strict && !record.summary.converged {
                return Err(CliError::Strict(format!(
                    "not converged: best fidelity {} after {} restarts",
                    record.summary.fidelity, record.summary.restarts
                )));
            }
        }
        Command::Sweep { common, restarts } => {
            let cfg = load(&common)?;
            cfg.validate()?;
            let results = sweep_from_config(&cfg, restarts)?;
            write_sweep(&cfg.output.dir, &results)?;
            for (cell, _) in &results {
                emit(format!(
                    "rabi={:<6} K={:<4} {:<12} best F={:.6} converged={} (best of {}: restart {})",
                    cell.rabi,
                    cell.segments,
                    cell.target,
                    cell.best_fidelity,
                    cell.converged,
                    cell.restarts,
                    cell.best_restart
                ));
            }
            let failed = results.iter().filter(|(c, _)| !c.converged).count();
            if common.strict && failed > 0 {
                return Err(CliError::Strict(format!(
                    "{failed} sweep cells did not converge"
                )));
            }
        }
        Command::Verify {
            common,
            field,
            summary,
        } => {
            let cfg = load(&common)?;
            let report = verify(&field, &cfg, summary.as_deref())?;
            emit(&report);
            let problems = report.problems();
            if common.strict && !problems.is_empty() {
                return Err(CliError::Strict(problems.join("; ")));
            }
        }
        Command::Decompose {
            gate,
            qubits,
            matrix,
            config,
            amplitude,
            coupling,
            out,
        } => {
            let target: GateTarget<f64> = match (gate, matrix, config) {
                (Some(g), _, _) => gate_by_name(&g, qubits)
                    .map_err(|e| CliError::Config(format!("--gate: {e}")))?,
                (None, Some(m), _) => {
                    let mat = io::load_gate_csv(&m)
                        .map_err(|e| CliError::Config(format!("{}: {e}", m.display())))?;
                    let label = m
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_default();
                    GateTarget::new(label, mat)
                        .map_err(|e| CliError::Config(format!("{}: {e}", m.display())))?
                }
                (None, None, Some(c)) => JobConfig::load(&c)?.target()?,
                (None, None, None) => {
                    return Err(CliError::Config(
                        "decompose needs --gate, --matrix or --config".into(),
                    ))
                }
            };
            let (report, seq) = decompose(&target, amplitude, coupling)?;
            emit(json(&report));
            if let Some(dir) = out {
                write_decomposition(&dir, &report, &seq)?;
            }
        }
        Command::Spectrum {
            field,
            out,
            fraction,
        } => {
            let control = load_field(&field)?;
            let spectrum = spectrum_of(&control)?;
            let bw = bandwidth_summary(&spectrum, fraction)?;
            if let Some(path) = out {
                write_atomic(&path, |buf| Ok(io::write_spectrum_csv(&spectrum, buf)?))?;
            }
            emit(format!("bandwidth({fraction}) = {bw}"));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

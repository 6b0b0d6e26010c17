//! TOML job configuration.
//!
//! ```toml
//! [model]
//! kind = "electrode"        # basic-nmr | crosstalk | global-field | electrode
//! qubits = 2
//! coupling = 1.0            # uniform nearest-neighbour J
//! rabi = 10.0               # electrode: fixed drive Ω
//!
//! [target]
//! gate = "cnot"             # or: file = "gate.csv"
//!
//! [control]
//! t_final = 1.0
//! segments = 10
//!
//! [optimizer]
//! restarts = 10
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Every field except `model.kind`, `target` and `control` has a default; see
//! the struct definitions below. Relative paths are resolved against the
//! directory holding the config file.

use std::path::{Path, PathBuf};

use gatesynth::{
    gate_by_name, io, CouplingKind, CouplingSpec, GateTarget, GradientForm, InitialControl,
    ModelDescriptor, OptimizerConfig, SearchDirection, StepSchedule, System, Topology, UpdateMode,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    BasicNmr,
    Crosstalk,
    GlobalField,
    Electrode,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::BasicNmr => "basic-nmr",
            ModelKind::Crosstalk => "crosstalk",
            ModelKind::GlobalField => "global-field",
            ModelKind::Electrode => "electrode",
        }
    }

    fn default_coupling(self) -> CouplingKind {
        match self {
            ModelKind::Electrode => CouplingKind::Heisenberg,
            _ => CouplingKind::Ising,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingKindConfig {
    Ising,
    Heisenberg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    /// Defaults to the length of `omegas` when that is given, else 2.
    pub qubits: Option<usize>,
    /// Uniform nearest-neighbour coupling J.
    #[serde(default = "one")]
    pub coupling: f64,
    /// Explicit `N×N` coupling matrix; overrides `coupling`.
    pub coupling_matrix: Option<Vec<Vec<f64>>>,
    /// Ising for every model except electrode, which defaults to Heisenberg.
    pub coupling_kind: Option<CouplingKindConfig>,
    /// Global-field resonance frequencies ω_n.
    pub omegas: Option<Vec<f64>>,
    /// Coupling ratios γ̄_n (global-field) or electrode gains; default all 1.
    pub gammas: Option<Vec<f64>>,
    /// Electrode drive Ω.
    pub rabi: Option<f64>,
    /// Cross-talk matrix α, `2N × 2N`.
    pub crosstalk: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    /// `identity`, `had<n>`, `t<n>`, `cnot` or `toffoli-like`.
    pub gate: Option<String>,
    /// Gate CSV (rows of interleaved re,im pairs).
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    Zero,
    Constant,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlConfig {
    pub t_final: f64,
    pub segments: usize,
    #[serde(default = "default_init")]
    pub init: InitKind,
    /// Constant value, or half-width of the uniform draw.
    #[serde(default = "one")]
    pub amplitude: f64,
    /// Initial field CSV for restart 0, used on its own time grid.
    pub field: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeConfig {
    Global,
    Local,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientConfig {
    Exact,
    FirstOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionConfig {
    Gradient,
    Lbfgs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSection {
    pub mode: ModeConfig,
    pub max_iters: usize,
    pub target_infidelity: f64,
    pub epsilon0: f64,
    pub line_search: bool,
    pub amplitude_bound: Option<f64>,
    pub seed: u64,
    pub gradient: GradientConfig,
    pub direction: DirectionConfig,
    pub lbfgs_memory: usize,
    pub step_up: i32,
    pub step_down: i32,
    pub stall_limit: usize,
    pub max_stall_cycles: usize,
    pub restarts: usize,
    /// Worker threads; 0 lets the thread pool decide.
    pub workers: usize,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let d = OptimizerConfig::<f64>::default();
        OptimizerSection {
            mode: ModeConfig::Global,
            max_iters: d.max_iters,
            target_infidelity: d.target_infidelity,
            epsilon0: d.epsilon0,
            line_search: d.line_search,
            amplitude_bound: d.amplitude_bound,
            seed: d.seed,
            gradient: GradientConfig::Exact,
            direction: DirectionConfig::Gradient,
            lbfgs_memory: 20,
            step_up: d.schedule.up,
            step_down: d.schedule.down,
            stall_limit: d.stall_limit,
            max_stall_cycles: d.max_stall_cycles,
            restarts: 1,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
        }
    }
}

/// Grid for `sweep`; the model must be `electrode`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub rabi: Vec<f64>,
    pub segments: Vec<usize>,
    /// Gate names; defaults to the `[target]` gate.
    pub targets: Option<Vec<String>>,
    #[serde(default = "default_sweep_restarts")]
    pub restarts: usize,
    /// Gate time of every cell; `[control].t_final` does not apply.
    #[serde(default = "default_sweep_t_final")]
    pub t_final: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub model: ModelConfig,
    pub target: TargetConfig,
    pub control: ControlConfig,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub output: OutputConfig,
    pub sweep: Option<SweepConfig>,
}

fn one() -> f64 {
    1.0
}

fn default_init() -> InitKind {
    InitKind::Random
}

fn default_sweep_restarts() -> usize {
    5
}

fn default_sweep_t_final() -> f64 {
    crate::sweep::DEFAULT_SWEEP_T_FINAL
}

fn invalid(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{path}: {msg}"))
}

impl JobConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: JobConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Reads a config file and resolves its relative paths.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises")
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(f) = self.target.file.as_mut() {
            fix(f);
        }
        if let Some(f) = self.control.field.as_mut() {
            fix(f);
        }
        fix(&mut self.output.dir);
    }

    pub fn n_qubits(&self) -> usize {
        self.model
            .qubits
            .or_else(|| self.model.omegas.as_ref().map(Vec::len))
            .unwrap_or(2)
    }

    /// Checks arity and ranges, reporting the offending field.
    pub fn validate(&self) -> Result<(), CliError> {
        let n = self.n_qubits();
        let m = &self.model;
        if n == 0 || n > 8 {
            return Err(invalid("model.qubits", "must lie in 1..=8"));
        }
        if !m.coupling.is_finite() {
            return Err(invalid("model.coupling", "must be finite"));
        }
        if let Some(mat) = &m.coupling_matrix {
            if mat.len() != n || mat.iter().any(|r| r.len() != n) {
                return Err(invalid("model.coupling_matrix", format!("must be {n}x{n}")));
            }
        }
        let check_len = |name: &str, v: &Option<Vec<f64>>| -> Result<(), CliError> {
            if let Some(v) = v {
                if v.len() != n {
                    return Err(invalid(
                        name,
                        format!("expected {n} entries, found {}", v.len()),
                    ));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(invalid(name, "entries must be finite"));
                }
            }
            Ok(())
        };
        check_len("model.omegas", &m.omegas)?;
        check_len("model.gammas", &m.gammas)?;
        match m.kind {
            ModelKind::GlobalField if m.omegas.is_none() => {
                return Err(invalid(
                    "model.omegas",
                    "required for the global-field model",
                ));
            }
            ModelKind::Electrode if m.rabi.is_none() => {
                return Err(invalid("model.rabi", "required for the electrode model"));
            }
            ModelKind::Crosstalk => match &m.crosstalk {
                None => {
                    return Err(invalid(
                        "model.crosstalk",
                        "required for the crosstalk model",
                    ))
                }
                Some(a) if a.len() != 2 * n || a.iter().any(|r| r.len() != 2 * n) => {
                    return Err(invalid(
                        "model.crosstalk",
                        format!("must be {0}x{0}", 2 * n),
                    ));
                }
                _ => {}
            },
            _ => {}
        }
        match (&self.target.gate, &self.target.file) {
            (None, None) => return Err(invalid("target", "needs `gate` or `file`")),
            (Some(_), Some(_)) => {
                return Err(invalid("target", "give either `gate` or `file`, not both"))
            }
            (None, Some(f)) if !f.exists() => {
                return Err(invalid(
                    "target.file",
                    format!("{} does not exist", f.display()),
                ));
            }
            _ => {}
        }
        let c = &self.control;
        if !(c.t_final > 0.0 && c.t_final.is_finite()) {
            return Err(invalid("control.t_final", "must be positive"));
        }
        if c.segments == 0 {
            return Err(invalid("control.segments", "must be at least 1"));
        }
        if !c.amplitude.is_finite() || (c.init == InitKind::Random && c.amplitude < 0.0) {
            return Err(invalid(
                "control.amplitude",
                "must be finite and, for random draws, non-negative",
            ));
        }
        if let Some(f) = &c.field {
            if !f.exists() {
                return Err(invalid(
                    "control.field",
                    format!("{} does not exist", f.display()),
                ));
            }
        }
        let o = &self.optimizer;
        if o.restarts == 0 {
            return Err(invalid("optimizer.restarts", "must be at least 1"));
        }
        if o.direction == DirectionConfig::Lbfgs && o.lbfgs_memory == 0 {
            return Err(invalid("optimizer.lbfgs_memory", "must be at least 1"));
        }
        self.optimizer_config()
            .validate()
            .map_err(|e| invalid("optimizer", e))?;
        if let Some(s) = &self.sweep {
            if m.kind != ModelKind::Electrode {
                return Err(invalid(
                    "sweep",
                    "sweeps are defined for the electrode model",
                ));
            }
            if s.rabi.is_empty() || s.segments.is_empty() {
                return Err(invalid(
                    "sweep",
                    "rabi and segments lists must be non-empty",
                ));
            }
            if s.segments.contains(&0) {
                return Err(invalid("sweep.segments", "entries must be at least 1"));
            }
            if s.restarts == 0 {
                return Err(invalid("sweep.restarts", "must be at least 1"));
            }
            if !(s.t_final > 0.0 && s.t_final.is_finite()) {
                return Err(invalid("sweep.t_final", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn coupling_spec(&self) -> CouplingSpec<f64> {
        let kind = match self.model.coupling_kind {
            Some(CouplingKindConfig::Ising) => CouplingKind::Ising,
            Some(CouplingKindConfig::Heisenberg) => CouplingKind::Heisenberg,
            None => self.model.kind.default_coupling(),
        };
        let topology = match &self.model.coupling_matrix {
            Some(m) => Topology::Explicit(m.clone()),
            None => Topology::NearestNeighbour(self.model.coupling),
        };
        CouplingSpec { topology, kind }
    }

    pub fn descriptor(&self) -> ModelDescriptor<f64> {
        let n = self.n_qubits();
        let coupling = self.coupling_spec();
        let gammas = self.model.gammas.clone().unwrap_or_else(|| vec![1.0; n]);
        match self.model.kind {
            ModelKind::BasicNmr => ModelDescriptor::BasicNmr {
                n_qubits: n,
                coupling,
            },
            ModelKind::Crosstalk => ModelDescriptor::Crosstalk {
                n_qubits: n,
                coupling,
                alpha: self.model.crosstalk.clone().unwrap_or_default(),
            },
            ModelKind::GlobalField => ModelDescriptor::GlobalField {
                omegas: self.model.omegas.clone().unwrap_or_default(),
                gammas,
                coupling,
            },
            ModelKind::Electrode => ModelDescriptor::Electrode {
                rabi: self.model.rabi.unwrap_or_default(),
                gbars: gammas,
                coupling,
            },
        }
    }

    pub fn system(&self) -> Result<System, CliError> {
        self.descriptor().build().map_err(|e| invalid("model", e))
    }

    pub fn target(&self) -> Result<GateTarget<f64>, CliError> {
        let n = self.n_qubits();
        let t = match (&self.target.gate, &self.target.file) {
            (Some(name), _) => gate_by_name(name, n).map_err(|e| invalid("target.gate", e))?,
            (None, Some(path)) => {
                let m = io::load_gate_csv(path).map_err(|e| invalid("target.file", e))?;
                let label = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                GateTarget::new(label, m).map_err(|e| invalid("target.file", e))?
            }
            (None, None) => return Err(invalid("target", "needs `gate` or `file`")),
        };
        if t.n_qubits() != n {
            return Err(invalid(
                "target",
                format!("acts on {} qubits but the model has {n}", t.n_qubits()),
            ));
        }
        Ok(t)
    }

    pub fn target_label(&self) -> String {
        match (&self.target.gate, &self.target.file) {
            (Some(g), _) => g.clone(),
            (None, Some(f)) => f
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            _ => String::new(),
        }
    }

    pub fn init(&self) -> InitialControl<f64> {
        match self.control.init {
            InitKind::Zero => InitialControl::Zero,
            InitKind::Constant => InitialControl::Constant(self.control.amplitude),
            InitKind::Random => InitialControl::UniformRandom(self.control.amplitude),
        }
    }

    pub fn optimizer_config(&self) -> OptimizerConfig<f64> {
        let o = &self.optimizer;
        OptimizerConfig {
            mode: match o.mode {
                ModeConfig::Global => UpdateMode::Global,
                ModeConfig::Local => UpdateMode::Local,
            },
            max_iters: o.max_iters,
            target_infidelity: o.target_infidelity,
            epsilon0: o.epsilon0,
            line_search: o.line_search,
            amplitude_bound: o.amplitude_bound,
            seed: o.seed,
            init: self.init(),
            gradient: match o.gradient {
                GradientConfig::Exact => GradientForm::Exact,
                GradientConfig::FirstOrder => GradientForm::FirstOrder,
            },
            direction: match o.direction {
                DirectionConfig::Gradient => SearchDirection::Gradient,
                DirectionConfig::Lbfgs => SearchDirection::Lbfgs(o.lbfgs_memory),
            },
            schedule: StepSchedule {
                up: o.step_up,
                down: o.step_down,
            },
            stall_limit: o.stall_limit,
            max_stall_cycles: o.max_stall_cycles,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ELECTRODE: &str = r#"
        [model]
        kind = "electrode"
        qubits = 2
        rabi = 10.0

        [target]
        gate = "cnot"

        [control]
        t_final = 1.0
        segments = 10
    "#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = JobConfig::from_toml(ELECTRODE).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.optimizer.restarts, 1);
        assert_eq!(cfg.optimizer_config(), OptimizerConfig::default());
        assert_eq!(cfg.coupling_spec(), CouplingSpec::heisenberg_chain(1.0));
        assert_eq!(cfg.system().unwrap().n_controls(), 2);
        assert_eq!(cfg.target().unwrap().label(), "cnot");
    }

    #[test]
    fn snapshot_round_trips() {
        let cfg = JobConfig::from_toml(ELECTRODE).unwrap();
        let back = JobConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn errors_name_the_field() {
        let bad = ELECTRODE.replace("qubits = 2", "qubits = 2\nomegas = [1.0]");
        let e = JobConfig::from_toml(&bad).unwrap().validate().unwrap_err();
        assert!(e.to_string().contains("model.omegas"), "{e}");

        let bad = ELECTRODE.replace("rabi = 10.0", "");
        let e = JobConfig::from_toml(&bad).unwrap().validate().unwrap_err();
        assert!(e.to_string().contains("model.rabi"), "{e}");

        let bad = ELECTRODE.replace("segments = 10", "segments = 10\nsegmnets = 3");
        let e = JobConfig::from_toml(&bad).unwrap_err();
        assert!(e.to_string().contains("segmnets"), "{e}");

        let bad = ELECTRODE.replace("gate = \"cnot\"", "gate = \"toffoli-like\"");
        let e = JobConfig::from_toml(&bad).unwrap().target().unwrap_err();
        assert!(e.to_string().contains("target.gate"), "{e}");

        let bad = format!("{ELECTRODE}\n[optimizer]\nepsilon0 = -1.0\n");
        let e = JobConfig::from_toml(&bad).unwrap().validate().unwrap_err();
        assert!(e.to_string().contains("optimizer"), "{e}");
    }

    #[test]
    fn qubit_count_follows_omegas() {
        let text = r#"
            [model]
            kind = "global-field"
            omegas = [10.0, 12.0, 8.0]
            [target]
            gate = "toffoli-like"
            [control]
            t_final = 5.0
            segments = 500
        "#;
        let cfg = JobConfig::from_toml(text).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.n_qubits(), 3);
        assert_eq!(cfg.coupling_spec(), CouplingSpec::ising_chain(1.0));
    }
}

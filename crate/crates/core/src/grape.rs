//! Monotonic gradient-ascent optimisation of piecewise-constant controls.
//!
//! For a segment `k` and control `m` the ascent direction is
//!
//! ```text
//! g_{m,k} = Im Tr[ U_T^dag B_k H_m U_k F_{k-1} ]
//! ```
//!
//! (first-order form) or its exact counterpart obtained from the spectral
//! derivative of `exp(-i Δt_k H(u_k))`. Either way `∂F/∂u_{m,k} ≈ Δt_k g_{m,k} / N`.
//!
//! Two update strategies are supported. [`UpdateMode::Global`] (GRAPE)
//! updates every segment at once from one full propagation.
//! [`UpdateMode::Local`] sweeps through the segments in time order and updates
//! one segment at a time; a trial step there costs one matrix exponential and
//! one trace. Both accept a step only if it raises the fidelity, so the
//! fidelity trace is non-decreasing.

use std::time::Instant;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gates::{fidelity_unchecked, GateTarget};
use crate::models::ControlSystem;
use crate::operator::{CMatrix, HermitianEigen};
use crate::propagation::{
    check_arity, propagate, segment_eigen, PiecewiseControl, PropagationCache,
};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateMode {
    Global,
    Local,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientForm {
    /// Exact derivative of the segment exponential.
    Exact,
    /// `H_m` inserted at the segment boundary; exact only as `Δt_k → 0`.
    FirstOrder,
}

/// Direction used by the global update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchDirection {
    /// The ascent direction itself.
    Gradient,
    /// Limited-memory BFGS applied to the ascent direction, keeping the
    /// given number of step pairs. Global mode only.
    Lbfgs(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialControl<T> {
    Zero,
    Constant(T),
    /// Independent uniform draws from `[-a, a]`.
    UniformRandom(T),
}

/// Trial multipliers `ε_ref · 2^j` for `j = up, up-1, …, -down`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepSchedule {
    pub up: i32,
    pub down: i32,
}

impl Default for StepSchedule {
    fn default() -> Self {
        StepSchedule { up: 1, down: 30 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig<T> {
    pub mode: UpdateMode,
    pub max_iters: usize,
    /// Stop once `1 - F` drops to this value.
    pub target_infidelity: T,
    /// Initial step multiplier ε.
    pub epsilon0: T,
    /// With line search on, ε adapts between iterations and larger trial
    /// steps are attempted; off, every iteration starts again from `epsilon0`
    /// and only backtracks.
    pub line_search: bool,
    pub amplitude_bound: Option<T>,
    pub seed: u64,
    pub init: InitialControl<T>,
    pub gradient: GradientForm,
    pub direction: SearchDirection,
    pub schedule: StepSchedule,
    /// Consecutive stalled iterations before ε is re-randomised.
    pub stall_limit: usize,
    /// Re-randomisation cycles before giving up.
    pub max_stall_cycles: usize,
}

impl<T: Real> Default for OptimizerConfig<T> {
    fn default() -> Self {
        OptimizerConfig {
            mode: UpdateMode::Global,
            max_iters: 2000,
            target_infidelity: T::lit(1e-4),
            epsilon0: T::one(),
            line_search: true,
            amplitude_bound: None,
            seed: 0,
            init: InitialControl::UniformRandom(T::one()),
            gradient: GradientForm::Exact,
            direction: SearchDirection::Gradient,
            schedule: StepSchedule::default(),
            stall_limit: 5,
            max_stall_cycles: 3,
        }
    }
}

impl<T: Real> OptimizerConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon0 > T::zero()) || !self.epsilon0.is_finite() {
            return Err(Error::InvalidArgument("epsilon0 must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument(
                "max_iters must be at least 1".into(),
            ));
        }
        if !(self.target_infidelity > T::zero() && self.target_infidelity <= T::one()) {
            return Err(Error::InvalidArgument(
                "target_infidelity must lie in (0, 1]".into(),
            ));
        }
        if let Some(b) = self.amplitude_bound {
            if !(b >= T::zero()) {
                return Err(Error::InvalidArgument(
                    "amplitude bound must be non-negative".into(),
                ));
            }
        }
        if let SearchDirection::Lbfgs(0) = self.direction {
            return Err(Error::InvalidArgument(
                "L-BFGS memory must be at least 1".into(),
            ));
        }
        if self.direction != SearchDirection::Gradient && self.mode == UpdateMode::Local {
            return Err(Error::InvalidArgument(
                "local mode only supports the gradient direction".into(),
            ));
        }
        if self.schedule.up < -self.schedule.down {
            return Err(Error::InvalidArgument("empty step schedule".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct OptimizationResult<T> {
    pub control: PiecewiseControl<T>,
    pub fidelity: T,
    /// Fidelity before the first update and after every iteration.
    pub trace: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time: f64,
    pub stall_cycles: usize,
}

impl<T: Real> OptimizationResult<T> {
    pub fn infidelity(&self) -> T {
        T::one() - self.fidelity
    }
}

/// Initial control on the uniform grid, drawn from the run's own RNG stream.
pub fn initial_control<T: Real>(
    n_controls: usize,
    t_final: T,
    n_segments: usize,
    init: InitialControl<T>,
    seed: u64,
    run_index: u64,
) -> Result<PiecewiseControl<T>> {
    let mut control = PiecewiseControl::uniform(t_final, n_segments, n_controls)?;
    let values: Vec<T> = match init {
        InitialControl::Zero => vec![T::zero(); n_segments * n_controls],
        InitialControl::Constant(c) => vec![c; n_segments * n_controls],
        InitialControl::UniformRandom(a) => {
            let mut rng = run_rng(seed, run_index);
            (0..n_segments * n_controls)
                .map(|_| {
                    let x: f64 = rng.gen_range(-1.0..=1.0);
                    a * T::lit(x)
                })
                .collect()
        }
    };
    control.set_values(values);
    Ok(control)
}

/// RNG stream for restart `run_index` of a run seeded with `seed`.
pub fn run_rng(seed: u64, run_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run_index);
    rng
}

/// Clamps every amplitude into `[-u_max, u_max]` and records the bound.
pub fn clip_amplitudes<T: Real>(
    control: &PiecewiseControl<T>,
    u_max: T,
) -> Result<PiecewiseControl<T>> {
    if !(u_max >= T::zero()) {
        return Err(Error::InvalidArgument(
            "amplitude bound must be non-negative".into(),
        ));
    }
    Ok(control.clone().with_bound(Some(u_max)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchOutcome<T> {
    /// Accepted multiplier, zero on stall.
    pub epsilon: T,
    /// Fidelity after the accepted step (the current fidelity on stall).
    pub fidelity: T,
    pub stalled: bool,
    pub trials: usize,
}

/// Returns the largest `ε = ε_ref 2^j` of the schedule whose trial fidelity
/// exceeds `current`. `trial(ε)` evaluates the fidelity after a step of size ε
/// along the (already fixed) direction.
pub fn line_search_step<T: Real, F: FnMut(T) -> T>(
    direction: &[T],
    eps_ref: T,
    current: T,
    schedule: StepSchedule,
    mut trial: F,
) -> LineSearchOutcome<T> {
    let stalled = LineSearchOutcome {
        epsilon: T::zero(),
        fidelity: current,
        stalled: true,
        trials: 0,
    };
    if direction.iter().all(|g| *g == T::zero()) {
        return stalled;
    }
    let mut trials = 0;
    let mut j = schedule.up;
    while j >= -schedule.down {
        let eps = eps_ref * T::two().powi(j);
        let f = trial(eps);
        trials += 1;
        if f > current {
            return LineSearchOutcome {
                epsilon: eps,
                fidelity: f,
                stalled: false,
                trials,
            };
        }
        j -= 1;
    }
    LineSearchOutcome { trials, ..stalled }
}

/// Per-segment helper: `Im Σ_ab Y_ba Φ_ab H̃_ab` for every control, where `Y`
/// and `H̃_m` are expressed in the eigenbasis of `H(u_k)`.
fn segment_direction<T: Real>(
    eig: &HermitianEigen<T>,
    dt: T,
    x: &CMatrix<T>,
    controls: &[CMatrix<T>],
    form: GradientForm,
    out: &mut [T],
) {
    let n = eig.values.len();
    let y = eig.to_eigenbasis(x);
    let lam = &eig.values;
    let mut phi = vec![Complex::new(T::zero(), T::zero()); n * n];
    for a in 0..n {
        for b in 0..n {
            phi[a * n + b] = match form {
                GradientForm::Exact => {
                    let mean = (lam[a] + lam[b]) * T::half();
                    let half_gap = (lam[a] - lam[b]) * dt * T::half();
                    let sinc = if half_gap.abs() < T::lit(1e-8) {
                        T::one() - half_gap * half_gap / T::lit(6.0)
                    } else {
                        half_gap.sin() / half_gap
                    };
                    Complex::from_polar(sinc, -(dt * mean))
                }
                GradientForm::FirstOrder => Complex::from_polar(T::one(), -(dt * lam[b])),
            };
        }
    }
    for (m, hm) in controls.iter().enumerate() {
        let ht = eig.to_eigenbasis(hm);
        let mut acc = Complex::new(T::zero(), T::zero());
        for a in 0..n {
            for b in 0..n {
                acc += y[(b, a)] * phi[a * n + b] * ht[(a, b)];
            }
        }
        out[m] = acc.im;
    }
}

/// Ascent direction `g_{m,k}` (segment-major, `K × M`) at the control that
/// produced `cache`. Multiply by `Δt_k / N` to obtain `∂F/∂u_{m,k}`.
pub fn update_direction<T: Real>(
    cache: &PropagationCache<T>,
    control: &PiecewiseControl<T>,
    system: &ControlSystem<T>,
    target: &GateTarget<T>,
    form: GradientForm,
) -> Result<Vec<T>> {
    check_arity(system, control)?;
    if cache.n_segments() != control.n_segments() || target.dim() != system.dim() {
        return Err(Error::InvalidArgument(
            "cache, control and target are inconsistent".into(),
        ));
    }
    let m = system.n_controls();
    let mut g = vec![T::zero(); control.n_segments() * m];
    let ut_dag = target.matrix().adjoint();
    for k in 0..control.n_segments() {
        // X = F_{k-1} U_T^dag B_k so that Tr[U_T^dag B_k dU F_{k-1}] = Tr[X dU]
        let x = cache.before(k).matmul(&ut_dag.matmul(&cache.backward[k]));
        segment_direction(
            &cache.spectra[k],
            control.dt(k),
            &x,
            system.controls(),
            form,
            &mut g[k * m..(k + 1) * m],
        );
    }
    Ok(g)
}

/// `∂F/∂u_{m,k}` for the current control.
pub fn fidelity_gradient<T: Real>(
    system: &ControlSystem<T>,
    control: &PiecewiseControl<T>,
    target: &GateTarget<T>,
    form: GradientForm,
) -> Result<Vec<T>> {
    let cache = propagate(system, control)?;
    let mut g = update_direction(&cache, control, system, target, form)?;
    let n = T::from_usize(system.dim()).expect("fits");
    let m = system.n_controls();
    for (i, v) in g.iter_mut().enumerate() {
        *v = *v * control.dt(i / m) / n;
    }
    Ok(g)
}

struct Trial<T> {
    control: PiecewiseControl<T>,
    spectra: Vec<HermitianEigen<T>>,
    props: Vec<CMatrix<T>>,
    fidelity: T,
}

fn evaluate<T: Real>(
    system: &ControlSystem<T>,
    control: PiecewiseControl<T>,
    target: &CMatrix<T>,
) -> Trial<T> {
    let k = control.n_segments();
    let mut spectra = Vec::with_capacity(k);
    let mut props = Vec::with_capacity(k);
    let mut total = CMatrix::identity(system.dim());
    for s in 0..k {
        let eig = segment_eigen(system, control.amplitudes(s));
        let u = eig.propagator(control.dt(s));
        total = u.matmul(&total);
        spectra.push(eig);
        props.push(u);
    }
    let fidelity = fidelity_unchecked(target, &total);
    Trial {
        control,
        spectra,
        props,
        fidelity,
    }
}

fn cache_from_trial<T: Real>(trial: &Trial<T>, dim: usize) -> PropagationCache<T> {
    let k = trial.props.len();
    let mut forward: Vec<CMatrix<T>> = Vec::with_capacity(k);
    for s in 0..k {
        let next = match forward.last() {
            Some(prev) => trial.props[s].matmul(prev),
            None => trial.props[s].clone(),
        };
        forward.push(next);
    }
    let mut backward = vec![CMatrix::identity(dim); k];
    for s in (0..k.saturating_sub(1)).rev() {
        backward[s] = backward[s + 1].matmul(&trial.props[s + 1]);
    }
    let total = forward
        .last()
        .cloned()
        .unwrap_or_else(|| CMatrix::identity(dim));
    PropagationCache {
        segment_props: trial.props.clone(),
        forward,
        backward,
        total,
        spectra: trial.spectra.clone(),
    }
}

fn stepped<T: Real>(base: &[T], dir: &[T], eps: T, bound: Option<T>) -> Vec<T> {
    base.iter()
        .zip(dir)
        .map(|(u, g)| {
            let v = *u + eps * *g;
            match bound {
                Some(b) => v.max(-b).min(b),
                None => v,
            }
        })
        .collect()
}

struct StallTracker {
    consecutive: usize,
    cycles: usize,
}

/// Runs the optimiser from `control0`.
pub fn optimize<T: Real>(
    system: &ControlSystem<T>,
    target: &GateTarget<T>,
    control0: &PiecewiseControl<T>,
    cfg: &OptimizerConfig<T>,
) -> Result<OptimizationResult<T>> {
    cfg.validate()?;
    check_arity(system, control0)?;
    if target.dim() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            found: target.dim(),
        });
    }
    let mut control = control0.clone();
    if let Some(b) = cfg.amplitude_bound {
        if !control0.values().iter().all(|u| u.abs() <= b) {
            return Err(Error::InvalidArgument(
                "initial control violates the amplitude bound".into(),
            ));
        }
        control = control.with_bound(Some(b));
    }
    let started = Instant::now();
    let mut rng = run_rng(cfg.seed, u64::MAX);
    let (control, trace, iterations, converged, stall_cycles) = match cfg.mode {
        UpdateMode::Global => run_global(system, target, control, cfg, &mut rng)?,
        UpdateMode::Local => run_local(system, target, control, cfg, &mut rng)?,
    };
    let fidelity = fidelity_unchecked(
        target.matrix(),
        &crate::propagation::total_propagator(system, &control)?,
    );
    Ok(OptimizationResult {
        control,
        fidelity,
        trace,
        iterations,
        converged,
        wall_time: started.elapsed().as_secs_f64(),
        stall_cycles,
    })
}

type RunOutput<T> = (PiecewiseControl<T>, Vec<T>, usize, bool, usize);

fn rerandomised_epsilon<T: Real>(cfg: &OptimizerConfig<T>, rng: &mut ChaCha8Rng) -> T {
    let e: f64 = rng.gen_range(-4.0..=4.0);
    cfg.epsilon0 * T::lit(2f64.powf(e))
}

impl StallTracker {
    /// Returns true once the run should give up.
    fn record<T: Real>(
        &mut self,
        stalled: bool,
        cfg: &OptimizerConfig<T>,
        eps: &mut [T],
        rng: &mut ChaCha8Rng,
    ) -> bool {
        if !stalled {
            self.consecutive = 0;
            return false;
        }
        self.consecutive += 1;
        if self.consecutive >= cfg.stall_limit {
            self.consecutive = 0;
            self.cycles += 1;
            if self.cycles >= cfg.max_stall_cycles {
                return true;
            }
            for e in eps.iter_mut() {
                *e = rerandomised_epsilon(cfg, rng);
            }
        }
        false
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

/// L-BFGS two-loop recursion for minimising `-F`, fed with ascent directions.
struct QuasiNewton<T> {
    memory: usize,
    /// `(s, y, 1/(s·y))` with `s = Δu` and `y = -Δg`.
    pairs: Vec<(Vec<T>, Vec<T>, T)>,
    last: Option<(Vec<T>, Vec<T>)>,
}

impl<T: Real> QuasiNewton<T> {
    fn new(memory: usize) -> Self {
        QuasiNewton {
            memory,
            pairs: Vec::new(),
            last: None,
        }
    }

    fn direction(&mut self, point: &[T], grad: Vec<T>) -> Vec<T> {
        if let Some((x0, g0)) = self.last.take() {
            let s: Vec<T> = point.iter().zip(&x0).map(|(a, b)| *a - *b).collect();
            let y: Vec<T> = g0.iter().zip(&grad).map(|(a, b)| *a - *b).collect();
            let sy = dot(&s, &y);
            // curvature condition; skipping the pair keeps the update positive definite
            if sy > T::zero() {
                if self.pairs.len() == self.memory {
                    self.pairs.remove(0);
                }
                self.pairs.push((s, y, T::one() / sy));
            }
        }
        self.last = Some((point.to_vec(), grad.clone()));
        let mut q = grad.clone();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = *rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * *yi;
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = self.pairs.last() {
            let gamma = dot(s, y) / dot(y, y);
            for qi in q.iter_mut() {
                *qi *= gamma;
            }
        }
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.iter().rev()) {
            let b = *rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (*a - b) * *si;
            }
        }
        if dot(&q, &grad) > T::zero() {
            q
        } else {
            self.pairs.clear();
            grad
        }
    }
}

fn run_global<T: Real>(
    system: &ControlSystem<T>,
    target: &GateTarget<T>,
    control: PiecewiseControl<T>,
    cfg: &OptimizerConfig<T>,
    rng: &mut ChaCha8Rng,
) -> Result<RunOutput<T>> {
    let dim = system.dim();
    let tm = target.matrix();
    let mut current = evaluate(system, control, tm);
    let mut trace = vec![current.fidelity];
    if !current.fidelity.is_finite() {
        return Err(Error::NonFinite { iteration: 0 });
    }
    let mut eps = [cfg.epsilon0];
    let mut stalls = StallTracker {
        consecutive: 0,
        cycles: 0,
    };
    let mut iterations = 0;
    let bound = cfg.amplitude_bound;
    let mut quasi = match cfg.direction {
        SearchDirection::Gradient => None,
        SearchDirection::Lbfgs(memory) => Some(QuasiNewton::new(memory)),
    };
    while T::one() - current.fidelity > cfg.target_infidelity && iterations < cfg.max_iters {
        iterations += 1;
        let cache = cache_from_trial(&current, dim);
        let grad = update_direction(&cache, &current.control, system, target, cfg.gradient)?;
        let dir = match quasi.as_mut() {
            Some(q) => q.direction(current.control.values(), grad),
            None => grad,
        };
        let base = current.control.values().to_vec();
        let mut best: Option<Trial<T>> = None;
        let eps_ref = if cfg.line_search {
            eps[0]
        } else {
            cfg.epsilon0
        };
        let schedule = if cfg.line_search {
            cfg.schedule
        } else {
            StepSchedule {
                up: 0,
                down: cfg.schedule.down,
            }
        };
        let outcome = line_search_step(&dir, eps_ref, current.fidelity, schedule, |e| {
            let mut c = current.control.clone();
            c.set_values(stepped(&base, &dir, e, bound));
            let t = evaluate(system, c, tm);
            let f = t.fidelity;
            if best.as_ref().is_none_or(|b| f > b.fidelity) {
                best = Some(t);
            }
            f
        });
        if !outcome.stalled {
            let accepted = best.take().expect("accepted trial retained");
            debug_assert!(accepted.fidelity == outcome.fidelity);
            current = accepted;
            if cfg.line_search {
                eps[0] = outcome.epsilon;
            }
        }
        if !current.fidelity.is_finite() {
            return Err(Error::NonFinite {
                iteration: iterations,
            });
        }
        trace.push(current.fidelity);
        if stalls.record(outcome.stalled, cfg, &mut eps, rng) {
            break;
        }
    }
    let converged = T::one() - current.fidelity <= cfg.target_infidelity;
    Ok((current.control, trace, iterations, converged, stalls.cycles))
}

fn run_local<T: Real>(
    system: &ControlSystem<T>,
    target: &GateTarget<T>,
    control: PiecewiseControl<T>,
    cfg: &OptimizerConfig<T>,
    rng: &mut ChaCha8Rng,
) -> Result<RunOutput<T>> {
    let dim = system.dim();
    let n = T::from_usize(dim).expect("fits");
    let m = system.n_controls();
    let tm = target.matrix();
    let ut_dag = tm.adjoint();
    let mut state = evaluate(system, control, tm);
    let k_total = state.control.n_segments();
    let mut fidelity = state.fidelity;
    let mut trace = vec![fidelity];
    if !fidelity.is_finite() {
        return Err(Error::NonFinite { iteration: 0 });
    }
    let mut eps = vec![cfg.epsilon0; k_total.max(1)];
    let mut stalls = StallTracker {
        consecutive: 0,
        cycles: 0,
    };
    let mut iterations = 0;
    let bound = cfg.amplitude_bound;
    let mut dir = vec![T::zero(); m];
    let schedule = if cfg.line_search {
        cfg.schedule
    } else {
        StepSchedule {
            up: 0,
            down: cfg.schedule.down,
        }
    };
    'sweeps: while T::one() - fidelity > cfg.target_infidelity && iterations < cfg.max_iters {
        iterations += 1;
        // backward products from the amplitudes at the start of the sweep;
        // segments after k are untouched when segment k is updated
        let mut backward = vec![CMatrix::identity(dim); k_total];
        for s in (0..k_total.saturating_sub(1)).rev() {
            backward[s] = backward[s + 1].matmul(&state.props[s + 1]);
        }
        let mut forward = CMatrix::identity(dim);
        let mut any_step = false;
        for k in 0..k_total {
            let x = forward.matmul(&ut_dag.matmul(&backward[k]));
            let dt = state.control.dt(k);
            segment_direction(
                &state.spectra[k],
                dt,
                &x,
                system.controls(),
                cfg.gradient,
                &mut dir,
            );
            let base = state.control.amplitudes(k).to_vec();
            let mut best: Option<(T, HermitianEigen<T>, CMatrix<T>, Vec<T>)> = None;
            let eps_ref = if cfg.line_search {
                eps[k]
            } else {
                cfg.epsilon0
            };
            let outcome = line_search_step(&dir, eps_ref, fidelity, schedule, |e| {
                let amps = stepped(&base, &dir, e, bound);
                let eig = segment_eigen(system, &amps);
                let u = eig.propagator(dt);
                let f = x.trace_of_product(&u).re / n;
                if best.as_ref().is_none_or(|b| f > b.0) {
                    best = Some((f, eig, u, amps));
                }
                f
            });
            if !outcome.stalled {
                let (f, eig, u, amps) = best.take().expect("accepted trial retained");
                state.control.set_amplitudes(k, &amps);
                state.spectra[k] = eig;
                state.props[k] = u;
                fidelity = f;
                any_step = true;
                if cfg.line_search {
                    eps[k] = outcome.epsilon;
                }
            }
            if !fidelity.is_finite() {
                return Err(Error::NonFinite {
                    iteration: iterations,
                });
            }
            forward = state.props[k].matmul(&forward);
            if T::one() - fidelity <= cfg.target_infidelity {
                trace.push(fidelity);
                break 'sweeps;
            }
        }
        // re-anchor on the exact product to avoid drift of the running value
        let exact = fidelity_unchecked(tm, &forward);
        if exact > fidelity {
            fidelity = exact;
        }
        trace.push(fidelity);
        if stalls.record(!any_step, cfg, &mut eps, rng) {
            break;
        }
    }
    let converged = T::one() - fidelity <= cfg.target_infidelity;
    Ok((state.control, trace, iterations, converged, stalls.cycles))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{cnot, gate_by_name};
    use crate::models::{build_electrode_model, build_global_field_model, CouplingSpec};
    use crate::operator::Pauli;

    #[test]
    fn traceless_direction_vanishes() {
        let sys = ControlSystem::new(
            1,
            CMatrix::zeros(2),
            vec![Pauli::Z.matrix()],
            vec!["Z".into()],
        )
        .unwrap();
        let target = gate_by_name::<f64>("identity", 1).unwrap();
        let control = PiecewiseControl::uniform(1.0, 1, 1).unwrap();
        let cache = propagate(&sys, &control).unwrap();
        for form in [GradientForm::Exact, GradientForm::FirstOrder] {
            let g = update_direction(&cache, &control, &sys, &target, form).unwrap();
            assert_eq!(g, vec![0.0]);
        }
    }

    #[test]
    fn zero_direction_stalls() {
        let out = line_search_step(&[0.0, 0.0], 1.0, 0.5, StepSchedule::default(), |_| 1.0);
        assert!(out.stalled);
        assert_eq!(out.epsilon, 0.0);
        assert_eq!(out.trials, 0);
    }

    #[test]
    fn quadratic_line_search_moves_towards_optimum() {
        let optimum = 0.3;
        let f = |u: f64| 1.0 - (u - optimum) * (u - optimum);
        for u0 in [-4.0, -0.5, 0.29, 1.0, 25.0] {
            let g = -2.0 * (u0 - optimum);
            for eps_ref in [1e-3, 1.0, 100.0] {
                let out = line_search_step(&[g], eps_ref, f(u0), StepSchedule::default(), |e| {
                    f(u0 + e * g)
                });
                assert!(!out.stalled);
                let u1 = u0 + out.epsilon * g;
                assert!((u1 - optimum).abs() < (u0 - optimum).abs());
                assert!(out.fidelity > f(u0));
            }
        }
    }

    #[test]
    fn clip_examples() {
        let c = PiecewiseControl::<f64>::new(vec![0.0, 1.0], vec![5.0, -7.0], 2, None).unwrap();
        let clipped = clip_amplitudes(&c, 3.0).unwrap();
        assert_eq!(clipped.values(), &[3.0, -3.0]);
        let within = clip_amplitudes(&c, 10.0).unwrap();
        assert_eq!(within.values(), c.values());
        assert!(clip_amplitudes(&c, -1.0).is_err());
    }

    #[test]
    fn identity_target_converges_immediately() {
        let sys = ControlSystem::new(
            1,
            CMatrix::zeros(2),
            vec![Pauli::X.matrix()],
            vec!["X".into()],
        )
        .unwrap();
        let target = gate_by_name::<f64>("identity", 1).unwrap();
        let c0 = PiecewiseControl::uniform(1.0, 4, 1).unwrap();
        for mode in [UpdateMode::Global, UpdateMode::Local] {
            let cfg = OptimizerConfig {
                mode,
                ..OptimizerConfig::default()
            };
            let r = optimize(&sys, &target, &c0, &cfg).unwrap();
            assert!(r.converged);
            assert_eq!(r.iterations, 0);
            assert_eq!(r.fidelity, 1.0);
            assert_eq!(r.trace, vec![1.0]);
        }
    }

    #[test]
    fn config_validation() {
        let bad = OptimizerConfig::<f64> {
            epsilon0: 0.0,
            ..OptimizerConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = OptimizerConfig::<f64> {
            max_iters: 0,
            ..OptimizerConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = OptimizerConfig::<f64> {
            target_infidelity: 0.0,
            ..OptimizerConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = OptimizerConfig::<f64> {
            direction: SearchDirection::Lbfgs(0),
            ..OptimizerConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = OptimizerConfig::<f64> {
            mode: UpdateMode::Local,
            direction: SearchDirection::Lbfgs(5),
            ..OptimizerConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn quasi_newton_minimises_a_quadratic() {
        // F = -½ uᵀAu + bᵀu has ascent direction b - Au; exact line steps reach
        // the optimum of a 2D quadratic in at most a few iterations
        let a = [[3.0, 1.0], [1.0, 2.0]];
        let b = [1.0, -1.0];
        let grad = |u: &[f64]| {
            vec![
                b[0] - a[0][0] * u[0] - a[0][1] * u[1],
                b[1] - a[1][0] * u[0] - a[1][1] * u[1],
            ]
        };
        let mut q = QuasiNewton::new(5);
        let mut u = vec![0.0, 0.0];
        for _ in 0..6 {
            let g = grad(&u);
            let d = q.direction(&u, g.clone());
            assert!(dot(&d, &g) >= 0.0);
            // exact step along d for a quadratic
            let ad = [
                a[0][0] * d[0] + a[0][1] * d[1],
                a[1][0] * d[0] + a[1][1] * d[1],
            ];
            let denom = dot(&d, &ad);
            if denom == 0.0 {
                break;
            }
            let t = dot(&d, &g) / denom;
            u = vec![u[0] + t * d[0], u[1] + t * d[1]];
        }
        let g = grad(&u);
        assert!(g.iter().all(|x| x.abs() < 1e-10), "{g:?}");
    }

    #[test]
    fn lbfgs_run_is_monotone_and_converges() {
        let sys =
            build_electrode_model(10.0, &[1.0, 1.0], &CouplingSpec::heisenberg_chain(1.0)).unwrap();
        let c0 = initial_control(2, 1.0, 10, InitialControl::UniformRandom(1.0), 0, 0).unwrap();
        let cfg = OptimizerConfig {
            direction: SearchDirection::Lbfgs(10),
            ..OptimizerConfig::default()
        };
        let r = optimize(&sys, &cnot(), &c0, &cfg).unwrap();
        assert!(r.converged);
        assert!(r.trace.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }

    fn max_gap(t_final: f64) -> f64 {
        let sys =
            build_global_field_model(&[10.0, 12.0], &[1.0, 1.0], &CouplingSpec::ising_chain(1.0))
                .unwrap();
        let target = cnot::<f64>();
        let c = initial_control(2, t_final, 4, InitialControl::UniformRandom(1.0), 7, 0).unwrap();
        let cache = propagate(&sys, &c).unwrap();
        let exact = update_direction(&cache, &c, &sys, &target, GradientForm::Exact).unwrap();
        let first = update_direction(&cache, &c, &sys, &target, GradientForm::FirstOrder).unwrap();
        exact
            .iter()
            .zip(&first)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn first_order_gap_is_linear_in_segment_length() {
        let coarse = max_gap(1e-2);
        let fine = max_gap(1e-3);
        assert!(coarse > 0.0);
        let ratio = coarse / fine;
        assert!((ratio - 10.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn exact_gradient_matches_central_differences() {
        let sys =
            build_electrode_model(5.0, &[1.0, 0.8], &CouplingSpec::heisenberg_chain(1.0)).unwrap();
        let target = cnot::<f64>();
        let c = initial_control(2, 2.0, 8, InitialControl::UniformRandom(2.0), 11, 0).unwrap();
        let g = fidelity_gradient(&sys, &c, &target, GradientForm::Exact).unwrap();
        let h = 1e-6;
        let f = |v: &[f64]| {
            let mut cc = c.clone();
            cc.set_values(v.to_vec());
            crate::propagation::evolve_fidelity(&sys, &cc, &target).unwrap()
        };
        for i in 0..g.len() {
            let mut plus = c.values().to_vec();
            let mut minus = plus.clone();
            plus[i] += h;
            minus[i] -= h;
            let fd = (f(&plus) - f(&minus)) / (2.0 * h);
            assert!(
                (fd - g[i]).abs() <= 1e-4 * g[i].abs().max(1e-3),
                "{i}: {fd} vs {}",
                g[i]
            );
        }
    }

    #[test]
    fn bounded_run_respects_bound() {
        let sys =
            build_electrode_model(10.0, &[1.0, 1.0], &CouplingSpec::heisenberg_chain(1.0)).unwrap();
        let target = gate_by_name::<f64>("had1", 2).unwrap();
        let c0 = initial_control(2, 1.0, 10, InitialControl::UniformRandom(1.0), 3, 0).unwrap();
        for mode in [UpdateMode::Global, UpdateMode::Local] {
            let cfg = OptimizerConfig {
                mode,
                max_iters: 40,
                amplitude_bound: Some(2.0),
                ..OptimizerConfig::default()
            };
            let r = optimize(&sys, &target, &c0, &cfg).unwrap();
            assert!(r.control.values().iter().all(|u| u.abs() <= 2.0));
            assert!(r.trace.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        }
    }
}

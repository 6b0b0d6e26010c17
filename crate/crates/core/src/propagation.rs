//! Piecewise-constant controls and their time evolution.
//!
//! With `u(t) = u_k` on `[t_{k-1}, t_k)` the propagator is exactly
//! `U = U_K ⋯ U_1`, `U_k = exp(-i Δt_k H(u_k))`. [`PropagationCache`] keeps
//! the forward products `F_k = U_k ⋯ U_1` and backward products
//! `B_k = U_K ⋯ U_{k+1}` so that gradients cost O(K) matrix products.

use crate::error::{Error, Result};
use crate::gates::{fidelity_unchecked, GateTarget};
use crate::models::ControlSystem;
use crate::operator::{CMatrix, HermitianEigen};
use crate::scalar::Real;

/// `K` segments with boundaries `t_0 < t_1 < … < t_K` and `M` amplitudes per
/// segment, stored segment-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseControl<T> {
    times: Vec<T>,
    values: Vec<T>,
    n_controls: usize,
    bound: Option<T>,
}

impl<T: Real> PiecewiseControl<T> {
    /// Validating constructor. `times` holds the `K + 1` segment boundaries.
    pub fn new(times: Vec<T>, values: Vec<T>, n_controls: usize, bound: Option<T>) -> Result<Self> {
        if n_controls == 0 {
            return Err(Error::InvalidArgument(
                "need at least one control channel".into(),
            ));
        }
        if times.is_empty() {
            return Err(Error::InvalidArgument(
                "time grid needs a start point".into(),
            ));
        }
        let k = times.len() - 1;
        if values.len() != k * n_controls {
            return Err(Error::InvalidArgument(format!(
                "{} amplitudes for {k} segments x {n_controls} controls",
                values.len()
            )));
        }
        if times.iter().any(|t| !t.is_finite()) || values.iter().any(|u| !u.is_finite()) {
            return Err(Error::InvalidArgument(
                "time grid and amplitudes must be finite".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(
                "segment durations must be positive".into(),
            ));
        }
        if let Some(b) = bound {
            if !(b >= T::zero()) {
                return Err(Error::InvalidArgument(
                    "amplitude bound must be non-negative".into(),
                ));
            }
            if values.iter().any(|u| u.abs() > b) {
                return Err(Error::InvalidArgument(
                    "amplitude exceeds the configured bound".into(),
                ));
            }
        }
        Ok(PiecewiseControl {
            times,
            values,
            n_controls,
            bound,
        })
    }

    /// All-zero control on the uniform grid `t_k = k t_final / K`.
    pub fn uniform(t_final: T, n_segments: usize, n_controls: usize) -> Result<Self> {
        if !(t_final > T::zero()) && n_segments > 0 {
            return Err(Error::InvalidArgument("final time must be positive".into()));
        }
        let k = T::from_usize(n_segments).expect("segment count fits");
        let times = (0..=n_segments)
            .map(|i| t_final * T::from_usize(i).expect("index fits") / k)
            .collect();
        Self::new(
            times,
            vec![T::zero(); n_segments * n_controls],
            n_controls,
            None,
        )
    }

    /// Uniform grid with explicit per-segment amplitudes.
    pub fn uniform_from_rows(t_final: T, rows: &[Vec<T>]) -> Result<Self> {
        let m = rows.first().map(|r| r.len()).unwrap_or(0);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidArgument("ragged amplitude rows".into()));
        }
        let mut c = Self::uniform(t_final, rows.len(), m)?;
        c.values = rows.iter().flatten().copied().collect();
        Self::new(c.times, c.values, m, None)
    }

    /// Empty control (no segments); propagates to the identity.
    pub fn empty(n_controls: usize) -> Self {
        PiecewiseControl {
            times: vec![T::zero()],
            values: Vec::new(),
            n_controls,
            bound: None,
        }
    }

    pub fn n_segments(&self) -> usize {
        self.times.len() - 1
    }

    pub fn n_controls(&self) -> usize {
        self.n_controls
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn t_final(&self) -> T {
        *self.times.last().expect("non-empty grid") - self.times[0]
    }

    pub fn dt(&self, k: usize) -> T {
        self.times[k + 1] - self.times[k]
    }

    pub fn dts(&self) -> Vec<T> {
        self.times.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn amplitudes(&self, k: usize) -> &[T] {
        &self.values[k * self.n_controls..(k + 1) * self.n_controls]
    }

    pub fn amplitude(&self, k: usize, m: usize) -> T {
        self.values[k * self.n_controls + m]
    }

    /// Time series of control channel `m`.
    pub fn channel(&self, m: usize) -> Vec<T> {
        (0..self.n_segments())
            .map(|k| self.amplitude(k, m))
            .collect()
    }

    pub fn bound(&self) -> Option<T> {
        self.bound
    }

    /// Attaches an amplitude bound, clamping any violating amplitudes.
    pub fn with_bound(mut self, bound: Option<T>) -> Self {
        self.bound = bound;
        if let Some(b) = bound {
            self.clamp_to(b);
        }
        self
    }

    pub(crate) fn clamp_to(&mut self, bound: T) {
        for u in &mut self.values {
            *u = u.max(-bound).min(bound);
        }
    }

    /// Replaces all amplitudes; used by optimisers that keep the grid fixed.
    pub(crate) fn set_values(&mut self, values: Vec<T>) {
        debug_assert_eq!(values.len(), self.values.len());
        self.values = values;
    }

    pub(crate) fn set_amplitudes(&mut self, k: usize, amps: &[T]) {
        let m = self.n_controls;
        self.values[k * m..(k + 1) * m].copy_from_slice(amps);
    }

    pub fn respects_bound(&self) -> bool {
        match self.bound {
            Some(b) => self.values.iter().all(|u| u.abs() <= b),
            None => true,
        }
    }

    /// True if every duration equals `t_final / K` to within `rel_tol`.
    pub fn is_uniform(&self, rel_tol: T) -> bool {
        let k = self.n_segments();
        if k == 0 {
            return true;
        }
        let mean = self.t_final() / T::from_usize(k).expect("fits");
        self.dts()
            .iter()
            .all(|dt| (*dt - mean).abs() <= rel_tol * mean)
    }

    /// Samples the control at the midpoints of a uniform `n_segments` grid
    /// over the same interval.
    pub fn resample_uniform(&self, n_segments: usize) -> Result<Self> {
        if self.n_segments() == 0 || n_segments == 0 {
            return Err(Error::InvalidArgument(
                "cannot resample an empty control".into(),
            ));
        }
        let t0 = self.times[0];
        let span = self.t_final();
        let kk = T::from_usize(n_segments).expect("fits");
        let mut times = Vec::with_capacity(n_segments + 1);
        let mut values = Vec::with_capacity(n_segments * self.n_controls);
        let mut seg = 0;
        for i in 0..=n_segments {
            times.push(t0 + span * T::from_usize(i).expect("fits") / kk);
        }
        for i in 0..n_segments {
            let mid = (times[i] + times[i + 1]) * T::half();
            while seg + 1 < self.n_segments() && mid >= self.times[seg + 1] {
                seg += 1;
            }
            values.extend_from_slice(self.amplitudes(seg));
        }
        Self::new(times, values, self.n_controls, self.bound)
    }
}

/// Cached products of one propagation.
#[derive(Debug, Clone)]
pub struct PropagationCache<T> {
    /// `U_k`
    pub segment_props: Vec<CMatrix<T>>,
    /// `F_k = U_k ⋯ U_1`
    pub forward: Vec<CMatrix<T>>,
    /// `B_k = U_K ⋯ U_{k+1}`, with `B_K = I`
    pub backward: Vec<CMatrix<T>>,
    pub total: CMatrix<T>,
    /// Eigendecomposition of each segment Hamiltonian `H(u_k)`.
    pub spectra: Vec<HermitianEigen<T>>,
}

impl<T: Real> PropagationCache<T> {
    pub fn n_segments(&self) -> usize {
        self.segment_props.len()
    }

    /// `F_{k-1}`, i.e. the evolution up to the start of segment `k` (0-based).
    pub fn before(&self, k: usize) -> CMatrix<T> {
        if k == 0 {
            CMatrix::identity(self.total.dim())
        } else {
            self.forward[k - 1].clone()
        }
    }
}

pub(crate) fn check_arity<T: Real>(
    system: &ControlSystem<T>,
    control: &PiecewiseControl<T>,
) -> Result<()> {
    if control.n_controls() != system.n_controls() {
        return Err(Error::InvalidArgument(format!(
            "control has {} channels, system has {}",
            control.n_controls(),
            system.n_controls()
        )));
    }
    Ok(())
}

pub(crate) fn segment_eigen<T: Real>(
    system: &ControlSystem<T>,
    amplitudes: &[T],
) -> HermitianEigen<T> {
    system.hamiltonian(amplitudes).eigh_trusted()
}

/// `exp(-i dt (H0 + Σ_m u_m H_m))`.
pub fn segment_propagator<T: Real>(
    system: &ControlSystem<T>,
    amplitudes: &[T],
    dt: T,
) -> Result<CMatrix<T>> {
    if amplitudes.len() != system.n_controls() {
        return Err(Error::InvalidArgument(format!(
            "{} amplitudes for {} controls",
            amplitudes.len(),
            system.n_controls()
        )));
    }
    if !dt.is_finite() {
        return Err(Error::InvalidArgument("duration must be finite".into()));
    }
    Ok(segment_eigen(system, amplitudes).propagator(dt))
}

/// Full propagation with forward/backward products.
pub fn propagate<T: Real>(
    system: &ControlSystem<T>,
    control: &PiecewiseControl<T>,
) -> Result<PropagationCache<T>> {
    check_arity(system, control)?;
    let k = control.n_segments();
    let dim = system.dim();
    let mut spectra = Vec::with_capacity(k);
    let mut segment_props = Vec::with_capacity(k);
    for s in 0..k {
        let eig = segment_eigen(system, control.amplitudes(s));
        segment_props.push(eig.propagator(control.dt(s)));
        spectra.push(eig);
    }
    let mut forward: Vec<CMatrix<T>> = Vec::with_capacity(k);
    for s in 0..k {
        let next = match forward.last() {
            Some(prev) => segment_props[s].matmul(prev),
            None => segment_props[s].clone(),
        };
        forward.push(next);
    }
    let mut backward = vec![CMatrix::identity(dim); k];
    for s in (0..k.saturating_sub(1)).rev() {
        backward[s] = backward[s + 1].matmul(&segment_props[s + 1]);
    }
    let total = forward
        .last()
        .cloned()
        .unwrap_or_else(|| CMatrix::identity(dim));
    Ok(PropagationCache {
        segment_props,
        forward,
        backward,
        total,
        spectra,
    })
}

/// `U_K ⋯ U_1` without caching intermediate products.
pub fn total_propagator<T: Real>(
    system: &ControlSystem<T>,
    control: &PiecewiseControl<T>,
) -> Result<CMatrix<T>> {
    check_arity(system, control)?;
    let mut total = CMatrix::identity(system.dim());
    for s in 0..control.n_segments() {
        let u = segment_eigen(system, control.amplitudes(s)).propagator(control.dt(s));
        total = u.matmul(&total);
    }
    Ok(total)
}

/// Fidelity of the propagator generated by `control` against `target`.
pub fn evolve_fidelity<T: Real>(
    system: &ControlSystem<T>,
    control: &PiecewiseControl<T>,
    target: &GateTarget<T>,
) -> Result<T> {
    if target.dim() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            found: target.dim(),
        });
    }
    let total = total_propagator(system, control)?;
    Ok(fidelity_unchecked(target.matrix(), &total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_basic_nmr, CouplingSpec};
    use crate::operator::{herm_expm, Pauli};

    #[test]
    fn control_validation() {
        assert!(PiecewiseControl::<f64>::new(vec![0.0, 1.0, 1.0], vec![0.0; 2], 1, None).is_err());
        assert!(PiecewiseControl::<f64>::new(vec![0.0, 1.0], vec![0.0; 2], 1, None).is_err());
        assert!(PiecewiseControl::<f64>::new(vec![0.0, 1.0], vec![5.0], 1, Some(3.0)).is_err());
        assert!(PiecewiseControl::<f64>::new(vec![0.0, 1.0], vec![f64::NAN], 1, None).is_err());
        let ok =
            PiecewiseControl::<f64>::new(vec![0.0, 0.5, 1.5], vec![1.0, 2.0, 3.0, 4.0], 2, None)
                .unwrap();
        assert_eq!(ok.dts(), vec![0.5, 1.0]);
        assert_eq!(ok.channel(1), vec![2.0, 4.0]);
        assert!(!ok.is_uniform(1e-12));
    }

    #[test]
    fn zero_system_gives_identity() {
        let sys = ControlSystem::new(
            1,
            CMatrix::zeros(2),
            vec![CMatrix::zeros(2)],
            vec!["0".into()],
        )
        .unwrap();
        let u = segment_propagator(&sys, &[0.0], 0.7).unwrap();
        assert!(u.max_abs_diff(&CMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn single_generator_rotation() {
        let sys = build_basic_nmr(&CouplingSpec::ising_chain(1.0), 1).unwrap();
        let dt = 0.2;
        let u = segment_propagator(&sys, &[std::f64::consts::FRAC_PI_4 / dt, 0.0], dt).unwrap();
        let expected = herm_expm(&Pauli::X.matrix(), std::f64::consts::FRAC_PI_4).unwrap();
        assert!(u.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn empty_control_is_identity() {
        let sys = build_basic_nmr(&CouplingSpec::ising_chain(1.0), 1).unwrap();
        let cache = propagate(&sys, &PiecewiseControl::empty(2)).unwrap();
        assert_eq!(cache.total, CMatrix::identity(2));
        assert_eq!(cache.n_segments(), 0);
    }

    #[test]
    fn arity_mismatch() {
        let sys = build_basic_nmr(&CouplingSpec::ising_chain(1.0), 1).unwrap();
        let c = PiecewiseControl::uniform(1.0, 3, 3).unwrap();
        assert!(propagate(&sys, &c).is_err());
        assert!(segment_propagator(&sys, &[1.0], 0.1).is_err());
    }

    #[test]
    fn resample_midpoints() {
        let c =
            PiecewiseControl::<f64>::new(vec![0.0, 0.25, 1.0], vec![1.0, -2.0], 1, None).unwrap();
        let r = c.resample_uniform(4).unwrap();
        assert_eq!(r.channel(0), vec![1.0, -2.0, -2.0, -2.0]);
        assert!(r.is_uniform(1e-12));
    }
}

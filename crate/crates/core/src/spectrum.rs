//! Frequency content of piecewise-constant controls.
//!
//! Each channel is treated as `K` point samples `u_k` on a uniform grid over
//! `[0, t_F]`. With `X_j = (1/K) Σ_k u_k exp(-2πi jk/K)` the one-sided
//! magnitude spectrum stores `|X_j|` for `j = 0..=K/2` at cyclic frequencies
//! `f_j = j / t_F` (units of J). A constant `c` gives `|X_0| = |c|`, a cosine
//! on harmonic `j` gives `|X_j| = 1/2`.

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::propagation::PiecewiseControl;
use crate::scalar::Real;

/// Relative tolerance on segment lengths accepted as a uniform grid.
pub const UNIFORM_GRID_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult<T> {
    /// `f_j = j / t_F`, `j = 0..=K/2`.
    pub freqs: Vec<T>,
    /// `|X_j|` per channel.
    pub amplitudes: Vec<Vec<T>>,
    /// Bin spacing `1 / t_F`.
    pub resolution: T,
    /// Number of samples `K`.
    pub n_samples: usize,
}

impl<T: Real> SpectrumResult<T> {
    pub fn n_channels(&self) -> usize {
        self.amplitudes.len()
    }

    /// Multiplicity of bin `j` in the two-sided spectrum: 1 for DC and, for
    /// even `K`, the Nyquist bin; 2 otherwise.
    pub fn bin_weight(&self, j: usize) -> T {
        if j == 0 || 2 * j == self.n_samples {
            T::one()
        } else {
            T::two()
        }
    }

    /// Power per one-sided bin, `w_j |X_j|^2`.
    pub fn power(&self, channel: usize) -> Vec<T> {
        self.amplitudes[channel]
            .iter()
            .enumerate()
            .map(|(j, a)| self.bin_weight(j) * *a * *a)
            .collect()
    }

    /// Total power of a channel; equals the mean square of its samples.
    pub fn total_power(&self, channel: usize) -> T {
        self.power(channel).into_iter().sum()
    }
}

/// One-sided magnitude spectrum of every channel. Requires a uniform grid;
/// use [`PiecewiseControl::resample_uniform`] first otherwise.
pub fn control_spectrum<T: Real>(control: &PiecewiseControl<T>) -> Result<SpectrumResult<T>> {
    let k = control.n_segments();
    if k == 0 {
        return Err(Error::InvalidArgument(
            "spectrum needs at least one segment".into(),
        ));
    }
    if !control.is_uniform(T::lit(UNIFORM_GRID_TOL)) {
        return Err(Error::InvalidArgument(
            "spectrum needs a uniform time grid; resample the control first".into(),
        ));
    }
    let t_final = control.t_final();
    let kk = T::from_usize(k).expect("fits");
    let fft = FftPlanner::<T>::new().plan_fft_forward(k);
    let half = k / 2;
    let mut amplitudes = Vec::with_capacity(control.n_controls());
    let mut buf = vec![Complex::new(T::zero(), T::zero()); k];
    for m in 0..control.n_controls() {
        for (slot, u) in buf.iter_mut().zip(control.channel(m)) {
            *slot = Complex::new(u, T::zero());
        }
        fft.process(&mut buf);
        amplitudes.push(buf[..=half].iter().map(|z| z.norm() / kk).collect());
    }
    let resolution = T::one() / t_final;
    Ok(SpectrumResult {
        freqs: (0..=half)
            .map(|j| T::from_usize(j).expect("fits") * resolution)
            .collect(),
        amplitudes,
        resolution,
        n_samples: k,
    })
}

/// Smallest frequency below which at least `fraction` of a channel's power
/// lies, maximised over channels. Silent channels contribute 0.
pub fn bandwidth_summary<T: Real>(spectrum: &SpectrumResult<T>, fraction: T) -> Result<T> {
    if !(fraction > T::zero() && fraction <= T::one()) {
        return Err(Error::InvalidArgument("fraction must lie in (0, 1]".into()));
    }
    let slack = T::ROUNDOFF * T::from_usize(spectrum.n_samples.max(1)).expect("fits");
    let mut widest = T::zero();
    for m in 0..spectrum.n_channels() {
        let power = spectrum.power(m);
        let total: T = power.iter().copied().sum();
        if total == T::zero() {
            continue;
        }
        let goal = total * (fraction - slack);
        let mut acc = T::zero();
        for (j, p) in power.iter().enumerate() {
            acc += *p;
            if acc >= goal {
                widest = widest.max(spectrum.freqs[j]);
                break;
            }
        }
    }
    Ok(widest)
}

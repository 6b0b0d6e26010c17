//! Closed-form gate decompositions for the idealised NMR model and their
//! conversion into hard-pulse sequences.
//!
//! Single-qubit gates use `U = U_x(α) U_y(β) U_x(γ)` with
//! `U_x(α) = exp(-iα σ_x)`. Two-qubit gates use
//!
//! ```text
//! U = φ U_1 [U_y Z(α3) U_y^-1] [U_x^-1 Z(α2) U_x] Z(α1) U_2
//! ```
//!
//! with `Z(α) = exp(-iα σ_z⊗σ_z)`, `U_x = U_x(π/4)⊗U_x(π/4)` and likewise
//! `U_y`. The conjugated factors equal `exp(-iα3 XX)` and `exp(-iα2 YY)`, so
//! the interaction content is computed in the magic basis, where local gates
//! become real orthogonal and `XX`, `YY`, `ZZ` are diagonal. `φ` is an
//! element of the SU(4) centre `{±1, ±i}`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::models::{build_basic_nmr, ControlSystem, CouplingSpec};
use crate::operator::{tensor_product, unitarity_defect, CMatrix, Pauli};
use crate::propagation::PiecewiseControl;
use crate::scalar::Real;

fn cz<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

/// `exp(-iθ σ)` for a Pauli axis.
pub fn rotation<T: Real>(axis: Pauli, theta: T) -> CMatrix<T> {
    let (s, c) = theta.sin_cos();
    let mut m = Pauli::matrix::<T>(axis).scale(cz(T::zero(), -s));
    m[(0, 0)] += cz(c, T::zero());
    m[(1, 1)] += cz(c, T::zero());
    m
}

/// `exp(-iθ σ⊗σ)`.
pub fn two_body_rotation<T: Real>(axis: Pauli, theta: T) -> CMatrix<T> {
    let p = axis.matrix::<T>();
    let (s, c) = theta.sin_cos();
    let mut m = tensor_product(&p, &p).scale(cz(T::zero(), -s));
    for i in 0..4 {
        m[(i, i)] += cz(c, T::zero());
    }
    m
}

/// Wraps an angle into `(-π, π]`.
fn wrap<T: Real>(x: T) -> T {
    let two_pi = T::PI() * T::two();
    let mut y = x % two_pi;
    if y <= -T::PI() {
        y += two_pi;
    } else if y > T::PI() {
        y -= two_pi;
    }
    y
}

fn check_special_unitary<T: Real>(u: &CMatrix<T>, dim: usize, tol: T) -> Result<()> {
    if u.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: u.dim(),
        });
    }
    let defect = unitarity_defect(u);
    let det_err = (u.det() - cz(T::one(), T::zero())).norm();
    if !(defect <= tol) || !(det_err <= tol) {
        return Err(Error::NotSpecialUnitary(format!(
            "unitarity defect {:e}, |det - 1| = {:e}",
            defect.to_f64().unwrap_or(f64::NAN),
            det_err.to_f64().unwrap_or(f64::NAN)
        )));
    }
    Ok(())
}

fn input_tol<T: Real>() -> T {
    T::HERMITIAN_TOL * T::lit(100.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerAngles<T> {
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
}

impl<T: Real> EulerAngles<T> {
    pub fn new(alpha: T, beta: T, gamma: T) -> Self {
        EulerAngles { alpha, beta, gamma }
    }

    /// `U_x(α) U_y(β) U_x(γ)`.
    pub fn reconstruct(&self) -> CMatrix<T> {
        rotation(Pauli::X, self.alpha)
            .matmul(&rotation(Pauli::Y, self.beta))
            .matmul(&rotation(Pauli::X, self.gamma))
    }
}

/// Euler angles of a 2x2 special unitary.
///
/// Canonical output: `β ∈ [0, π/2]` and `α ± γ ∈ (-π, π]`, hence
/// `α, γ ∈ (-π, π]`. When `β` is 0 (resp. π/2) only `α + γ` (resp. `α - γ`)
/// is determined and the other combination is set to zero.
pub fn euler_decompose<T: Real>(u: &CMatrix<T>) -> Result<EulerAngles<T>> {
    check_special_unitary(u, 2, input_tol())?;
    // W σ_x W^dag = σ_z and W σ_y W^dag = σ_y for W = exp(iπ/4 σ_y), which
    // turns the x-y-x product into z-y-z
    let w = rotation(Pauli::Y, -T::FRAC_PI_4());
    let v = w.matmul(u).matmul(&w.adjoint());
    let (v00, v10) = (v[(0, 0)], v[(1, 0)]);
    let beta = v10.norm().atan2(v00.norm());
    let tiny = T::lit(1e-14);
    let s = if v00.norm() > tiny {
        wrap(-v00.arg())
    } else {
        T::zero()
    };
    let d = if v10.norm() > tiny {
        wrap(v10.arg())
    } else {
        T::zero()
    };
    Ok(EulerAngles {
        alpha: (s + d) * T::half(),
        beta,
        gamma: (s - d) * T::half(),
    })
}

/// `K = A ⊗ B` with `A, B ∈ SU(2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalPair<T> {
    pub first: CMatrix<T>,
    pub second: CMatrix<T>,
}

impl<T: Real> LocalPair<T> {
    pub fn identity() -> Self {
        LocalPair {
            first: CMatrix::identity(2),
            second: CMatrix::identity(2),
        }
    }

    pub fn matrix(&self) -> CMatrix<T> {
        tensor_product(&self.first, &self.second)
    }

    fn then_left(&self, a: &CMatrix<T>, b: &CMatrix<T>) -> Self {
        LocalPair {
            first: self.first.matmul(a),
            second: self.second.matmul(b),
        }
    }

    fn then_right(&self, a: &CMatrix<T>, b: &CMatrix<T>) -> Self {
        LocalPair {
            first: a.matmul(&self.first),
            second: b.matmul(&self.second),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CartanDecomposition<T> {
    /// ZZ interaction angle.
    pub alpha1: T,
    /// YY interaction angle (the `U_x`-conjugated factor).
    pub alpha2: T,
    /// XX interaction angle (the `U_y`-conjugated factor).
    pub alpha3: T,
    /// Outer local operation applied last.
    pub u1_local: LocalPair<T>,
    /// Outer local operation applied first.
    pub u2_local: LocalPair<T>,
    /// Centre phase `φ ∈ {±1, ±i}`.
    pub phase: Complex<T>,
}

impl<T: Real> CartanDecomposition<T> {
    /// `exp(-iα3 XX) exp(-iα2 YY) exp(-iα1 ZZ)`, assembled through the
    /// conjugated Ising factors.
    pub fn interaction(&self) -> CMatrix<T> {
        let q = T::FRAC_PI_4();
        let ux = tensor_product(&rotation(Pauli::X, q), &rotation(Pauli::X, q));
        let uy = tensor_product(&rotation(Pauli::Y, q), &rotation(Pauli::Y, q));
        let z3 = uy
            .matmul(&two_body_rotation(Pauli::Z, self.alpha3))
            .matmul(&uy.adjoint());
        let z2 = ux
            .adjoint()
            .matmul(&two_body_rotation(Pauli::Z, self.alpha2))
            .matmul(&ux);
        z3.matmul(&z2)
            .matmul(&two_body_rotation(Pauli::Z, self.alpha1))
    }

    pub fn reassemble(&self) -> CMatrix<T> {
        self.u1_local
            .matrix()
            .matmul(&self.interaction())
            .matmul(&self.u2_local.matrix())
            .scale(self.phase)
    }

    /// True when all interaction angles vanish within `tol`.
    pub fn is_local(&self, tol: T) -> bool {
        self.alpha1.abs() <= tol && self.alpha2.abs() <= tol && self.alpha3.abs() <= tol
    }

    /// Equivalent decomposition with `phase = 1`, obtained by moving the
    /// centre phase into `α1` and the local factors. The angles are then no
    /// longer canonical.
    pub fn with_unit_phase(&self) -> Self {
        let mut out = self.clone();
        let i = cz(T::zero(), T::one());
        if (out.phase.im).abs() > T::half() {
            // exp(-i(α+π/2) ZZ) = -i ZZ exp(-iα ZZ) and ZZ = (iZ)⊗(-iZ)
            out.alpha1 += T::FRAC_PI_2();
            let z = Pauli::Z.matrix::<T>();
            out.u2_local = out.u2_local.then_right(&z.scale(i), &z.scale(-i));
            out.phase *= i;
        }
        if out.phase.re < T::zero() {
            out.u1_local.first = out.u1_local.first.scale_real(-T::one());
            out.phase = -out.phase;
        }
        out.phase = cz(T::one(), T::zero());
        out
    }
}

/// Columns are the magic basis `(|00>+|11>)/√2, i(|01>+|10>)/√2,
/// (|01>-|10>)/√2, i(|00>-|11>)/√2`.
fn magic_basis<T: Real>() -> CMatrix<T> {
    let h = T::FRAC_1_SQRT_2();
    let z = cz(T::zero(), T::zero());
    let r = cz(h, T::zero());
    let i = cz(T::zero(), h);
    CMatrix::from_row_major(vec![r, z, z, i, z, i, r, z, z, i, -r, z, r, z, z, -i]).expect("4x4")
}

/// Real diagonal of `Q^dag P⊗P Q`, entries ±1.
fn magic_signs<T: Real>(q: &CMatrix<T>, axis: Pauli) -> [T; 4] {
    let p = axis.matrix::<T>();
    let d = q.adjoint().matmul(&tensor_product(&p, &p)).matmul(q);
    [d[(0, 0)].re, d[(1, 1)].re, d[(2, 2)].re, d[(3, 3)].re]
}

/// Real orthogonal `P` with `P^T M P` diagonal, for complex symmetric
/// unitary `M`. Its real and imaginary parts commute, so a generic real
/// combination of them shares the eigenvectors.
fn diagonalise_symmetric_unitary<T: Real>(m: &CMatrix<T>) -> Result<CMatrix<T>> {
    let weights = [
        0.5773502691896258,
        std::f64::consts::SQRT_2,
        std::f64::consts::FRAC_1_PI,
        std::f64::consts::E,
        0.1,
    ];
    let scale = T::lit(1e-10).max(T::ROUNDOFF * T::lit(1e4));
    for &r in &weights {
        let r = T::lit(r);
        let combo = CMatrix::from_fn(4, |a, b| cz(m[(a, b)].re + r * m[(a, b)].im, T::zero()));
        let vectors = combo.eigh_trusted().vectors;
        let mut p = CMatrix::from_fn(4, |a, b| cz(vectors[(a, b)].re, T::zero()));
        if p.det().re < T::zero() {
            for a in 0..4 {
                p[(a, 0)] = -p[(a, 0)];
            }
        }
        let d = p.transpose().matmul(m).matmul(&p);
        let mut off = T::zero();
        for a in 0..4 {
            for b in 0..4 {
                if a != b {
                    off = off.max(d[(a, b)].norm());
                }
            }
        }
        if off <= scale {
            return Ok(p);
        }
    }
    Err(Error::InvalidArgument(
        "could not diagonalise the magic-basis square; input too far from unitary".into(),
    ))
}

/// Splits `K ∈ SU(2)⊗SU(2)` into its factors.
fn split_local<T: Real>(k: &CMatrix<T>) -> LocalPair<T> {
    let block = |i: usize, j: usize| CMatrix::from_fn(2, |r, c| k[(2 * i + r, 2 * j + c)]);
    let mut best = (0, 0);
    let mut best_norm = T::zero();
    for i in 0..2 {
        for j in 0..2 {
            let nrm = block(i, j).frobenius_norm_sqr();
            if nrm > best_norm {
                best_norm = nrm;
                best = (i, j);
            }
        }
    }
    let b0 = block(best.0, best.1);
    let root = b0.det().sqrt();
    let second = b0.scale(root.inv());
    let sd = second.adjoint();
    let first = CMatrix::from_fn(2, |i, j| sd.matmul(&block(i, j)).trace() * T::half());
    LocalPair { first, second }
}

/// Cartan decomposition of a 4x4 special unitary with the interaction angles
/// in the Weyl chamber `π/4 ≥ α1 ≥ α2 ≥ |α3|` (and `α3 ≥ 0` when `α1 = π/4`).
pub fn cartan_decompose<T: Real>(u: &CMatrix<T>) -> Result<CartanDecomposition<T>> {
    check_special_unitary(u, 4, input_tol())?;
    let q = magic_basis::<T>();
    let up = q.adjoint().matmul(u).matmul(&q);
    let m = up.transpose().matmul(&up);
    let p = diagonalise_symmetric_unitary(&m)?;
    let d2 = p.transpose().matmul(&m).matmul(&p);
    let mut theta: Vec<T> = (0..4).map(|a| d2[(a, a)].arg() * T::half()).collect();
    // det O1 = exp(-i Σθ) must be +1; otherwise flip one square-root branch
    let sum: T = theta.iter().copied().sum();
    if Complex::from_polar(T::one(), -sum).re < T::zero() {
        theta[0] += T::PI();
    }
    let delta_inv = CMatrix::diagonal(
        &theta
            .iter()
            .map(|&t| Complex::from_polar(T::one(), -t))
            .collect::<Vec<_>>(),
    );
    let o1 = up.matmul(&p).matmul(&delta_inv);
    let k1 = q.matmul(&o1).matmul(&q.adjoint());
    let k2 = q.matmul(&p.transpose()).matmul(&q.adjoint());

    // θ_j = φ0 - (c_x sx_j + c_y sy_j + c_z sz_j); the four sign vectors and
    // the all-ones vector are mutually orthogonal
    let sx = magic_signs(&q, Pauli::X);
    let sy = magic_signs(&q, Pauli::Y);
    let sz = magic_signs(&q, Pauli::Z);
    let quarter = T::lit(0.25);
    let proj = |s: &[T; 4]| {
        -(0..4)
            .map(|j| s[j] * theta[j])
            .fold(T::zero(), |a, b| a + b)
            * quarter
    };
    let phi0 = theta.iter().copied().fold(T::zero(), |a, b| a + b) * quarter;
    let mut out = CartanDecomposition {
        alpha1: proj(&sz),
        alpha2: proj(&sy),
        alpha3: proj(&sx),
        u1_local: split_local(&k1),
        u2_local: split_local(&k2),
        phase: Complex::from_polar(T::one(), phi0),
    };
    // φ0 is a multiple of π/2 up to round-off
    out.phase = snap_centre(out.phase);
    canonicalise(&mut out);
    Ok(out)
}

fn snap_centre<T: Real>(z: Complex<T>) -> Complex<T> {
    if z.re.abs() >= z.im.abs() {
        cz(z.re.signum(), T::zero())
    } else {
        cz(T::zero(), z.im.signum())
    }
}

fn coeff<T: Real>(d: &CartanDecomposition<T>, axis: Pauli) -> T {
    match axis {
        Pauli::X => d.alpha3,
        Pauli::Y => d.alpha2,
        Pauli::Z => d.alpha1,
    }
}

fn coeff_mut<T: Real>(d: &mut CartanDecomposition<T>, axis: Pauli) -> &mut T {
    match axis {
        Pauli::X => &mut d.alpha3,
        Pauli::Y => &mut d.alpha2,
        Pauli::Z => &mut d.alpha1,
    }
}

/// `c_P -> c_P + n π/2`, compensated by `(P⊗P)^n` and a phase `i^n`.
fn shift<T: Real>(d: &mut CartanDecomposition<T>, axis: Pauli, n: i64) {
    if n == 0 {
        return;
    }
    *coeff_mut(d, axis) += T::FRAC_PI_2() * T::from_i64(n).expect("small");
    if n.rem_euclid(2) == 1 {
        // exp(-ic PP) = exp(-i(c+π/2) PP) · i PP, and PP = (iP)⊗(-iP)
        let p = axis.matrix::<T>();
        let i = cz(T::zero(), T::one());
        d.u2_local = d.u2_local.then_right(&p.scale(i), &p.scale(-i));
        d.phase *= i;
    }
    if n.rem_euclid(4) >= 2 {
        d.phase = -d.phase;
    }
}

/// Negates the two coefficients other than `keep`, compensated by
/// conjugation with `(i R)⊗I`.
fn flip_pair<T: Real>(d: &mut CartanDecomposition<T>, keep: Pauli) {
    for axis in Pauli::ALL {
        if axis != keep {
            let c = coeff_mut(d, axis);
            *c = -*c;
        }
    }
    let r = keep.matrix::<T>();
    let i = cz(T::zero(), T::one());
    let id = CMatrix::identity(2);
    d.u1_local = d.u1_local.then_left(&r.scale(i), &id);
    d.u2_local = d.u2_local.then_right(&r.scale(-i), &id);
}

/// Swaps the coefficients of the two axes other than `pivot`, compensated by
/// conjugation with `W⊗W`, `W = exp(-iπ/4 σ_pivot)`.
fn swap_pair<T: Real>(d: &mut CartanDecomposition<T>, pivot: Pauli) {
    let others: Vec<Pauli> = Pauli::ALL.iter().copied().filter(|a| *a != pivot).collect();
    let (a, b) = (others[0], others[1]);
    let ca = coeff(d, a);
    let cb = coeff(d, b);
    *coeff_mut(d, a) = cb;
    *coeff_mut(d, b) = ca;
    let w = rotation(pivot, T::FRAC_PI_4());
    let wd = w.adjoint();
    // W⊗W (σ_a⊗σ_a) (W⊗W)^dag = σ_b⊗σ_b, so A(c) = (W⊗W)^dag A(c') (W⊗W)
    d.u1_local = d.u1_local.then_left(&wd, &wd);
    d.u2_local = d.u2_local.then_right(&w, &w);
}

fn canonicalise<T: Real>(d: &mut CartanDecomposition<T>) {
    let half_pi = T::FRAC_PI_2();
    let tol = T::lit(1e-12).max(T::ROUNDOFF * T::lit(100.0));
    // reduce into (-π/4, π/4]
    for axis in Pauli::ALL {
        let c = coeff(d, axis);
        let mut n = -(c / half_pi).round().to_i64().unwrap_or(0);
        let reduced = c + half_pi * T::from_i64(n).expect("small");
        if reduced <= -T::FRAC_PI_4() + tol {
            n += 1;
        }
        shift(d, axis, n);
    }
    // order |c_z| ≥ |c_y| ≥ |c_x|
    if coeff(d, Pauli::Y).abs() < coeff(d, Pauli::X).abs() {
        swap_pair(d, Pauli::Z);
    }
    if coeff(d, Pauli::Z).abs() < coeff(d, Pauli::Y).abs() {
        swap_pair(d, Pauli::X);
    }
    if coeff(d, Pauli::Y).abs() < coeff(d, Pauli::X).abs() {
        swap_pair(d, Pauli::Z);
    }
    // make c_z, c_y non-negative
    let neg_z = coeff(d, Pauli::Z) < T::zero();
    let neg_y = coeff(d, Pauli::Y) < T::zero();
    match (neg_z, neg_y) {
        (true, true) => flip_pair(d, Pauli::X),
        (true, false) => flip_pair(d, Pauli::Y),
        (false, true) => flip_pair(d, Pauli::Z),
        (false, false) => {}
    }
    // on the π/4 face the sign of c_x is a gauge choice; fix it to ≥ 0
    if (coeff(d, Pauli::Z) - T::FRAC_PI_4()).abs() <= tol && coeff(d, Pauli::X) < -tol {
        flip_pair(d, Pauli::Y);
        shift(d, Pauli::Z, 1);
    }
    for axis in Pauli::ALL {
        let c = coeff_mut(d, axis);
        if c.abs() <= tol {
            *c = T::zero();
        }
    }
}

/// Input to [`sequence_to_control`].
#[derive(Debug, Clone, PartialEq)]
pub enum Decomposition<T> {
    Euler(EulerAngles<T>),
    Cartan(CartanDecomposition<T>),
}

/// Hard-pulse control for the basic NMR model, with a flag per segment
/// telling whether the Ising coupling is switched on.
#[derive(Debug, Clone)]
pub struct HardPulseSequence<T> {
    pub control: PiecewiseControl<T>,
    pub coupling_on: Vec<bool>,
    pub n_qubits: usize,
}

struct SequenceBuilder<T> {
    n_controls: usize,
    amplitude: T,
    times: Vec<T>,
    values: Vec<T>,
    coupling_on: Vec<bool>,
}

impl<T: Real> SequenceBuilder<T> {
    fn push(&mut self, duration: T, amps: Vec<T>, coupling: bool) {
        let last = *self.times.last().expect("non-empty");
        // angles at round-off level do not advance the clock
        if !(last + duration > last) {
            return;
        }
        self.times.push(last + duration);
        self.values.extend(amps);
        self.coupling_on.push(coupling);
    }

    /// `exp(-iθ σ_axis)` on `qubit` (1-based).
    fn pulse(&mut self, qubit: usize, axis: Pauli, theta: T) {
        let mut amps = vec![T::zero(); self.n_controls];
        let channel = 2 * (qubit - 1)
            + match axis {
                Pauli::X => 0,
                Pauli::Y => 1,
                Pauli::Z => unreachable!("no z control in the basic model"),
            };
        amps[channel] = if theta < T::zero() {
            -self.amplitude
        } else {
            self.amplitude
        };
        self.push(theta.abs() / self.amplitude, amps, false);
    }

    /// `U_x(α) U_y(β) U_x(γ)` on `qubit`, rightmost factor first.
    fn euler(&mut self, qubit: usize, e: &EulerAngles<T>) {
        self.pulse(qubit, Pauli::X, e.gamma);
        self.pulse(qubit, Pauli::Y, e.beta);
        self.pulse(qubit, Pauli::X, e.alpha);
    }

    fn local(&mut self, pair: &LocalPair<T>) -> Result<()> {
        self.euler(1, &euler_decompose(&pair.first)?);
        self.euler(2, &euler_decompose(&pair.second)?);
        Ok(())
    }

    /// `Z(α)` as free evolution; negative angles are refocused with
    /// x π-pulses on qubit 1.
    fn ising(&mut self, alpha: T, coupling: T) {
        if alpha == T::zero() {
            return;
        }
        let n = self.n_controls;
        if alpha < T::zero() {
            self.pulse(1, Pauli::X, -T::FRAC_PI_2());
            self.push(-alpha / coupling, vec![T::zero(); n], true);
            self.pulse(1, Pauli::X, T::FRAC_PI_2());
        } else {
            self.push(alpha / coupling, vec![T::zero(); n], true);
        }
    }

    fn both(&mut self, axis: Pauli, theta: T) {
        self.pulse(1, axis, theta);
        self.pulse(2, axis, theta);
    }
}

/// Converts a decomposition into hard pulses of magnitude `pulse_amplitude`
/// for the basic NMR model with Ising coupling `coupling`: one qubit (controls
/// `X1, Y1`) for Euler angles, two qubits (`X1, Y1, X2, Y2`) for a Cartan
/// decomposition. Interaction angles become drift-only segments of duration
/// `α / J`; the centre phase is folded into the pulses.
pub fn sequence_to_control<T: Real>(
    decomp: &Decomposition<T>,
    pulse_amplitude: T,
    coupling: T,
) -> Result<HardPulseSequence<T>> {
    if !(pulse_amplitude > T::zero()) || !pulse_amplitude.is_finite() {
        return Err(Error::InvalidArgument(
            "pulse amplitude must be positive".into(),
        ));
    }
    let n_qubits = match decomp {
        Decomposition::Euler(_) => 1,
        Decomposition::Cartan(_) => 2,
    };
    if n_qubits == 2 && !(coupling > T::zero()) {
        return Err(Error::InvalidArgument("coupling must be positive".into()));
    }
    let mut b = SequenceBuilder {
        n_controls: 2 * n_qubits,
        amplitude: pulse_amplitude,
        times: vec![T::zero()],
        values: Vec::new(),
        coupling_on: Vec::new(),
    };
    match decomp {
        Decomposition::Euler(e) => b.euler(1, e),
        Decomposition::Cartan(c) => {
            let c = c.with_unit_phase();
            let q = T::FRAC_PI_4();
            b.local(&c.u2_local)?;
            b.ising(c.alpha1, coupling);
            // U_x^-1 Z(α2) U_x
            b.both(Pauli::X, q);
            b.ising(c.alpha2, coupling);
            b.both(Pauli::X, -q);
            // U_y Z(α3) U_y^-1
            b.both(Pauli::Y, -q);
            b.ising(c.alpha3, coupling);
            b.both(Pauli::Y, q);
            b.local(&c.u1_local)?;
        }
    }
    let control = PiecewiseControl::new(b.times, b.values, 2 * n_qubits, None)?;
    Ok(HardPulseSequence {
        control,
        coupling_on: b.coupling_on,
        n_qubits,
    })
}

impl<T: Real> HardPulseSequence<T> {
    /// Basic NMR system matching this sequence.
    pub fn system(&self, coupling: T) -> Result<ControlSystem<T>> {
        build_basic_nmr(&CouplingSpec::ising_chain(coupling), self.n_qubits)
    }

    /// Propagator with the coupling switched off during pulse segments.
    pub fn propagate_switchable(&self, system: &ControlSystem<T>) -> Result<CMatrix<T>> {
        let free = system.with_drift(CMatrix::zeros(system.dim()))?;
        let mut total = CMatrix::identity(system.dim());
        for k in 0..self.control.n_segments() {
            let sys = if self.coupling_on[k] { system } else { &free };
            let h = sys.hamiltonian(self.control.amplitudes(k));
            total = h.eigh()?.propagator(self.control.dt(k)).matmul(&total);
        }
        Ok(total)
    }
}

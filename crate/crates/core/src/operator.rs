//! Dense complex matrices and the handful of operator primitives the rest of
//! the crate is built on: Kronecker products, Pauli embeddings, Hermitian
//! eigendecomposition and the propagator exponential `exp(-i dt H)`.
//!
//! Qubit ordering: qubit 1 is the leftmost tensor factor, i.e. it owns the
//! most significant bit of a basis-state index.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Square, dense, row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix<T> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        CMatrix {
            dim,
            data: vec![Complex::new(T::zero(), T::zero()); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> Complex<T>>(dim: usize, mut f: F) -> Self {
        let mut m = Self::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    /// Builds a matrix from row-major entries; fails unless `entries.len()` is
    /// a non-zero perfect square.
    pub fn from_row_major(entries: Vec<Complex<T>>) -> Result<Self> {
        let dim = (entries.len() as f64).sqrt().round() as usize;
        if dim == 0 || dim * dim != entries.len() {
            return Err(Error::InvalidArgument(format!(
                "{} entries do not form a square matrix",
                entries.len()
            )));
        }
        Ok(CMatrix { dim, data: entries })
    }

    pub fn diagonal(diag: &[Complex<T>]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    pub fn from_real_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = Complex::new(*d, T::zero());
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn diag(&self) -> Vec<Complex<T>> {
        (0..self.dim).map(|i| self[(i, i)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self[(c, r)])
    }

    pub fn conj(&self) -> Self {
        CMatrix {
            dim: self.dim,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// `Tr(self * other)` without forming the product.
    pub fn trace_of_product(&self, other: &Self) -> Complex<T> {
        let n = self.dim;
        let mut acc = Complex::new(T::zero(), T::zero());
        for i in 0..n {
            for k in 0..n {
                acc += self.data[i * n + k] * other.data[k * n + i];
            }
        }
        acc
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        CMatrix {
            dim: self.dim,
            data: self.data.iter().map(|z| *z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: T) -> Self {
        CMatrix {
            dim: self.dim,
            data: self.data.iter().map(|z| *z * s).collect(),
        }
    }

    /// `self += s * other`, the accumulation step of Hamiltonian assembly.
    pub fn add_scaled_assign(&mut self, s: T, other: &Self) {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b * s;
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            let dst = &mut out.data[i * n..(i + 1) * n];
            for (k, a) in row.iter().enumerate() {
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                let src = &other.data[k * n..(k + 1) * n];
                for (d, b) in dst.iter_mut().zip(src) {
                    *d += *a * *b;
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .map(|z| z.norm())
            .fold(T::zero(), |m, x| if x > m { x } else { m })
    }

    /// Max-entry magnitude of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), |m, x| if x > m { x } else { m })
    }

    pub fn frobenius_norm_sqr(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Max-entry magnitude of `A - A^dag`.
    pub fn hermiticity_defect(&self) -> T {
        let n = self.dim;
        let mut worst = T::zero();
        for r in 0..n {
            for c in r..n {
                let d = (self[(r, c)] - self[(c, r)].conj()).norm();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() <= T::HERMITIAN_TOL
    }

    /// Determinant by LU factorisation with partial pivoting.
    pub fn det(&self) -> Complex<T> {
        let n = self.dim;
        let mut a = self.data.clone();
        let mut det = Complex::new(T::one(), T::zero());
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| {
                    a[i * n + col]
                        .norm()
                        .partial_cmp(&a[j * n + col].norm())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap_or(col);
            if a[pivot * n + col].norm() == T::zero() {
                return Complex::new(T::zero(), T::zero());
            }
            if pivot != col {
                for k in 0..n {
                    a.swap(col * n + k, pivot * n + k);
                }
                det = -det;
            }
            let p = a[col * n + col];
            det *= p;
            for r in col + 1..n {
                let f = a[r * n + col] / p;
                for k in col..n {
                    let v = a[col * n + k];
                    a[r * n + k] -= f * v;
                }
            }
        }
        det
    }

    /// Eigendecomposition of a Hermitian matrix; rejects inputs whose
    /// hermiticity defect exceeds [`Real::HERMITIAN_TOL`].
    pub fn eigh(&self) -> Result<HermitianEigen<T>> {
        let defect = self.hermiticity_defect();
        if defect > T::HERMITIAN_TOL {
            return Err(Error::NotHermitian {
                defect: defect.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(self.eigh_trusted())
    }

    /// Eigendecomposition for matrices already known to be Hermitian (e.g.
    /// assembled from validated Pauli sums); only the upper triangle is read.
    pub(crate) fn eigh_trusted(&self) -> HermitianEigen<T> {
        tridiagonal_eigh(self).unwrap_or_else(|| jacobi_eigh(self))
    }
}

impl<T: Real> Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Complex<T> {
        &self.data[r * self.dim + c]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[r * self.dim + c]
    }
}

impl<T: Real> Mul for &CMatrix<T> {
    type Output = CMatrix<T>;

    fn mul(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        self.matmul(rhs)
    }
}

impl<T: Real> Add for &CMatrix<T> {
    type Output = CMatrix<T>;

    fn add(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| *a + *b)
                .collect(),
        }
    }
}

impl<T: Real> Sub for &CMatrix<T> {
    type Output = CMatrix<T>;

    fn sub(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        CMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| *a - *b)
                .collect(),
        }
    }
}

impl<T: Real> Neg for &CMatrix<T> {
    type Output = CMatrix<T>;

    fn neg(self) -> CMatrix<T> {
        CMatrix {
            dim: self.dim,
            data: self.data.iter().map(|a| -*a).collect(),
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for CMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix({}x{})", self.dim, self.dim)?;
        for r in 0..self.dim {
            write!(f, "  [")?;
            for c in 0..self.dim {
                let z = &self.data[r * self.dim + c];
                write!(f, " ({:?}, {:?})", z.re, z.im)?;
            }
            writeln!(f, " ]")?;
        }
        Ok(())
    }
}

/// Kronecker product `a ⊗ b`; `a` occupies the most significant index bits.
pub fn tensor_product<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    let (na, nb) = (a.dim(), b.dim());
    CMatrix::from_fn(na * nb, |r, c| a[(r / nb, c / nb)] * b[(r % nb, c % nb)])
}

/// Kronecker product of an ordered list of factors (leftmost = qubit 1).
pub fn tensor_all<T: Real>(factors: &[CMatrix<T>]) -> CMatrix<T> {
    let mut it = factors.iter();
    let first = it
        .next()
        .expect("tensor_all needs at least one factor")
        .clone();
    it.fold(first, |acc, f| tensor_product(&acc, f))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix<T: Real>(self) -> CMatrix<T> {
        let o = T::zero();
        let l = T::one();
        let entries = match self {
            Pauli::X => [(o, o), (l, o), (l, o), (o, o)],
            Pauli::Y => [(o, o), (o, -l), (o, l), (o, o)],
            Pauli::Z => [(l, o), (o, o), (o, o), (-l, o)],
        };
        CMatrix {
            dim: 2,
            data: entries
                .iter()
                .map(|&(re, im)| Complex::new(re, im))
                .collect(),
        }
    }

    pub fn label(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// `σ_axis` acting on qubit `site` (1-based) of an `n_qubits` register.
pub fn embed_pauli<T: Real>(axis: Pauli, site: usize, n_qubits: usize) -> Result<CMatrix<T>> {
    embed_single(&axis.matrix(), site, n_qubits)
}

/// Places a 2×2 operator at qubit `site` (1-based), identity elsewhere.
pub fn embed_single<T: Real>(op: &CMatrix<T>, site: usize, n_qubits: usize) -> Result<CMatrix<T>> {
    if op.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: op.dim(),
        });
    }
    if site == 0 || site > n_qubits {
        return Err(Error::InvalidArgument(format!(
            "qubit index {site} outside 1..={n_qubits}"
        )));
    }
    let factors: Vec<CMatrix<T>> = (1..=n_qubits)
        .map(|n| {
            if n == site {
                op.clone()
            } else {
                CMatrix::identity(2)
            }
        })
        .collect();
    Ok(tensor_all(&factors))
}

/// Product of Paulis on several sites, e.g. `[(1, Z), (2, Z)]` → `ZZ`.
pub fn pauli_product<T: Real>(terms: &[(usize, Pauli)], n_qubits: usize) -> Result<CMatrix<T>> {
    let mut factors: Vec<CMatrix<T>> = vec![CMatrix::identity(2); n_qubits];
    for &(site, axis) in terms {
        if site == 0 || site > n_qubits {
            return Err(Error::InvalidArgument(format!(
                "qubit index {site} outside 1..={n_qubits}"
            )));
        }
        factors[site - 1] = factors[site - 1].matmul(&axis.matrix());
    }
    Ok(tensor_all(&factors))
}

/// Eigenpairs of a Hermitian matrix: `A = V diag(values) V^dag`, eigenvectors
/// in the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T> {
    pub values: Vec<T>,
    pub vectors: CMatrix<T>,
}

impl<T: Real> HermitianEigen<T> {
    /// `V f(D) V^dag` for a diagonal function given per eigenvalue.
    pub fn apply_diag(&self, phases: &[Complex<T>]) -> CMatrix<T> {
        let n = self.values.len();
        let v = &self.vectors;
        let mut out = CMatrix::zeros(n);
        for r in 0..n {
            for c in 0..n {
                let mut acc = Complex::new(T::zero(), T::zero());
                for k in 0..n {
                    acc += v[(r, k)] * phases[k] * v[(c, k)].conj();
                }
                out[(r, c)] = acc;
            }
        }
        out
    }

    /// Phases `exp(-i dt λ_k)`.
    pub fn propagator_phases(&self, dt: T) -> Vec<Complex<T>> {
        self.values
            .iter()
            .map(|&l| Complex::from_polar(T::one(), -(dt * l)))
            .collect()
    }

    /// `exp(-i dt A)`.
    pub fn propagator(&self, dt: T) -> CMatrix<T> {
        self.apply_diag(&self.propagator_phases(dt))
    }

    /// `V^dag M V`, i.e. `M` expressed in the eigenbasis.
    pub fn to_eigenbasis(&self, m: &CMatrix<T>) -> CMatrix<T> {
        self.vectors.adjoint().matmul(&m.matmul(&self.vectors))
    }

    pub fn reconstruct(&self) -> CMatrix<T> {
        let d: Vec<Complex<T>> = self
            .values
            .iter()
            .map(|&l| Complex::new(l, T::zero()))
            .collect();
        self.apply_diag(&d)
    }
}

/// Copy of `input` with exact Hermitian symmetry enforced, so round-off in
/// the input cannot accumulate during the iteration.
fn symmetrised<T: Real>(input: &CMatrix<T>) -> CMatrix<T> {
    let n = input.dim();
    let mut a = input.clone();
    for r in 0..n {
        a[(r, r)] = Complex::new(a[(r, r)].re, T::zero());
        for c in r + 1..n {
            let avg = (a[(r, c)] + a[(c, r)].conj()) * T::half();
            a[(r, c)] = avg;
            a[(c, r)] = avg.conj();
        }
    }
    a
}

/// Householder reduction to Hermitian tridiagonal form, a diagonal phase
/// change that makes the off-diagonal real, then implicit QL on the real
/// symmetric tridiagonal matrix. Returns `None` if QL fails to converge.
fn tridiagonal_eigh<T: Real>(input: &CMatrix<T>) -> Option<HermitianEigen<T>> {
    let n = input.dim();
    let zero = Complex::new(T::zero(), T::zero());
    let one = Complex::new(T::one(), T::zero());
    let mut a = symmetrised(input);
    let mut q = CMatrix::<T>::identity(n);
    let mut v = vec![zero; n];
    for k in 0..n.saturating_sub(2) {
        let norm_x = (k + 1..n)
            .map(|i| a[(i, k)].norm_sqr())
            .fold(T::zero(), |x, y| x + y)
            .sqrt();
        if norm_x == T::zero() {
            continue;
        }
        let x0 = a[(k + 1, k)];
        let phase = if x0.norm() == T::zero() {
            one
        } else {
            x0 / x0.norm()
        };
        for i in k + 1..n {
            v[i] = a[(i, k)];
        }
        v[k + 1] += phase * norm_x;
        let vnorm2 = (k + 1..n)
            .map(|i| v[i].norm_sqr())
            .fold(T::zero(), |x, y| x + y);
        if vnorm2 == T::zero() {
            continue;
        }
        let beta = T::two() / vnorm2;
        // A <- H A H and Q <- Q H with H = I - beta v v^dag
        for c in 0..n {
            let mut s = zero;
            for i in k + 1..n {
                s += v[i].conj() * a[(i, c)];
            }
            s *= beta;
            for i in k + 1..n {
                a[(i, c)] -= v[i] * s;
            }
        }
        for r in 0..n {
            let mut s = zero;
            for i in k + 1..n {
                s += a[(r, i)] * v[i];
            }
            s *= beta;
            for i in k + 1..n {
                a[(r, i)] -= s * v[i].conj();
            }
            let mut s = zero;
            for i in k + 1..n {
                s += q[(r, i)] * v[i];
            }
            s *= beta;
            for i in k + 1..n {
                q[(r, i)] -= s * v[i].conj();
            }
        }
    }

    let mut d: Vec<T> = (0..n).map(|i| a[(i, i)].re).collect();
    let mut e = vec![T::zero(); n];
    let mut phases = vec![one; n];
    for i in 0..n.saturating_sub(1) {
        let sub = a[(i + 1, i)];
        let r = sub.norm();
        e[i] = r;
        phases[i + 1] = if r == T::zero() {
            phases[i]
        } else {
            phases[i] * (sub / r)
        };
    }
    let mut z = vec![T::zero(); n * n];
    for i in 0..n {
        z[i * n + i] = T::one();
    }
    if !tql2(&mut d, &mut e, &mut z, n) {
        return None;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| d[x].partial_cmp(&d[y]).unwrap_or(std::cmp::Ordering::Equal));
    let mut vectors = CMatrix::zeros(n);
    for r in 0..n {
        for (col, &src) in order.iter().enumerate() {
            let mut acc = zero;
            for k in 0..n {
                acc += q[(r, k)] * phases[k] * z[k * n + src];
            }
            vectors[(r, col)] = acc;
        }
    }
    Some(HermitianEigen {
        values: order.iter().map(|&i| d[i]).collect(),
        vectors,
    })
}

/// Implicit QL with Wilkinson-type shifts on a real symmetric tridiagonal
/// matrix: diagonal `d`, off-diagonal `e[i]` between rows `i` and `i + 1`.
/// Rotations are accumulated into the row-major `n x n` matrix `z`.
fn tql2<T: Real>(d: &mut [T], e: &mut [T], z: &mut [T], n: usize) -> bool {
    if n == 0 {
        return true;
    }
    e[n - 1] = T::zero();
    let eps = T::epsilon();
    let mut f = T::zero();
    let mut tst1 = T::zero();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return false;
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (T::two() * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;
                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let zk1 = z[k * n + i + 1];
                        let zk = z[k * n + i];
                        z[k * n + i + 1] = s * zk + c * zk1;
                        z[k * n + i] = c * zk - s * zk1;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
    d.iter().all(|x| x.is_finite())
}

/// Cyclic complex Jacobi eigenvalue iteration. Each rotation first removes
/// the phase of `a_pq` and then applies a real Givens rotation, so a real
/// symmetric input yields real eigenvectors.
fn jacobi_eigh<T: Real>(input: &CMatrix<T>) -> HermitianEigen<T> {
    let n = input.dim();
    let mut a = symmetrised(input);
    let mut v = CMatrix::identity(n);
    let scale = a.frobenius_norm_sqr().sqrt();
    let tiny = T::min_positive_value().sqrt();

    for _sweep in 0..64 {
        let mut off = T::zero();
        for r in 0..n {
            for c in r + 1..n {
                off += a[(r, c)].norm_sqr();
            }
        }
        if off.sqrt() <= T::epsilon() * T::lit(0.25) * scale || off.sqrt() < tiny {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r <= T::epsilon() * T::lit(1e-3) * scale || r < tiny {
                    continue;
                }
                let w = (apq / r).conj();
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (T::two() * r);
                let t = if tau >= T::zero() {
                    T::one() / (tau + (T::one() + tau * tau).sqrt())
                } else {
                    -T::one() / (-tau + (T::one() + tau * tau).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                // A <- A J, J = [[c, s], [-w s, w c]] in the (p, q) plane
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * w * s;
                    a[(k, q)] = akp * s + akq * w * c;
                }
                // A <- J^dag A
                let wc = w.conj();
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - aqk * wc * s;
                    a[(q, k)] = apk * s + aqk * wc * c;
                }
                a[(p, q)] = Complex::new(T::zero(), T::zero());
                a[(q, p)] = Complex::new(T::zero(), T::zero());
                a[(p, p)] = Complex::new(a[(p, p)].re, T::zero());
                a[(q, q)] = Complex::new(a[(q, q)].re, T::zero());
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * w * s;
                    v[(k, q)] = vkp * s + vkq * w * c;
                }
            }
        }
    }

    HermitianEigen {
        values: (0..n).map(|i| a[(i, i)].re).collect(),
        vectors: v,
    }
}

/// `exp(-i dt H)` for Hermitian `H`, computed from its eigendecomposition.
pub fn herm_expm<T: Real>(h: &CMatrix<T>, dt: T) -> Result<CMatrix<T>> {
    if !dt.is_finite() {
        return Err(Error::InvalidArgument("duration must be finite".into()));
    }
    Ok(h.eigh()?.propagator(dt))
}

/// Max-entry magnitude of `U^dag U - I`.
pub fn unitarity_defect<T: Real>(u: &CMatrix<T>) -> T {
    u.adjoint()
        .matmul(u)
        .max_abs_diff(&CMatrix::identity(u.dim()))
}

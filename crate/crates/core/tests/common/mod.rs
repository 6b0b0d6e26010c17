#![allow(dead_code)]

use gatesynth::{CMatrix, Complex64, Matrix};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    CMatrix::from_fn(n, |_, _| {
        Complex64::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        )
    })
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Matrix {
    let g = gaussian_matrix(rng, n);
    (&g + &g.adjoint()).scale_real(0.5 * scale)
}

pub fn random_traceless_hermitian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Matrix {
    let mut h = random_hermitian(rng, n, scale);
    let shift = h.trace().re / n as f64;
    for i in 0..n {
        h[(i, i)] -= Complex64::new(shift, 0.0);
    }
    h
}

/// Haar-random unitary: Gram-Schmidt on Gaussian columns.
pub fn haar_unitary(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let g = gaussian_matrix(rng, n);
    let mut cols: Vec<Vec<Complex64>> = Vec::new();
    for c in 0..n {
        let mut v: Vec<Complex64> = (0..n).map(|r| g[(r, c)]).collect();
        for q in &cols {
            let dot: Complex64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(q) {
                *x -= dot * y;
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        for x in &mut v {
            *x /= norm;
        }
        cols.push(v);
    }
    CMatrix::from_fn(n, |r, c| cols[c][r])
}

/// Haar-random element of SU(n).
pub fn haar_special_unitary(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let u = haar_unitary(rng, n);
    let det = u.det();
    let root = Complex64::from_polar(1.0, -det.arg() / n as f64);
    u.scale(root)
}

/// Scaled-and-squared Taylor series for exp(-i dt H).
pub fn taylor_expm(h: &Matrix, dt: f64) -> Matrix {
    let n = h.dim();
    let a = h.scale(Complex64::new(0.0, -dt));
    let norm = a.frobenius_norm_sqr().sqrt();
    let mut squarings = 0;
    while norm / 2f64.powi(squarings) > 0.5 {
        squarings += 1;
    }
    let a = a.scale_real(1.0 / 2f64.powi(squarings));
    let mut term = CMatrix::identity(n);
    let mut sum = CMatrix::identity(n);
    for k in 1..=50 {
        term = term.matmul(&a).scale_real(1.0 / k as f64);
        sum = &sum + &term;
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum);
    }
    sum
}

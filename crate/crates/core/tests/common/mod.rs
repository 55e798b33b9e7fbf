//! Test-only oracles, independent of the library's spectrum and channel code.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;

pub fn omega(n_modes: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        m[(2 * k, 2 * k + 1)] = 1.0;
        m[(2 * k + 1, 2 * k)] = -1.0;
    }
    m
}

fn squeezer(n: usize, mode: usize, r: f64) -> DMatrix<f64> {
    let mut s = DMatrix::identity(2 * n, 2 * n);
    s[(2 * mode, 2 * mode)] = r.exp();
    s[(2 * mode + 1, 2 * mode + 1)] = (-r).exp();
    s
}

fn rotation(n: usize, mode: usize, phi: f64) -> DMatrix<f64> {
    let mut s = DMatrix::identity(2 * n, 2 * n);
    let (c, si) = (phi.cos(), phi.sin());
    s[(2 * mode, 2 * mode)] = c;
    s[(2 * mode, 2 * mode + 1)] = si;
    s[(2 * mode + 1, 2 * mode)] = -si;
    s[(2 * mode + 1, 2 * mode + 1)] = c;
    s
}

fn mixer(n: usize, a: usize, b: usize, theta: f64) -> DMatrix<f64> {
    let mut s = DMatrix::identity(2 * n, 2 * n);
    let (c, si) = (theta.cos(), theta.sin());
    for q in 0..2 {
        let (i, j) = (2 * a + q, 2 * b + q);
        s[(i, i)] = c;
        s[(i, j)] = si;
        s[(j, i)] = -si;
        s[(j, j)] = c;
    }
    s
}

/// Random symplectic matrix: alternating squeezers, phase rotations and mode mixers.
pub fn random_symplectic<R: Rng>(rng: &mut R, n: usize, max_squeeze: f64) -> DMatrix<f64> {
    let mut s = DMatrix::identity(2 * n, 2 * n);
    for _ in 0..3 {
        for m in 0..n {
            s = rotation(n, m, rng.random_range(0.0..std::f64::consts::TAU)) * s;
            s = squeezer(n, m, rng.random_range(-max_squeeze..max_squeeze)) * s;
        }
        if n > 1 {
            for _ in 0..n {
                let a = rng.random_range(0..n);
                let b = (a + rng.random_range(1..n)) % n;
                s = mixer(n, a, b, rng.random_range(0.0..std::f64::consts::TAU)) * s;
            }
        }
    }
    s
}

/// `Γ = S diag(ν₁,ν₁,…) Sᵀ` together with its known spectrum (descending).
pub fn random_state<R: Rng>(rng: &mut R, n: usize, max_nu: f64, max_squeeze: f64) -> (DMatrix<f64>, Vec<f64>) {
    let mut nus: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..max_nu)).collect();
    let mut d = DMatrix::zeros(2 * n, 2 * n);
    for (k, &nu) in nus.iter().enumerate() {
        d[(2 * k, 2 * k)] = nu;
        d[(2 * k + 1, 2 * k + 1)] = nu;
    }
    let s = random_symplectic(rng, n, max_squeeze);
    let g = &s * d * s.transpose();
    let g = (&g + g.transpose()) * 0.5;
    nus.sort_by(|a, b| b.total_cmp(a));
    (g, nus)
}

/// Closed-form two-mode symplectic eigenvalues from `det A + det B + 2 det C` and `det Γ`.
pub fn two_mode_spectrum(g: &DMatrix<f64>) -> (f64, f64) {
    let det2 = |r: usize, c: usize| g[(r, c)] * g[(r + 1, c + 1)] - g[(r, c + 1)] * g[(r + 1, c)];
    let delta = det2(0, 0) + det2(2, 2) + 2.0 * det2(0, 2);
    let det = g.determinant();
    let disc = (delta * delta - 4.0 * det).max(0.0).sqrt();
    (((delta + disc) / 2.0).sqrt(), ((delta - disc) / 2.0).max(0.0).sqrt())
}

/// Moduli of the eigenvalues of the non-symmetric `ΩΓ` via real Schur, paired and descending.
pub fn schur_spectrum(g: &DMatrix<f64>) -> Vec<f64> {
    let n = g.nrows() / 2;
    let m = omega(n) * g;
    let mut abs: Vec<f64> = m.complex_eigenvalues().iter().map(|z| z.norm()).collect();
    abs.sort_by(|a, b| b.total_cmp(a));
    abs.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

/// Binary entropy-like function `g`, written independently of the library.
pub fn g_oracle(x: f64) -> f64 {
    if x <= 1.0 {
        return 0.0;
    }
    let a = (x + 1.0) / 2.0;
    let b = (x - 1.0) / 2.0;
    a * a.log2() - b * b.log2()
}

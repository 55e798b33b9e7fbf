//! Gaussian-state machinery in shot-noise units.
//!
//! Quadratures are ordered `(x1, p1, x2, p2, ...)` and the vacuum has unit
//! variance. Mean values are never tracked: they carry no entropy.

use nalgebra::{Complex, DMatrix, Matrix2, SymmetricEigen};

use crate::error::{Error, Result};

/// Slack allowed below 1 for symplectic eigenvalues before a state is rejected as unphysical.
pub const PHYSICAL_TOLERANCE: f64 = 1e-9;

const SYMMETRY_TOLERANCE: f64 = 1e-12;
const PAIRING_TOLERANCE: f64 = 1e-9;

/// Real symmetric `2N x 2N` covariance matrix of an `N`-mode Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    n_modes: usize,
    entries: DMatrix<f64>,
}

impl CovarianceMatrix {
    /// Validates shape, symmetry, positive definiteness and the uncertainty relation.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = entries.shape();
        if rows != cols || rows == 0 || rows % 2 != 0 {
            return Err(Error::InvalidMatrix(format!(
                "expected a non-empty 2N x 2N matrix, got {rows} x {cols}"
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite entry".into()));
        }
        let scale = entries.amax().max(1.0);
        for i in 0..rows {
            for j in (i + 1)..cols {
                let diff = (entries[(i, j)] - entries[(j, i)]).abs();
                if diff > SYMMETRY_TOLERANCE * scale {
                    return Err(Error::InvalidMatrix(format!(
                        "not symmetric: |G[{i},{j}] - G[{j},{i}]| = {diff:e}"
                    )));
                }
            }
        }
        let cm = Self::from_symmetrized(entries);
        let spectrum = raw_spectrum(&cm.entries)?;
        if let Some(&nu) = spectrum.last() {
            if nu < 1.0 - PHYSICAL_TOLERANCE {
                return Err(Error::InvalidMatrix(format!(
                    "violates the uncertainty relation: symplectic eigenvalue {nu} < 1"
                )));
            }
        }
        Ok(cm)
    }

    /// Row-major constructor for `n_modes` modes.
    pub fn from_row_slice(n_modes: usize, data: &[f64]) -> Result<Self> {
        let dim = 2 * n_modes;
        if data.len() != dim * dim {
            return Err(Error::InvalidMatrix(format!(
                "{} entries supplied for a {n_modes}-mode state (need {})",
                data.len(),
                dim * dim
            )));
        }
        Self::new(DMatrix::from_row_slice(dim, dim, data))
    }

    /// Trusted constructor for results of symplectic maps and Schur complements.
    pub(crate) fn from_symmetrized(m: DMatrix<f64>) -> Self {
        let entries = (&m + m.transpose()) * 0.5;
        Self {
            n_modes: entries.nrows() / 2,
            entries,
        }
    }

    pub fn vacuum(n_modes: usize) -> Self {
        assert!(n_modes > 0, "a state needs at least one mode");
        Self {
            n_modes,
            entries: DMatrix::identity(2 * n_modes, 2 * n_modes),
        }
    }

    /// Single-mode thermal state with variance `v` in both quadratures.
    pub fn thermal(v: f64) -> Result<Self> {
        if !(v >= 1.0) {
            return Err(Error::domain("variance", v, "thermal variance must be >= 1"));
        }
        Ok(Self {
            n_modes: 1,
            entries: DMatrix::from_diagonal_element(2, 2, v),
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.entries
    }

    /// The 2x2 block coupling modes `i` and `j`.
    pub fn block(&self, i: usize, j: usize) -> Matrix2<f64> {
        self.entries.fixed_view::<2, 2>(2 * i, 2 * j).into_owned()
    }

    /// Tensor product of two independent states, `self` first.
    pub fn direct_sum(&self, other: &CovarianceMatrix) -> CovarianceMatrix {
        let (d1, d2) = (self.entries.nrows(), other.entries.nrows());
        let mut m = DMatrix::zeros(d1 + d2, d1 + d2);
        m.view_mut((0, 0), (d1, d1)).copy_from(&self.entries);
        m.view_mut((d1, d1), (d2, d2)).copy_from(&other.entries);
        CovarianceMatrix {
            n_modes: self.n_modes + other.n_modes,
            entries: m,
        }
    }

    fn check_mode(&self, index: usize) -> Result<()> {
        if index >= self.n_modes {
            return Err(Error::ModeIndex {
                index,
                n_modes: self.n_modes,
            });
        }
        Ok(())
    }
}

/// Block-diagonal symplectic form built from `[[0, 1], [-1, 0]]` blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    n_modes: usize,
    entries: DMatrix<f64>,
}

impl SymplecticForm {
    pub fn new(n_modes: usize) -> Self {
        let dim = 2 * n_modes;
        let mut entries = DMatrix::zeros(dim, dim);
        for k in 0..n_modes {
            entries[(2 * k, 2 * k + 1)] = 1.0;
            entries[(2 * k + 1, 2 * k)] = -1.0;
        }
        Self { n_modes, entries }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Whether `s` is symplectic, i.e. `S Ω Sᵀ = Ω` within `tol` (max-abs).
    pub fn is_preserved_by(&self, s: &DMatrix<f64>, tol: f64) -> bool {
        s.shape() == self.entries.shape() && (s * &self.entries * s.transpose() - &self.entries).amax() <= tol
    }
}

/// The EPR correlation block `diag(1, -1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PauliZBlock;

impl PauliZBlock {
    pub fn matrix() -> Matrix2<f64> {
        Matrix2::new(1.0, 0.0, 0.0, -1.0)
    }
}

/// Symplectic eigenvalues, one per mode, sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticSpectrum(Vec<f64>);

impl SymplecticSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.0[0]
    }

    pub fn min(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    /// Sum of `entropy_g` over the spectrum.
    pub fn entropy(&self) -> Result<f64> {
        self.0.iter().map(|&nu| entropy_g(nu)).sum()
    }
}

impl std::ops::Index<usize> for SymplecticSpectrum {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Entropy (bits) of a single mode with symplectic eigenvalue `x`.
///
/// Values within [`PHYSICAL_TOLERANCE`] below 1 are clamped to 1, where the
/// function vanishes.
pub fn entropy_g(x: f64) -> Result<f64> {
    if x.is_nan() || x < 1.0 - PHYSICAL_TOLERANCE {
        return Err(Error::domain(
            "symplectic eigenvalue",
            x,
            "unphysical, must be >= 1",
        ));
    }
    if x.is_infinite() {
        return Err(Error::domain("symplectic eigenvalue", x, "must be finite"));
    }
    let x = x.max(1.0);
    let up = (x + 1.0) / 2.0;
    let down = (x - 1.0) / 2.0;
    let down_term = if down > 0.0 { down * down.log2() } else { 0.0 };
    Ok(up * up.log2() - down_term)
}

/// Absolute eigenvalues of `iΩΓ`, one per mode, sorted descending.
///
/// Evaluated on the Hermitian matrix `i Γ^{1/2} Ω Γ^{1/2}`, which is similar to `iΩΓ`.
pub fn symplectic_spectrum(gamma: &CovarianceMatrix) -> Result<SymplecticSpectrum> {
    raw_spectrum(&gamma.entries).map(SymplecticSpectrum)
}

fn raw_spectrum(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let dim = m.nrows();
    let n_modes = dim / 2;
    let eig = SymmetricEigen::new(m.clone());
    let lambda_max = eig.eigenvalues.amax();
    if let Some(&bad) = eig
        .eigenvalues
        .iter()
        .find(|&&l| !(l > lambda_max * f64::EPSILON * dim as f64))
    {
        return Err(Error::InvalidMatrix(format!(
            "not positive definite (eigenvalue {bad:e})"
        )));
    }
    let sqrt_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let root = &eig.eigenvectors * sqrt_diag * eig.eigenvectors.transpose();
    let omega = SymplecticForm::new(n_modes);
    let a = &root * omega.entries() * &root;
    let a = (&a - a.transpose()) * 0.5;
    let hermitian = a.map(|v| Complex::new(0.0, v));
    let evals = SymmetricEigen::new(hermitian).eigenvalues;

    let mut abs: Vec<f64> = evals.iter().map(|v| v.abs()).collect();
    abs.sort_by(|x, y| y.total_cmp(x));
    let mut out = Vec::with_capacity(n_modes);
    for pair in abs.chunks_exact(2) {
        let (hi, lo) = (pair[0], pair[1]);
        if hi - lo > PAIRING_TOLERANCE * hi.max(1.0) {
            return Err(Error::Numerical(format!(
                "symplectic eigenvalues failed to pair: {hi} vs {lo}"
            )));
        }
        out.push(0.5 * (hi + lo));
    }
    Ok(out)
}

/// Von Neumann entropy (bits) of a Gaussian state.
pub fn von_neumann_entropy(gamma: &CovarianceMatrix) -> Result<f64> {
    symplectic_spectrum(gamma)?.entropy()
}

/// Two-mode squeezed state with an extra `kappa` of thermal noise on the second mode.
///
/// Diagonal blocks `μI` and `(μ+κ)I`, correlations `√(μ²−1) Z`.
pub fn epr_state(mu: f64, kappa: f64) -> Result<CovarianceMatrix> {
    if !(mu >= 1.0) || !mu.is_finite() {
        return Err(Error::domain("mu", mu, "EPR variance must be finite and >= 1"));
    }
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(Error::domain("kappa", kappa, "preparation noise must be finite and >= 0"));
    }
    Ok(two_mode(mu, mu + kappa, (mu * mu - 1.0).sqrt()))
}

/// Eve's injected two-mode squeezed state of variance `w`.
pub fn eve_epr_state(w: f64) -> Result<CovarianceMatrix> {
    if !(w >= 1.0) || !w.is_finite() {
        return Err(Error::domain("W", w, "Eve's EPR variance must be finite and >= 1"));
    }
    Ok(two_mode(w, w, (w * w - 1.0).sqrt()))
}

fn two_mode(first: f64, second: f64, corr: f64) -> CovarianceMatrix {
    let z = PauliZBlock::matrix() * corr;
    let mut m = DMatrix::zeros(4, 4);
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(&(Matrix2::identity() * first));
    m.fixed_view_mut::<2, 2>(2, 2).copy_from(&(Matrix2::identity() * second));
    m.fixed_view_mut::<2, 2>(0, 2).copy_from(&z);
    m.fixed_view_mut::<2, 2>(2, 0).copy_from(&z);
    CovarianceMatrix::from_symmetrized(m)
}

/// Symplectic matrix of a beamsplitter of transmittance `t` between two modes.
///
/// Mode `a` becomes `√T a + √(1−T) b` and mode `b` becomes `−√(1−T) a + √T b`,
/// on both quadratures.
pub fn beamsplitter_matrix(n_modes: usize, mode_a: usize, mode_b: usize, t: f64) -> DMatrix<f64> {
    let mut s = DMatrix::identity(2 * n_modes, 2 * n_modes);
    let (ct, rt) = (t.sqrt(), (1.0 - t).sqrt());
    for q in 0..2 {
        let (ia, ib) = (2 * mode_a + q, 2 * mode_b + q);
        s[(ia, ia)] = ct;
        s[(ia, ib)] = rt;
        s[(ib, ia)] = -rt;
        s[(ib, ib)] = ct;
    }
    s
}

/// Mixes `mode_a` and `mode_b` on a beamsplitter of transmittance `t`.
pub fn beamsplitter(
    gamma: &CovarianceMatrix,
    mode_a: usize,
    mode_b: usize,
    t: f64,
) -> Result<CovarianceMatrix> {
    gamma.check_mode(mode_a)?;
    gamma.check_mode(mode_b)?;
    if mode_a == mode_b {
        return Err(Error::InvalidMatrix(format!(
            "beamsplitter needs two distinct modes, got {mode_a} twice"
        )));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::domain("T", t, "transmittance must lie in [0, 1]"));
    }
    let s = beamsplitter_matrix(gamma.n_modes, mode_a, mode_b, t);
    Ok(CovarianceMatrix::from_symmetrized(&s * &gamma.entries * s.transpose()))
}

/// Covariance of the remaining modes after an ideal heterodyne measurement of `measured_mode`.
///
/// Computes `Γ_rest − C (Γ_m + I)⁻¹ Cᵀ`.
pub fn condition_on_heterodyne(gamma: &CovarianceMatrix, measured_mode: usize) -> Result<CovarianceMatrix> {
    gamma.check_mode(measured_mode)?;
    if gamma.n_modes < 2 {
        return Err(Error::InvalidMatrix(
            "cannot condition a single-mode state: nothing remains".into(),
        ));
    }
    let rest: Vec<usize> = (0..gamma.n_modes).filter(|&m| m != measured_mode).collect();
    let rest_idx = quadrature_indices(&rest);
    let measured_idx = [2 * measured_mode, 2 * measured_mode + 1];

    let g = &gamma.entries;
    let gamma_rest = g.select_rows(&rest_idx).select_columns(&rest_idx);
    let cross = g.select_rows(&rest_idx).select_columns(&measured_idx);
    let gamma_m = g.select_rows(&measured_idx).select_columns(&measured_idx) + DMatrix::identity(2, 2);

    let det = gamma_m.determinant();
    if !(det.abs() > 1e-12 * gamma_m.amax().powi(2).max(1.0)) {
        return Err(Error::Singular("heterodyne conditioning"));
    }
    let inv = gamma_m
        .try_inverse()
        .ok_or(Error::Singular("heterodyne conditioning"))?;
    let schur = gamma_rest - &cross * inv * cross.transpose();
    Ok(CovarianceMatrix::from_symmetrized(schur))
}

/// Reduced state on `keep`, in the order given.
pub fn partial_state(gamma: &CovarianceMatrix, keep: &[usize]) -> Result<CovarianceMatrix> {
    if keep.is_empty() {
        return Err(Error::InvalidMatrix("partial state needs at least one mode".into()));
    }
    for (i, &m) in keep.iter().enumerate() {
        gamma.check_mode(m)?;
        if keep[..i].contains(&m) {
            return Err(Error::InvalidMatrix(format!("mode {m} listed twice")));
        }
    }
    let idx = quadrature_indices(keep);
    Ok(CovarianceMatrix {
        n_modes: keep.len(),
        entries: gamma.entries.select_rows(&idx).select_columns(&idx),
    })
}

fn quadrature_indices(modes: &[usize]) -> Vec<usize> {
    modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect()
}

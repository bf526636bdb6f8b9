//! Phase-space description of n-mode Gaussian states.
//!
//! Quadratures are interleaved as `(q1, p1, q2, p2, ...)` with ħ = 1, so the
//! vacuum has covariance `I/2`. A state is its mean vector and covariance
//! matrix; every operation here is a closed-form map on those moments.

use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

use crate::error::{check_nonneg, check_range, Error, Result};

const SYMPLECTIC_TOL: f64 = 1e-10;
const PHYSICAL_TOL: f64 = 1e-10;

/// The block-diagonal symplectic form `⊕ [[0, 1], [-1, 0]]`.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianState {
    n_modes: usize,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// Builds a state from its moments. The covariance is symmetrized; use
    /// [`GaussianState::validate`] to check physicality.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::Dimension(format!(
                "mean has length {dim}, expected a positive even number"
            )));
        }
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(Error::Dimension(format!(
                "covariance is {}x{}, mean has length {dim}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        let cov = (&cov + cov.transpose()) * 0.5;
        Ok(Self {
            n_modes: dim / 2,
            mean,
            cov,
        })
    }

    pub fn vacuum(n_modes: usize) -> Self {
        Self {
            n_modes,
            mean: DVector::zeros(2 * n_modes),
            cov: DMatrix::identity(2 * n_modes, 2 * n_modes) * 0.5,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Checks `cov + iΩ/2 >= 0` through the symplectic spectrum.
    pub fn validate(&self) -> Result<()> {
        let nu = self.symplectic_eigenvalues();
        match nu.first() {
            Some(&smallest) if smallest < 0.5 - PHYSICAL_TOL || smallest.is_nan() => Err(Error::Unphysical(smallest)),
            _ => Ok(()),
        }
    }

    /// Symplectic eigenvalues in ascending order, one per mode.
    ///
    /// With `M = Σ^½ Ω Σ^½` antisymmetric, `MᵀM` has each `ν_k²` twice.
    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        let eig = self.cov.clone().symmetric_eigen();
        let sqrt_vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
        let sqrt_cov = &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals) * eig.eigenvectors.transpose();
        let m = &sqrt_cov * symplectic_form(self.n_modes) * &sqrt_cov;
        let gram = m.transpose() * &m;
        let mut squares: Vec<f64> = gram.symmetric_eigen().eigenvalues.iter().copied().collect();
        squares.sort_by(f64::total_cmp);
        squares
            .chunks(2)
            .map(|pair| (0.5 * (pair[0] + pair[1])).max(0.0).sqrt())
            .collect()
    }

    /// Mean photon number of one mode: `(tr Σ_k + |μ_k|²)/2 − 1/2`.
    pub fn mode_photon_number(&self, mode: usize) -> f64 {
        let (q, p) = (2 * mode, 2 * mode + 1);
        0.5 * (self.cov[(q, q)] + self.cov[(p, p)] + self.mean[q].powi(2) + self.mean[p].powi(2)) - 0.5
    }

    pub fn mean_photon_number(&self) -> f64 {
        (0..self.n_modes).map(|k| self.mode_photon_number(k)).sum()
    }

    /// Tensor product, i.e. the direct sum of moments.
    pub fn tensor(&self, other: &GaussianState) -> GaussianState {
        let n = self.mean.len();
        let m = other.mean.len();
        let mut mean = DVector::zeros(n + m);
        mean.rows_mut(0, n).copy_from(&self.mean);
        mean.rows_mut(n, m).copy_from(&other.mean);
        let mut cov = DMatrix::zeros(n + m, n + m);
        cov.view_mut((0, 0), (n, n)).copy_from(&self.cov);
        cov.view_mut((n, n), (m, m)).copy_from(&other.cov);
        GaussianState {
            n_modes: self.n_modes + other.n_modes,
            mean,
            cov,
        }
    }

    /// Applies a Gaussian unitary: `μ → Sμ`, `Σ → SΣSᵀ`.
    pub fn transform(&self, s: &SymplecticMatrix) -> Result<GaussianState> {
        if s.n_modes != self.n_modes {
            return Err(Error::Dimension(format!(
                "{}-mode symplectic applied to {}-mode state",
                s.n_modes, self.n_modes
            )));
        }
        GaussianState::new(&s.matrix * &self.mean, &s.matrix * &self.cov * s.matrix.transpose())
    }

    /// Attenuates one mode by `eta` and adds `added_noise` photons of thermal
    /// noise at the output. Correlations with other modes scale by `√η`.
    pub(crate) fn attenuate_mode(&self, mode: usize, eta: f64, added_noise: f64) -> GaussianState {
        let t = eta.sqrt();
        let mut mean = self.mean.clone();
        let mut cov = self.cov.clone();
        let idx = [2 * mode, 2 * mode + 1];
        for &i in &idx {
            mean[i] *= t;
            for j in 0..cov.ncols() {
                cov[(i, j)] *= t;
                cov[(j, i)] *= t;
            }
        }
        let noise = added_noise + 0.5 * (1.0 - eta);
        for &i in &idx {
            cov[(i, i)] += noise;
        }
        GaussianState {
            n_modes: self.n_modes,
            mean,
            cov,
        }
    }
}

/// A real `2n × 2n` matrix preserving the symplectic form.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticMatrix {
    n_modes: usize,
    matrix: DMatrix<f64>,
}

impl SymplecticMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let dim = matrix.nrows();
        if dim == 0 || !dim.is_multiple_of(2) || matrix.ncols() != dim {
            return Err(Error::Dimension(format!(
                "symplectic matrix must be square with even size, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let n_modes = dim / 2;
        let omega = symplectic_form(n_modes);
        let drift = (&matrix * &omega * matrix.transpose() - &omega).amax();
        if drift >= SYMPLECTIC_TOL {
            return Err(Error::NotSymplectic(format!("|SΩSᵀ - Ω|∞ = {drift:e}")));
        }
        let det = matrix.determinant();
        if (det - 1.0).abs() >= SYMPLECTIC_TOL {
            return Err(Error::NotSymplectic(format!("det S = {det}")));
        }
        Ok(Self { n_modes, matrix })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

/// Two-mode beamsplitter with intensity transmissivity `eta`.
pub fn beamsplitter_symplectic(eta: f64) -> Result<SymplecticMatrix> {
    check_range("eta", eta, 0.0, 1.0, "[0, 1]")?;
    let t = eta.sqrt();
    let r = (1.0 - eta).sqrt();
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 4, &[
         t, 0.0,   r, 0.0,
        0.0,  t, 0.0,   r,
        -r, 0.0,   t, 0.0,
        0.0, -r, 0.0,   t,
    ]);
    SymplecticMatrix::new(m)
}

pub fn thermal_state(nbar: f64) -> Result<GaussianState> {
    check_nonneg("nbar", nbar)?;
    Ok(GaussianState {
        n_modes: 1,
        mean: DVector::zeros(2),
        cov: DMatrix::identity(2, 2) * (nbar + 0.5),
    })
}

/// Coherent state with real amplitude `√nbar`. The phase is fixed at zero
/// since click statistics only see `|α|²`.
pub fn coherent_state(nbar: f64) -> Result<GaussianState> {
    check_nonneg("nbar", nbar)?;
    Ok(GaussianState {
        n_modes: 1,
        mean: DVector::from_vec(vec![(2.0 * nbar).sqrt(), 0.0]),
        cov: DMatrix::identity(2, 2) * 0.5,
    })
}

/// Thermal loss channel on a single-mode state, parameterized by the
/// background `nbar_th` seen at the output (environment mean
/// `nbar_th / (1 − η)`).
pub fn loss_channel(state: &GaussianState, eta: f64, nbar_th: f64) -> Result<GaussianState> {
    check_range("eta", eta, 0.0, 1.0, "[0, 1]")?;
    check_nonneg("nbar_th", nbar_th)?;
    if eta == 1.0 && nbar_th > 0.0 {
        return Err(Error::Domain {
            name: "nbar_th",
            value: nbar_th,
            expected: "0 when eta = 1",
        });
    }
    if state.n_modes != 1 {
        return Err(Error::Dimension(format!(
            "loss channel acts on one mode, got {}",
            state.n_modes
        )));
    }
    Ok(state.attenuate_mode(0, eta, nbar_th))
}

/// Wigner function value at phase-space point `x`.
pub fn wigner(state: &GaussianState, x: &[f64]) -> Result<f64> {
    if x.len() != state.mean.len() {
        return Err(Error::Dimension(format!(
            "point has length {}, state has {} quadratures",
            x.len(),
            state.mean.len()
        )));
    }
    let chol = state.cov.clone().cholesky().ok_or(Error::Singular("covariance"))?;
    let delta = DVector::from_column_slice(x) - &state.mean;
    let quad = delta.dot(&chol.solve(&delta));
    let det = chol.determinant();
    Ok((-0.5 * quad).exp() / ((2.0 * PI).powi(state.n_modes as i32) * det.sqrt()))
}

/// `tr(ρσ)` for two Gaussian states.
pub fn overlap(a: &GaussianState, b: &GaussianState) -> Result<f64> {
    if a.n_modes != b.n_modes {
        return Err(Error::Dimension(format!(
            "overlap of {}-mode and {}-mode states",
            a.n_modes, b.n_modes
        )));
    }
    let sum = &a.cov + &b.cov;
    let chol = sum.cholesky().ok_or(Error::Singular("Σa + Σb"))?;
    let delta = &a.mean - &b.mean;
    let quad = delta.dot(&chol.solve(&delta));
    Ok((-0.5 * quad).exp() / chol.determinant().sqrt())
}

/// Keeps the listed modes (in the given order) and drops the rest.
pub fn partial_trace(state: &GaussianState, keep: &[usize]) -> Result<GaussianState> {
    if keep.is_empty() {
        return Err(Error::Dimension("partial trace must keep at least one mode".into()));
    }
    if let Some(&bad) = keep.iter().find(|&&k| k >= state.n_modes) {
        return Err(Error::Dimension(format!(
            "mode {bad} out of range for {}-mode state",
            state.n_modes
        )));
    }
    let rows: Vec<usize> = keep.iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect();
    let mean = DVector::from_iterator(rows.len(), rows.iter().map(|&r| state.mean[r]));
    let cov = DMatrix::from_fn(rows.len(), rows.len(), |i, j| state.cov[(rows[i], rows[j])]);
    Ok(GaussianState {
        n_modes: keep.len(),
        mean,
        cov,
    })
}

pub fn symplectic_eigenvalues(state: &GaussianState) -> Vec<f64> {
    state.symplectic_eigenvalues()
}

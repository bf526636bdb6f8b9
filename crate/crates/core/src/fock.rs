//! Truncated Fock-basis oracle.
//!
//! Dense, deliberately naive density matrices that rebuild every Gaussian
//! closed form from number-basis definitions: the geometric thermal and
//! POVM weights, the TMSV wavefunction, Kraus maps for the thermal loss
//! channel. It also computes the Helstrom and quantum Chernoff bounds, which
//! have no closed form here.

use nalgebra::{Complex, DMatrix, DVector};
use serde::Serialize;

use crate::click::DetectorModel;
use crate::conditioning::{self, Tmsv, HERALD_GUARD};
use crate::error::{check_nonneg, check_range, Error, Result};
use crate::illumination::{self, Branch, ProbeKind, Scenario};

pub type C64 = Complex<f64>;

/// Geometric tail allowed beyond the truncation.
pub const TAIL: f64 = 1e-12;
pub const MIN_DIM: usize = 32;
/// Dimensions above this work but are slow; reported as a note.
pub const WARN_DIM: usize = 512;
/// Agreement required between oracle and closed forms.
pub const ORACLE_TOL: f64 = 1e-7;

const HERMITIAN_TOL: f64 = 1e-10;
const EIG_FLOOR: f64 = 1e-300;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Smallest `D` with `ratio^D < TAIL`.
pub fn tail_dim(ratio: f64) -> usize {
    if ratio <= 0.0 {
        return 1;
    }
    let mut d = (TAIL.ln() / ratio.ln()).floor().max(1.0) as usize;
    while ratio.powi(d as i32) >= TAIL {
        d += 1;
    }
    d
}

/// Truncation for a computation whose largest thermal mean is `max_mean`.
pub fn required_dim(max_mean: f64) -> usize {
    tail_dim(max_mean / (1.0 + max_mean)).max(MIN_DIM)
}

/// Truncation that keeps the Poisson tail of a coherent state below `TAIL`.
pub fn coherent_dim(nbar: f64) -> usize {
    let mut p = (-nbar).exp();
    let mut cum = p;
    let mut k = 0usize;
    while 1.0 - cum >= TAIL && k < 100_000 {
        k += 1;
        p *= nbar / k as f64;
        cum += p;
    }
    k + 1
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// `k · ln(x)` with the convention `0 · ln 0 = 0`.
fn k_ln(k: usize, x: f64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * x.ln()
    }
}

/// Single-mode operator on the truncated Fock space `|0>..|dim-1>`.
#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    dim: usize,
    matrix: DMatrix<C64>,
}

impl FockOperator {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "Fock operator must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self {
            dim: matrix.nrows(),
            matrix,
        })
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| c(x)));
        Self {
            dim: diag.len(),
            matrix: DMatrix::from_diagonal(&d),
        }
    }

    /// `|ψ><ψ|` for a state vector.
    pub fn projector(psi: &DVector<C64>) -> Self {
        Self {
            dim: psi.len(),
            matrix: psi * psi.adjoint(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.matrix[(i, i)].re).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        for j in 0..self.dim {
            for i in 0..self.dim {
                if i != j && self.matrix[(i, j)] != c(0.0) {
                    return false;
                }
            }
        }
        true
    }

    pub fn hermitian_deviation(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// `Re tr(A ρ)`.
    pub fn expectation(&self, observable: &FockOperator) -> Result<f64> {
        same_dim(self, observable)?;
        let mut acc = c(0.0);
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += observable.matrix[(i, j)] * self.matrix[(j, i)];
            }
        }
        Ok(acc.re)
    }

    /// Rescaled to unit trace; removes the truncation deficit of a state.
    pub fn normalized(&self) -> FockOperator {
        self.scaled(1.0 / self.trace())
    }

    pub fn scaled(&self, factor: f64) -> FockOperator {
        FockOperator {
            dim: self.dim,
            matrix: &self.matrix * c(factor),
        }
    }

    pub fn sub(&self, other: &FockOperator) -> Result<FockOperator> {
        same_dim(self, other)?;
        Ok(FockOperator {
            dim: self.dim,
            matrix: &self.matrix - &other.matrix,
        })
    }

    /// Complement `1 − A`.
    pub fn complement(&self) -> FockOperator {
        FockOperator {
            dim: self.dim,
            matrix: DMatrix::identity(self.dim, self.dim) - &self.matrix,
        }
    }

    fn hermitian_eigen(&self) -> Result<(DVector<f64>, DMatrix<C64>)> {
        let dev = self.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::NonHermitian(dev));
        }
        let h = (&self.matrix + self.matrix.adjoint()) * c(0.5);
        let eig = h.symmetric_eigen();
        Ok((eig.eigenvalues, eig.eigenvectors))
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut v: Vec<f64> = self.hermitian_eigen()?.0.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        Ok(v)
    }
}

fn same_dim(a: &FockOperator, b: &FockOperator) -> Result<()> {
    if a.dim == b.dim {
        Ok(())
    } else {
        Err(Error::Dimension(format!("Fock dims {} and {} differ", a.dim, b.dim)))
    }
}

fn check_tail(quantity: &str, ratio: f64, dim: usize) -> Result<()> {
    let required = tail_dim(ratio);
    if dim < required {
        Err(Error::Truncation {
            quantity: quantity.to_string(),
            dim,
            required,
        })
    } else {
        Ok(())
    }
}

pub fn fock_thermal(nbar: f64, dim: usize) -> Result<FockOperator> {
    check_nonneg("nbar", nbar)?;
    let ratio = nbar / (1.0 + nbar);
    check_tail(&format!("thermal state with mean {nbar}"), ratio, dim)?;
    let mut w = Vec::with_capacity(dim);
    let mut term = 1.0 / (1.0 + nbar);
    for _ in 0..dim {
        w.push(term);
        term *= ratio;
    }
    Ok(FockOperator::from_diagonal(&w))
}

/// Coherent state vector with complex amplitude `alpha`.
pub fn coherent_vector(alpha: C64, dim: usize) -> Result<DVector<C64>> {
    let nbar = alpha.norm_sqr();
    let required = coherent_dim(nbar);
    if dim < required {
        return Err(Error::Truncation {
            quantity: format!("coherent state with mean {nbar}"),
            dim,
            required,
        });
    }
    let mut v = DVector::zeros(dim);
    let mut amp = c((-0.5 * nbar).exp());
    for n in 0..dim {
        if n > 0 {
            amp = amp * alpha / (n as f64).sqrt();
        }
        v[n] = amp;
    }
    Ok(v)
}

pub fn fock_coherent(nbar: f64, dim: usize) -> Result<FockOperator> {
    check_nonneg("nbar", nbar)?;
    Ok(FockOperator::projector(&coherent_vector(c(nbar.sqrt()), dim)?))
}

/// Pure two-mode state `Σ ψ[i,s] |i>_I |s>_S`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoModePure {
    dim: usize,
    amplitudes: DMatrix<C64>,
}

impl TwoModePure {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amplitudes(&self) -> &DMatrix<C64> {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `tr_I((Π ⊗ 1)|ψ><ψ|)`, unnormalized.
    pub fn condition_idler(&self, povm: &FockOperator) -> Result<FockOperator> {
        if povm.dim != self.dim {
            return Err(Error::Dimension(format!("POVM dim {} vs state dim {}", povm.dim, self.dim)));
        }
        let psi = &self.amplitudes;
        let m = psi.transpose() * povm.matrix.transpose() * psi.map(|z| z.conj());
        FockOperator::new(m)
    }

    pub fn reduced_signal(&self) -> FockOperator {
        let id = FockOperator::from_diagonal(&vec![1.0; self.dim]);
        self.condition_idler(&id).expect("identity has matching dim")
    }

    pub fn reduced_idler(&self) -> FockOperator {
        let psi = &self.amplitudes;
        FockOperator {
            dim: self.dim,
            matrix: psi.map(|z| z) * psi.adjoint(),
        }
    }
}

/// `√(1−λ²) Σ λ^k |k,k>`.
pub fn fock_tmsv(nbar: f64, dim: usize) -> Result<TwoModePure> {
    check_nonneg("nbar", nbar)?;
    let ratio = nbar / (1.0 + nbar);
    check_tail(&format!("TMSV with mean {nbar}"), ratio, dim)?;
    let lambda = ratio.sqrt();
    let mut amplitudes = DMatrix::zeros(dim, dim);
    let mut a = (1.0 - ratio).sqrt();
    for k in 0..dim {
        amplitudes[(k, k)] = c(a);
        a *= lambda;
    }
    Ok(TwoModePure { dim, amplitudes })
}

/// Diagonal no-click operator `Σ (1 − η/(1+n̄_d))^n/(1+n̄_d) |n><n|`.
pub fn fock_no_click_povm(det: &DetectorModel, dim: usize) -> Result<FockOperator> {
    det.validate()?;
    let ratio = 1.0 - det.eta / (1.0 + det.nbar_d);
    let mut w = Vec::with_capacity(dim);
    let mut term = 1.0 / (1.0 + det.nbar_d);
    for _ in 0..dim {
        w.push(term);
        term *= ratio;
    }
    Ok(FockOperator::from_diagonal(&w))
}

/// Kraus coefficients of a pure-loss channel, `coef[l][n] = <n−l|A_l|n>`.
fn pure_loss_coefficients(tau: f64, dim: usize, lnf: &[f64]) -> Vec<Vec<f64>> {
    (0..dim)
        .map(|l| {
            (0..dim)
                .map(|n| {
                    if n < l {
                        0.0
                    } else {
                        let ln_binom = lnf[n] - lnf[l] - lnf[n - l];
                        (0.5 * (ln_binom + k_ln(n - l, tau) + k_ln(l, 1.0 - tau))).exp()
                    }
                })
                .collect()
        })
        .collect()
}

/// Kraus coefficients of a quantum-limited amplifier with gain `g`,
/// `coef[l][n] = <n+l|B_l|n>`.
fn amplifier_coefficients(gain: f64, dim: usize, lnf: &[f64]) -> Vec<Vec<f64>> {
    let x = (gain - 1.0) / gain;
    (0..dim)
        .map(|l| {
            (0..dim)
                .map(|n| {
                    if n + l >= dim {
                        0.0
                    } else {
                        let ln_binom = lnf[n + l] - lnf[n] - lnf[l];
                        (0.5 * (ln_binom - (n + 1) as f64 * gain.ln() + k_ln(l, x))).exp()
                    }
                })
                .collect()
        })
        .collect()
}

fn apply_lowering_kraus(op: &FockOperator, coef: &[Vec<f64>]) -> FockOperator {
    let d = op.dim;
    let mut out = DMatrix::zeros(d, d);
    let diagonal = op.is_diagonal();
    for (l, cl) in coef.iter().enumerate() {
        if diagonal {
            for a in 0..d - l {
                out[(a, a)] += op.matrix[(a + l, a + l)] * (cl[a + l] * cl[a + l]);
            }
        } else {
            for b in 0..d - l {
                for a in 0..d - l {
                    out[(a, b)] += op.matrix[(a + l, b + l)] * (cl[a + l] * cl[b + l]);
                }
            }
        }
    }
    FockOperator { dim: d, matrix: out }
}

fn apply_raising_kraus(op: &FockOperator, coef: &[Vec<f64>]) -> FockOperator {
    let d = op.dim;
    let mut out = DMatrix::zeros(d, d);
    let diagonal = op.is_diagonal();
    for (l, cl) in coef.iter().enumerate() {
        if diagonal {
            for a in l..d {
                out[(a, a)] += op.matrix[(a - l, a - l)] * (cl[a - l] * cl[a - l]);
            }
        } else {
            for b in l..d {
                for a in l..d {
                    out[(a, b)] += op.matrix[(a - l, b - l)] * (cl[a - l] * cl[b - l]);
                }
            }
        }
    }
    FockOperator { dim: d, matrix: out }
}

/// Thermal loss channel with transmissivity `eta` and output background
/// `nbar_th`, applied as pure loss `η/(1+n̄_th)` followed by a
/// quantum-limited amplifier of gain `1 + n̄_th`.
pub fn fock_loss_channel(op: &FockOperator, eta: f64, nbar_th: f64) -> Result<FockOperator> {
    check_range("eta", eta, 0.0, 1.0, "[0, 1]")?;
    check_nonneg("nbar_th", nbar_th)?;
    if eta == 1.0 && nbar_th > 0.0 {
        return Err(Error::Domain {
            name: "nbar_th",
            value: nbar_th,
            expected: "0 when eta = 1",
        });
    }
    check_tail(
        &format!("loss channel background {nbar_th}"),
        nbar_th / (1.0 + nbar_th),
        op.dim,
    )?;
    let gain = 1.0 + nbar_th;
    let tau = eta / gain;
    let lnf = ln_factorials(2 * op.dim);
    let lossy = apply_lowering_kraus(op, &pure_loss_coefficients(tau, op.dim, &lnf));
    if nbar_th == 0.0 {
        return Ok(lossy);
    }
    Ok(apply_raising_kraus(&lossy, &amplifier_coefficients(gain, op.dim, &lnf)))
}

/// `<m, j| U |n, k>` for a beamsplitter `a† → t a† + r b†`,
/// `b† → −r a† + t b†`; zero unless `m + j = n + k`.
fn beamsplitter_amplitude(t: f64, r: f64, m: usize, j: usize, n: usize, k: usize, lnf: &[f64]) -> f64 {
    if m + j != n + k {
        return 0.0;
    }
    let mut sum = 0.0;
    for p in 0..=n.min(m) {
        if m < p || m - p > k {
            continue;
        }
        let q = m - p;
        let ln_mag = lnf[n] - lnf[p] - lnf[n - p] + lnf[k] - lnf[q] - lnf[k - q]
            + k_ln(p, t)
            + k_ln(n - p, r)
            + k_ln(q, r)
            + k_ln(k - q, t);
        let zero = (p > 0 && t == 0.0) || (n > p && r == 0.0) || (q > 0 && r == 0.0) || (k > q && t == 0.0);
        if zero {
            continue;
        }
        let sign = if q % 2 == 1 { -1.0 } else { 1.0 };
        sum += sign * ln_mag.exp();
    }
    sum * (0.5 * (lnf[m] + lnf[j] - lnf[n] - lnf[k])).exp()
}

/// The same channel as [`fock_loss_channel`] built the long way: mix with a
/// thermal environment of mean `nbar_th/(1−η)` on a beamsplitter and trace the
/// environment out. Cost grows as `dim² · env_dim²`, so only for small
/// truncations.
pub fn fock_loss_channel_dilation(op: &FockOperator, eta: f64, nbar_th: f64, env_dim: usize) -> Result<FockOperator> {
    check_range("eta", eta, 0.0, 1.0, "[0, 1)")?;
    if eta == 1.0 {
        return Err(Error::Domain {
            name: "eta",
            value: eta,
            expected: "< 1 for an explicit environment",
        });
    }
    let env = fock_thermal(nbar_th / (1.0 - eta), env_dim)?.diagonal();
    let d = op.dim;
    let (t, r) = (eta.sqrt(), (1.0 - eta).sqrt());
    let lnf = ln_factorials(2 * (d + env_dim));
    let mut out = DMatrix::<C64>::zeros(d, d);
    for (k, &pk) in env.iter().enumerate() {
        for j in 0..d + env_dim {
            // A[m][n] = <m, j| U |n, k>
            let a = DMatrix::from_fn(d, d, |m, n| beamsplitter_amplitude(t, r, m, j, n, k, &lnf));
            if a.amax() == 0.0 {
                continue;
            }
            let ac = a.map(c);
            out += (&ac * &op.matrix * ac.adjoint()) * c(pk);
        }
    }
    FockOperator::new(out)
}

/// Minimum error of discriminating `rho0` (prior `prior0`) from `rho1`.
pub fn helstrom_error(rho0: &FockOperator, rho1: &FockOperator, prior0: f64) -> Result<f64> {
    check_range("prior0", prior0, 0.0, 1.0, "[0, 1]")?;
    same_dim(rho0, rho1)?;
    for rho in [rho0, rho1] {
        let dev = rho.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(Error::NonHermitian(dev));
        }
    }
    let diff = rho1.scaled(1.0 - prior0).sub(&rho0.scaled(prior0))?;
    let trace_norm: f64 = diff.eigenvalues()?.iter().map(|v| v.abs()).sum();
    Ok(0.5 * (1.0 - trace_norm))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChernoffBound {
    pub value: f64,
    pub s_opt: f64,
    /// True when the golden-section bracket failed and a grid scan was used.
    pub grid_fallback: bool,
}

/// `½ min_s tr(ρ0^s ρ1^(1−s))`.
pub fn chernoff_bound(rho0: &FockOperator, rho1: &FockOperator) -> Result<ChernoffBound> {
    same_dim(rho0, rho1)?;
    let (a, va) = rho0.hermitian_eigen()?;
    let (b, vb) = rho1.hermitian_eigen()?;
    let overlaps = (va.adjoint() * vb).map(|z| z.norm_sqr());
    let objective = |s: f64| -> f64 {
        let pa: Vec<f64> = a.iter().map(|&x| if x > EIG_FLOOR { x.powf(s) } else { 0.0 }).collect();
        let pb: Vec<f64> = b.iter().map(|&x| if x > EIG_FLOOR { x.powf(1.0 - s) } else { 0.0 }).collect();
        let mut acc = 0.0;
        for (j, &wj) in pb.iter().enumerate() {
            if wj == 0.0 {
                continue;
            }
            let mut col = 0.0;
            for (i, &wi) in pa.iter().enumerate() {
                col += wi * overlaps[(i, j)];
            }
            acc += col * wj;
        }
        acc
    };

    let coarse: Vec<f64> = (0..=10).map(|i| objective(i as f64 / 10.0)).collect();
    let unimodal = {
        let slack = 1e-14;
        let mut descending = true;
        let mut ok = true;
        for w in coarse.windows(2) {
            if descending && w[1] > w[0] + slack {
                descending = false;
            } else if !descending && w[1] < w[0] - slack {
                ok = false;
            }
        }
        ok
    };

    let (s_opt, value, grid_fallback) = if unimodal {
        let (s, v) = golden_section(&objective, 0.0, 1.0, 1e-6);
        (s, v, false)
    } else {
        let (s, v) = (1..1000)
            .map(|i| {
                let s = i as f64 / 1000.0;
                (s, objective(s))
            })
            .fold((0.5, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        (s, v, true)
    };
    Ok(ChernoffBound {
        value: 0.5 * value,
        s_opt,
        grid_fallback,
    })
}

fn golden_section<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let s = 0.5 * (lo + hi);
    (s, f(s))
}

/// Return state under H1 for a coherent probe, for the bound computations.
pub fn coherent_return_state(nbar: f64, kappa: f64, nbar_b: f64, dim: usize) -> Result<FockOperator> {
    fock_loss_channel(&fock_coherent(nbar, dim)?, kappa, nbar_b)
}

/// Background state and coherent return state at a shared truncation, each
/// renormalized to unit trace.
pub fn coherent_vs_background(nbar: f64, kappa: f64, nbar_b: f64) -> Result<(FockOperator, FockOperator)> {
    let dim = bounds_dim(nbar, kappa, nbar_b);
    Ok((
        fock_thermal(nbar_b, dim)?.normalized(),
        coherent_return_state(nbar, kappa, nbar_b, dim)?.normalized(),
    ))
}

/// Truncation large enough for every state in a coherent-vs-background
/// discrimination problem.
pub fn bounds_dim(nbar: f64, kappa: f64, nbar_b: f64) -> usize {
    required_dim(nbar_b / (1.0 - kappa))
        .max(required_dim(kappa * nbar + nbar_b))
        .max(coherent_dim(nbar))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleCheck {
    pub name: String,
    pub gaussian: f64,
    pub fock: f64,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub scenario: Scenario,
    pub dim: usize,
    pub checks: Vec<OracleCheck>,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub notes: Vec<String>,
}

impl ValidationReport {
    fn push(&mut self, name: impl Into<String>, gaussian: f64, fock: f64) {
        let deviation = (gaussian - fock).abs();
        self.checks.push(OracleCheck {
            name: name.into(),
            gaussian,
            fock,
            deviation,
        });
    }

    fn push_distribution(&mut self, name: &str, gaussian: &[f64], fock: &[f64]) {
        let (k, dev) = gaussian
            .iter()
            .zip(fock)
            .map(|(g, f)| (g - f).abs())
            .enumerate()
            .fold((0, -1.0), |best, (k, d)| if d > best.1 { (k, d) } else { best });
        let _ = dev;
        self.push(format!("{name}[k={k}]"), gaussian[k], fock[k]);
    }
}

const DIST_KMAX: usize = 30;

/// Dimension the oracle needs for a scenario.
pub fn scenario_dim(scenario: &Scenario) -> Result<usize> {
    let matched = scenario.with_probe(ProbeKind::TmsvMatched).tmsv_nbar().unwrap_or(0.0);
    let n_tmsv = scenario.nbar.max(matched);
    let n_max = scenario.nbar.max(n_tmsv);
    let max_mean = [
        n_tmsv + 1.0,
        scenario.nbar_b / (1.0 - scenario.kappa),
        scenario.kappa * n_max + scenario.nbar_b,
    ]
    .into_iter()
    .fold(0.0, f64::max);
    Ok(required_dim(max_mean).max(coherent_dim(scenario.nbar)).max(DIST_KMAX + 1))
}

/// Recomputes every closed-form probability of a scenario in Fock space.
pub fn validate_scenario(scenario: &Scenario, dim: Option<usize>) -> Result<ValidationReport> {
    scenario.validate()?;
    let needed = scenario_dim(scenario)?;
    let dim = match dim {
        Some(d) if d < needed => {
            return Err(Error::Truncation {
                quantity: "scenario (largest thermal mean incl. nbar_b/(1-kappa))".into(),
                dim: d,
                required: needed,
            })
        }
        Some(d) => d,
        None => needed,
    };
    let mut report = ValidationReport {
        scenario: *scenario,
        dim,
        checks: Vec::new(),
        max_deviation: 0.0,
        tolerance: ORACLE_TOL,
        passed: false,
        notes: Vec::new(),
    };
    if dim > WARN_DIM {
        report
            .notes
            .push(format!("truncation dim {dim} exceeds {WARN_DIM}; oracle will be slow"));
    }

    let signal_povm = fock_no_click_povm(&scenario.signal_det, dim)?;
    let idler_povm = fock_no_click_povm(&scenario.idler_det, dim)?;
    let click_after_return = |rho: &FockOperator| -> Result<f64> {
        let back = fock_loss_channel(rho, scenario.kappa, scenario.nbar_b)?;
        Ok(1.0 - back.expectation(&signal_povm)?)
    };

    let background = fock_thermal(scenario.nbar_b, dim)?;
    report.push(
        "p_h0",
        illumination::p_click_h0(scenario),
        1.0 - background.expectation(&signal_povm)?,
    );

    let coh = scenario.with_probe(ProbeKind::Coherent);
    report.push(
        "coherent.p_h1",
        illumination::p_click_h1_coherent(&coh),
        click_after_return(&fock_coherent(scenario.nbar, dim)?)?,
    );

    for kind in [ProbeKind::Tmsv, ProbeKind::TmsvMatched] {
        let s = scenario.with_probe(kind);
        let label = kind.label();
        let n_tmsv = match s.tmsv_nbar() {
            Ok(n) => n,
            Err(e) => {
                report.notes.push(format!("{label}: skipped, {e}"));
                continue;
            }
        };
        let tmsv = fock_tmsv(n_tmsv, dim)?;
        let no_click = tmsv.condition_idler(&idler_povm)?;
        let n_fock = no_click.trace();
        report.push(
            format!("{label}.herald_no_click"),
            illumination::herald_no_click_prob(&s)?,
            n_fock,
        );

        let rho_pnst = no_click.scaled(1.0 / n_fock);
        report.push(
            format!("{label}.p_h1_pnst"),
            illumination::p_click_h1_pnst(&s)?,
            click_after_return(&rho_pnst)?,
        );
        let gauss_tmsv = Tmsv::new(n_tmsv)?;
        let (pnst_g, _) = conditioning::herald_no_click(&gauss_tmsv, &s.idler_det)?;
        let dist_g = conditioning::photon_distribution(&pnst_g.into(), DIST_KMAX)?;
        report.push_distribution(
            &format!("{label}.pnst_photon_dist"),
            &dist_g,
            &rho_pnst.diagonal()[..=DIST_KMAX],
        );

        if 1.0 - n_fock < HERALD_GUARD {
            report
                .notes
                .push(format!("{label}: VST branch skipped, degenerate heralding"));
            continue;
        }
        let rho_vst = tmsv.condition_idler(&idler_povm.complement())?.scaled(1.0 / (1.0 - n_fock));
        report.push(
            format!("{label}.p_h1_vst"),
            illumination::shot_likelihoods(&s, Branch::Vst)?.p_click_h1,
            click_after_return(&rho_vst)?,
        );
        let (vst_g, _) = conditioning::herald_click(&gauss_tmsv, &s.idler_det)?;
        let dist_g = conditioning::photon_distribution(&vst_g.into(), DIST_KMAX)?;
        report.push_distribution(
            &format!("{label}.vst_photon_dist"),
            &dist_g,
            &rho_vst.diagonal()[..=DIST_KMAX],
        );
    }

    report.max_deviation = report.checks.iter().map(|c| c.deviation).fold(0.0, f64::max);
    report.passed = report.max_deviation < ORACLE_TOL && report.checks.iter().all(|c| c.deviation.is_finite());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn det(eta: f64, nd: f64) -> DetectorModel {
        DetectorModel::new(eta, nd).unwrap()
    }

    fn max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn tail_rule() {
        assert_eq!(tail_dim(0.5), 40); // 2^-40 < 1e-12 <= 2^-39
        assert!(0.5f64.powi(39) >= TAIL);
        assert_eq!(required_dim(0.0), MIN_DIM);
        assert_eq!(required_dim(1.0), 40);
        let d = required_dim(10.0);
        assert!((10.0f64 / 11.0).powi(d as i32) < TAIL);
        assert!((10.0f64 / 11.0).powi(d as i32 - 1) >= TAIL);
    }

    #[test]
    fn thermal_geometric() {
        let t = fock_thermal(1.0, 60).unwrap();
        let d = t.diagonal();
        assert_abs_diff_eq!(d[0], 0.5);
        assert_abs_diff_eq!(d[1], 0.25);
        assert_abs_diff_eq!(d[2], 0.125);
        assert!(matches!(fock_thermal(1.0, 20), Err(Error::Truncation { required: 40, .. })));
        // n=3 geometric law: tail below 1e-12 at dim=97
        let t = fock_thermal(3.0, 97).unwrap();
        assert!((1.0 - t.trace()).abs() < 1e-12);
        assert_abs_diff_eq!(t.diagonal()[5], 0.75f64.powi(5) / 4.0, epsilon = 1e-16);
    }

    #[test]
    fn coherent_vacuum_and_norm() {
        let v = fock_coherent(0.0, 32).unwrap();
        assert_eq!(v.matrix()[(0, 0)], c(1.0));
        assert_eq!(v.trace(), 1.0);
        let a = fock_coherent(2.5, 40).unwrap();
        assert!((a.trace() - 1.0).abs() < 1e-12);
        let n: f64 = a.diagonal().iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        assert_abs_diff_eq!(n, 2.5, epsilon = 1e-10);
        assert!(fock_coherent(25.0, 30).is_err());
    }

    #[test]
    fn tmsv_arms_are_thermal() {
        let t = fock_tmsv(1.0, 60).unwrap();
        assert!((t.norm_sqr() - 1.0).abs() < 1e-12);
        let th = fock_thermal(1.0, 60).unwrap();
        for red in [t.reduced_signal(), t.reduced_idler()] {
            for (a, b) in red.diagonal().iter().zip(th.diagonal()) {
                assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn povm_weights() {
        let p = fock_no_click_povm(&DetectorModel::perfect(), 8).unwrap();
        assert_eq!(p.diagonal(), [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let p = fock_no_click_povm(&det(0.5, 0.0), 4).unwrap();
        assert_eq!(p.diagonal(), [1.0, 0.5, 0.25, 0.125]);
        let p = fock_no_click_povm(&det(0.0, 1.0), 4).unwrap();
        let vac = fock_coherent(0.0, 32).unwrap();
        let p32 = fock_no_click_povm(&det(0.0, 1.0), 32).unwrap();
        assert_abs_diff_eq!(vac.expectation(&p32).unwrap(), 0.5);
        for w in p.diagonal() {
            assert_abs_diff_eq!(w, 0.5);
        }
    }

    #[test]
    fn loss_channel_examples() {
        let dim = 80;
        let out = fock_loss_channel(&fock_coherent(0.0, dim).unwrap(), 0.3, 2.0).unwrap();
        let th = fock_thermal(2.0, dim).unwrap();
        for (a, b) in out.diagonal().iter().zip(th.diagonal()) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-8);
        }
        let out = fock_loss_channel(&fock_thermal(1.0, dim).unwrap(), 0.5, 0.0).unwrap();
        let th = fock_thermal(0.5, dim).unwrap();
        for (a, b) in out.diagonal().iter().zip(th.diagonal()) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
        // pure loss keeps coherent states pure with amplitude √η α
        let out = fock_loss_channel(&fock_coherent(1.0, 40).unwrap(), 0.49, 0.0).unwrap();
        let expect = fock_coherent(0.49, 40).unwrap();
        assert!(max_diff(out.matrix(), expect.matrix()) < 1e-12);
        assert!(fock_loss_channel(&th, 1.0, 0.5).is_err());
        assert!(matches!(
            fock_loss_channel(&fock_thermal(0.1, 40).unwrap(), 0.5, 50.0),
            Err(Error::Truncation { .. })
        ));
    }

    #[test]
    fn kraus_and_dilation_agree() {
        let dim = 18;
        let env_dim = 40;
        let coh = FockOperator::projector(&coherent_vector(C64::new(0.6, -0.3), 24).unwrap());
        // both routes act on the same truncated operator
        let rho = FockOperator::new(coh.matrix().view((0, 0), (dim, dim)).into_owned()).unwrap();
        let kraus = fock_loss_channel(&rho, 0.7, 0.2).unwrap();
        let dil = fock_loss_channel_dilation(&rho, 0.7, 0.2, env_dim).unwrap();
        // amplifier truncation loses mass near the top of the space; compare low block
        let k = 6;
        let dev = max_diff(
            &kraus.matrix().view((0, 0), (k, k)).into_owned(),
            &dil.matrix().view((0, 0), (k, k)).into_owned(),
        );
        assert!(dev < 1e-9, "{dev}");
    }

    #[test]
    fn trace_preserved_within_tail() {
        let dim = required_dim(3.0 / 0.9);
        let out = fock_loss_channel(&fock_coherent(1.0, dim).unwrap(), 0.1, 3.0).unwrap();
        assert!((out.trace() - 1.0).abs() < 10.0 * TAIL * dim as f64);
    }

    #[test]
    fn helstrom_basics() {
        let a = fock_thermal(1.0, 40).unwrap();
        assert_abs_diff_eq!(helstrom_error(&a, &a, 0.5).unwrap(), 0.5, epsilon = 1e-14);
        let v0 = FockOperator::from_diagonal(&[1.0, 0.0, 0.0]);
        let v1 = FockOperator::from_diagonal(&[0.0, 1.0, 0.0]);
        assert_abs_diff_eq!(helstrom_error(&v0, &v1, 0.5).unwrap(), 0.0, epsilon = 1e-15);
        let mut bad = DMatrix::<C64>::zeros(2, 2);
        bad[(0, 1)] = c(1.0);
        let bad = FockOperator::new(bad).unwrap();
        let ok = FockOperator::from_diagonal(&[1.0, 0.0]);
        assert!(matches!(helstrom_error(&bad, &ok, 0.5), Err(Error::NonHermitian(_))));
    }

    // Frozen from an independent numpy computation (displacement operator via
    // scipy expm on a 150-level space, trace norm by eigh).
    #[test]
    fn helstrom_displaced_thermal_reference() {
        let (rho0, rho1) = coherent_vs_background(0.1, 0.1, 3.0).unwrap();
        let h = helstrom_error(&rho0, &rho1, 0.5).unwrap();
        assert_abs_diff_eq!(h, 0.48487326196739405, epsilon = 1e-9);
    }

    #[test]
    fn chernoff_basics() {
        let a = fock_thermal(0.8, 40).unwrap();
        let q = chernoff_bound(&a, &a).unwrap();
        assert_abs_diff_eq!(q.value, 0.5, epsilon = 1e-10);

        // ±α through a noisy channel: parity symmetry puts the optimum at ½
        let dim = 48;
        let plus = FockOperator::projector(&coherent_vector(c(0.8), dim).unwrap());
        let minus = FockOperator::projector(&coherent_vector(c(-0.8), dim).unwrap());
        let rp = fock_loss_channel(&plus, 0.6, 0.4).unwrap();
        let rm = fock_loss_channel(&minus, 0.6, 0.4).unwrap();
        let q = chernoff_bound(&rp, &rm).unwrap();
        assert_abs_diff_eq!(q.s_opt, 0.5, epsilon = 1e-5);
        assert!(!q.grid_fallback);
        assert!(q.value >= helstrom_error(&rp, &rm, 0.5).unwrap());
    }

    #[test]
    fn oracle_agrees_at_reference_points() {
        for nbar_b in [3.0, 10.0] {
            let s = Scenario {
                kappa: 0.1,
                nbar_b,
                signal_det: det(0.9, 0.0),
                idler_det: det(0.9, 0.0),
                nbar: 1.0,
                probe_kind: ProbeKind::Tmsv,
                intercept_eta: None,
            };
            let r = validate_scenario(&s, None).unwrap();
            assert!(r.passed, "{r:#?}");
            assert!(r.checks.len() >= 10);
        }
    }

    #[test]
    fn oracle_handles_dark_tmsv() {
        let s = Scenario {
            kappa: 0.2,
            nbar_b: 1.0,
            signal_det: det(0.8, 0.1),
            idler_det: det(0.9, 0.0),
            nbar: 0.0,
            probe_kind: ProbeKind::Tmsv,
            intercept_eta: None,
        };
        let r = validate_scenario(&s, None).unwrap();
        assert!(r.passed);
        assert!(r.notes.iter().any(|n| n.contains("degenerate")));
        assert!(r.checks.iter().any(|c| c.name.starts_with("tmsv.p_h1_pnst")));
        assert!(!r.checks.iter().any(|c| c.name.contains("vst")));
        assert!(validate_scenario(&s, Some(10)).is_err());
    }
}

//! Two-mode squeezed vacuum and the signal states heralded by a click
//! detector on the idler.
//!
//! A no-click leaves a Gaussian thermal state with reduced photon number
//! (PNST), computed as a Schur complement of the two-mode covariance. A click
//! leaves the vacuum-suppressed state (VST), kept as the signed mixture
//! `(ρ_S − N ρ_PNST)/(1 − N)`.

use nalgebra::{DMatrix, DVector};

use crate::click::DetectorModel;
use crate::error::{check_nonneg, Error, Result};
use crate::gaussian::{self, GaussianState};
use crate::mixture::{GaussianMixture, SignalState};

/// Heralding click probabilities below this make the VST weights meaningless.
pub const HERALD_GUARD: f64 = 1e-12;

const IDLER: usize = 0;
const SIGNAL: usize = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Tmsv {
    nbar: f64,
    state: GaussianState,
}

impl Tmsv {
    /// TMSV with `nbar` photons per arm, idler in mode 0 and signal in mode 1.
    pub fn new(nbar: f64) -> Result<Self> {
        check_nonneg("nbar", nbar)?;
        let v = nbar + 0.5;
        let c = (nbar * (1.0 + nbar)).sqrt();
        #[rustfmt::skip]
        let cov = DMatrix::from_row_slice(4, 4, &[
            v, 0.0, c, 0.0,
            0.0, v, 0.0, -c,
            c, 0.0, v, 0.0,
            0.0, -c, 0.0, v,
        ]);
        Ok(Self {
            nbar,
            state: GaussianState::new(DVector::zeros(4), cov)?,
        })
    }

    pub fn nbar(&self) -> f64 {
        self.nbar
    }

    /// `λ = √(n̄/(1+n̄))`.
    pub fn lambda(&self) -> f64 {
        (self.nbar / (1.0 + self.nbar)).sqrt()
    }

    pub fn state(&self) -> &GaussianState {
        &self.state
    }

    /// The unconditioned signal arm, a thermal state of mean `nbar`.
    pub fn signal(&self) -> GaussianState {
        gaussian::partial_trace(&self.state, &[SIGNAL]).expect("TMSV has two modes")
    }
}

/// Signal state and probability `N` for a no-click at the idler detector.
pub fn herald_no_click(tmsv: &Tmsv, idler_det: &DetectorModel) -> Result<(GaussianState, f64)> {
    idler_det.validate()?;
    let lossy = tmsv.state.attenuate_mode(IDLER, idler_det.eta, idler_det.nbar_d);
    let cov = lossy.cov();
    let v_i = cov.view((0, 0), (2, 2)).into_owned();
    let v_s = cov.view((2, 2), (2, 2)).into_owned();
    let c = cov.view((0, 2), (2, 2)).into_owned();
    let mu_i = lossy.mean().rows(0, 2).into_owned();
    let mu_s = lossy.mean().rows(2, 2).into_owned();

    let idler = GaussianState::new(mu_i.clone(), v_i.clone())?;
    let n = gaussian::overlap(&idler, &GaussianState::vacuum(1))?;

    let k = (v_i + DMatrix::identity(2, 2) * 0.5)
        .try_inverse()
        .ok_or(Error::Singular("V'_I + I/2"))?;
    let cov_pnst = &v_s - c.transpose() * &k * &c;
    let mean_pnst = &mu_s - c.transpose() * &k * &mu_i;
    Ok((GaussianState::new(mean_pnst, cov_pnst)?, n))
}

/// Signal state and probability `1 − N` for a click at the idler detector.
pub fn herald_click(tmsv: &Tmsv, idler_det: &DetectorModel) -> Result<(GaussianMixture, f64)> {
    let (pnst, n) = herald_no_click(tmsv, idler_det)?;
    let p_click = 1.0 - n;
    if p_click < HERALD_GUARD {
        return Err(Error::DegenerateHeralding(p_click));
    }
    let vst = GaussianMixture::new(vec![tmsv.signal(), pnst], vec![1.0 / p_click, -n / p_click])?;
    Ok((vst, p_click))
}

/// Mean photon number of a PNST read off its covariance.
pub fn thermal_mean(state: &GaussianState) -> f64 {
    0.5 * state.cov().trace() - 0.5
}

fn thermal_component_mean(state: &GaussianState) -> Result<f64> {
    if state.n_modes() != 1 {
        return Err(Error::UnsupportedShape("multimode components"));
    }
    let cov = state.cov();
    let scale = cov[(0, 0)].abs().max(1.0);
    if state.mean().amax() > 1e-12 {
        return Err(Error::UnsupportedShape("displaced components"));
    }
    if (cov[(0, 0)] - cov[(1, 1)]).abs() > 1e-12 * scale || cov[(0, 1)].abs() > 1e-12 * scale {
        return Err(Error::UnsupportedShape("squeezed components"));
    }
    Ok(cov[(0, 0)] - 0.5)
}

/// Photon-number distribution `p(0..=n_max)` of a thermal state or a signed
/// mixture of thermal states.
pub fn photon_distribution(state: &SignalState, n_max: usize) -> Result<Vec<f64>> {
    let terms = state
        .terms()
        .into_iter()
        .map(|(w, c)| thermal_component_mean(c).map(|m| (w, m)))
        .collect::<Result<Vec<_>>>()?;
    let mut dist = vec![0.0; n_max + 1];
    for (w, m) in terms {
        let ratio = m / (1.0 + m);
        let mut term = 1.0 / (1.0 + m);
        for p in dist.iter_mut() {
            *p += w * term;
            term *= ratio;
        }
    }
    for p in dist.iter_mut() {
        if *p < -1e-12 {
            return Err(Error::UnphysicalMixture(*p));
        }
        *p = p.max(0.0);
    }
    Ok(dist)
}

pub fn wigner_mixture(mix: &GaussianMixture, x: &[f64]) -> Result<f64> {
    mix.iter().map(|(w, c)| gaussian::wigner(c, x).map(|v| w * v)).sum()
}

/// One slice of heralded-state Wigner functions along the q axis (p = 0).
#[derive(Clone, Debug, PartialEq)]
pub struct WignerSlice {
    pub eta_i: f64,
    pub x: Vec<f64>,
    pub w_pnst: Vec<f64>,
    /// `NaN` everywhere when heralding is degenerate.
    pub w_vst: Vec<f64>,
}

pub fn wigner_slice(nbar: f64, idler_det: &DetectorModel, xs: &[f64]) -> Result<WignerSlice> {
    let tmsv = Tmsv::new(nbar)?;
    let (pnst, _) = herald_no_click(&tmsv, idler_det)?;
    let vst = match herald_click(&tmsv, idler_det) {
        Ok((m, _)) => Some(m),
        Err(Error::DegenerateHeralding(_)) => None,
        Err(e) => return Err(e),
    };
    let mut slice = WignerSlice {
        eta_i: idler_det.eta,
        x: xs.to_vec(),
        w_pnst: Vec::with_capacity(xs.len()),
        w_vst: Vec::with_capacity(xs.len()),
    };
    for &x in xs {
        slice.w_pnst.push(gaussian::wigner(&pnst, &[x, 0.0])?);
        slice.w_vst.push(match &vst {
            Some(m) => wigner_mixture(m, &[x, 0.0])?,
            None => f64::NAN,
        });
    }
    Ok(slice)
}

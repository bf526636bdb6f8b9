//! Geiger-mode click detection with finite efficiency and thermal dark counts.
//!
//! An imperfect detector `(η, n̄_d)` acting on a state gives the same no-click
//! probability as a perfect vacuum projection after the state has been
//! attenuated by `η` with `n̄_d` thermal photons added at the output. Both
//! constraints `P(×|vac) = 1/(1+n̄_d)` and `P(×|thermal n) = 1/(1+n̄_d+ηn)`
//! fix the channel uniquely, and its action on coherent states reproduces the
//! geometric POVM weights exactly.

use serde::{Deserialize, Serialize};

use crate::error::{check_nonneg, check_range, Error, Result};
use crate::gaussian::{self, GaussianState};
use crate::mixture::SignalState;

const CLAMP_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub eta: f64,
    pub nbar_d: f64,
}

impl DetectorModel {
    pub fn new(eta: f64, nbar_d: f64) -> Result<Self> {
        let det = Self { eta, nbar_d };
        det.validate()?;
        Ok(det)
    }

    pub const fn perfect() -> Self {
        Self { eta: 1.0, nbar_d: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        check_range("eta", self.eta, 0.0, 1.0, "[0, 1]")?;
        check_nonneg("nbar_d", self.nbar_d)
    }

    /// Click probability with no light on the detector.
    pub fn dark_click_prob(&self) -> f64 {
        self.nbar_d / (1.0 + self.nbar_d)
    }

    /// The state a perfect detector would need to see to reproduce this
    /// detector's statistics on `state` (single mode).
    pub fn pre_attenuate(&self, state: &GaussianState) -> GaussianState {
        state.attenuate_mode(0, self.eta, self.nbar_d)
    }
}

fn require_single_mode(n: usize) -> Result<()> {
    if n == 1 {
        Ok(())
    } else {
        Err(Error::Dimension(format!("click detection acts on one mode, got {n}")))
    }
}

pub fn no_click_prob(state: &GaussianState, det: &DetectorModel) -> Result<f64> {
    det.validate()?;
    require_single_mode(state.n_modes())?;
    gaussian::overlap(&det.pre_attenuate(state), &GaussianState::vacuum(1))
}

/// Signed-mixture aware no-click probability, before any clamping.
pub fn no_click_prob_signal(state: &SignalState, det: &DetectorModel) -> Result<f64> {
    require_single_mode(state.n_modes())?;
    if let SignalState::Mixture(m) = state {
        let total: f64 = m.weights().iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::WeightSum(total));
        }
    }
    state
        .terms()
        .into_iter()
        .map(|(w, c)| no_click_prob(c, det).map(|p| w * p))
        .sum()
}

pub fn click_prob(state: &SignalState, det: &DetectorModel) -> Result<f64> {
    let p = 1.0 - no_click_prob_signal(state, det)?;
    clamp_probability(p)
}

pub(crate) fn clamp_probability(p: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else if p > -CLAMP_TOL && p < 1.0 + CLAMP_TOL {
        Ok(p.clamp(0.0, 1.0))
    } else {
        Err(Error::UnphysicalMixture(p))
    }
}

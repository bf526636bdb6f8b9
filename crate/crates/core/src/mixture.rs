//! Signed mixtures of Gaussian states.
//!
//! Heralding on an idler click leaves the signal in a non-Gaussian state that
//! is still an affine combination of two thermal states. Weights may be
//! negative but must sum to one; everything linear in the density operator
//! is evaluated per component and recombined.

use crate::error::{Error, Result};
use crate::gaussian::{self, GaussianState};

const WEIGHT_SUM_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMixture {
    components: Vec<GaussianState>,
    weights: Vec<f64>,
}

impl GaussianMixture {
    pub fn new(components: Vec<GaussianState>, weights: Vec<f64>) -> Result<Self> {
        if components.is_empty() || components.len() != weights.len() {
            return Err(Error::Dimension(format!(
                "{} components with {} weights",
                components.len(),
                weights.len()
            )));
        }
        let n = components[0].n_modes();
        if components.iter().any(|c| c.n_modes() != n) {
            return Err(Error::Dimension("mixture components differ in mode count".into()));
        }
        let total: f64 = weights.iter().sum();
        if !((total - 1.0).abs() <= WEIGHT_SUM_TOL) {
            return Err(Error::WeightSum(total));
        }
        Ok(Self { components, weights })
    }

    pub fn components(&self) -> &[GaussianState] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_modes(&self) -> usize {
        self.components[0].n_modes()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &GaussianState)> {
        self.weights.iter().copied().zip(self.components.iter())
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.iter().map(|(w, c)| w * c.mean_photon_number()).sum()
    }

    /// Applies a per-component map, keeping the weights.
    pub fn map_components<F>(&self, f: F) -> Result<GaussianMixture>
    where
        F: Fn(&GaussianState) -> Result<GaussianState>,
    {
        Ok(GaussianMixture {
            components: self.components.iter().map(f).collect::<Result<_>>()?,
            weights: self.weights.clone(),
        })
    }
}

impl From<GaussianState> for GaussianMixture {
    fn from(state: GaussianState) -> Self {
        Self {
            components: vec![state],
            weights: vec![1.0],
        }
    }
}

/// Either kind of single-mode probe the protocol sends.
#[derive(Clone, Debug, PartialEq)]
pub enum SignalState {
    Gaussian(GaussianState),
    Mixture(GaussianMixture),
}

impl SignalState {
    pub fn n_modes(&self) -> usize {
        match self {
            SignalState::Gaussian(s) => s.n_modes(),
            SignalState::Mixture(m) => m.n_modes(),
        }
    }

    /// Weighted components; a Gaussian state is one component of weight 1.
    pub fn terms(&self) -> Vec<(f64, &GaussianState)> {
        match self {
            SignalState::Gaussian(s) => vec![(1.0, s)],
            SignalState::Mixture(m) => m.iter().collect(),
        }
    }

    pub fn map_components<F>(&self, f: F) -> Result<SignalState>
    where
        F: Fn(&GaussianState) -> Result<GaussianState>,
    {
        Ok(match self {
            SignalState::Gaussian(s) => SignalState::Gaussian(f(s)?),
            SignalState::Mixture(m) => SignalState::Mixture(m.map_components(f)?),
        })
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.terms().iter().map(|(w, c)| w * c.mean_photon_number()).sum()
    }

    pub fn wigner(&self, x: &[f64]) -> Result<f64> {
        self.terms()
            .into_iter()
            .map(|(w, c)| gaussian::wigner(c, x).map(|v| w * v))
            .sum()
    }
}

impl From<GaussianState> for SignalState {
    fn from(s: GaussianState) -> Self {
        SignalState::Gaussian(s)
    }
}

impl From<GaussianMixture> for SignalState {
    fn from(m: GaussianMixture) -> Self {
        SignalState::Mixture(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::thermal_state;

    #[test]
    fn weights_must_sum_to_one() {
        let t = thermal_state(1.0).unwrap();
        let v = GaussianState::vacuum(1);
        assert!(GaussianMixture::new(vec![t.clone(), v.clone()], vec![2.0, -1.0]).is_ok());
        assert!(matches!(
            GaussianMixture::new(vec![t.clone(), v.clone()], vec![2.0, -0.9]),
            Err(Error::WeightSum(_))
        ));
        assert!(GaussianMixture::new(vec![t, v], vec![1.0]).is_err());
        assert!(GaussianMixture::new(vec![], vec![]).is_err());
    }

    #[test]
    fn mixed_mode_counts_rejected() {
        let err = GaussianMixture::new(vec![GaussianState::vacuum(1), GaussianState::vacuum(2)], vec![0.5, 0.5]);
        assert!(matches!(err, Err(Error::Dimension(_))));
    }

    #[test]
    fn photon_number_is_linear() {
        let m = GaussianMixture::new(vec![thermal_state(1.0).unwrap(), GaussianState::vacuum(1)], vec![2.0, -1.0]).unwrap();
        assert!((m.mean_photon_number() - 2.0).abs() < 1e-14);
    }
}

//! Single-shot target detection with click detectors.
//!
//! Under H0 the receiver sees only the thermal background; under H1 the probe
//! comes back through a loss channel of transmissivity `κ` that also injects
//! the background. Closed forms are used for speed; the `*_composed`
//! functions rebuild the same numbers from states and channels and serve as
//! an internal cross-check.

use serde::{Deserialize, Serialize};

use crate::click::{self, clamp_probability, DetectorModel};
use crate::conditioning::{self, Tmsv, HERALD_GUARD};
use crate::error::{check_nonneg, Error, Result};
use crate::gaussian::{self, coherent_state};
use crate::mixture::SignalState;

pub const POSTERIOR_EPS: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    Coherent,
    Tmsv,
    TmsvMatched,
}

impl ProbeKind {
    pub const ALL: [ProbeKind; 3] = [ProbeKind::Coherent, ProbeKind::Tmsv, ProbeKind::TmsvMatched];

    pub fn label(&self) -> &'static str {
        match self {
            ProbeKind::Coherent => "coherent",
            ProbeKind::Tmsv => "tmsv",
            ProbeKind::TmsvMatched => "tmsv_matched",
        }
    }

    pub fn is_heralded(&self) -> bool {
        !matches!(self, ProbeKind::Coherent)
    }
}

/// Which state actually went out on a shot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Coherent,
    Pnst,
    Vst,
}

impl Branch {
    pub fn label(&self) -> &'static str {
        match self {
            Branch::Coherent => "coherent",
            Branch::Pnst => "pnst",
            Branch::Vst => "vst",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Click,
    NoClick,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub kappa: f64,
    pub nbar_b: f64,
    pub signal_det: DetectorModel,
    pub idler_det: DetectorModel,
    /// Mean photon number of the probe; for `TmsvMatched` this is the
    /// reference coherent brightness that the TMSV is click-matched to.
    pub nbar: f64,
    pub probe_kind: ProbeKind,
    /// Efficiency of a hypothetical interceptor used for click matching;
    /// defaults to the receiving detector's efficiency.
    pub intercept_eta: Option<f64>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(Error::Domain {
                name: "kappa",
                value: self.kappa,
                expected: "(0, 1)",
            });
        }
        check_nonneg("nbar_b", self.nbar_b)?;
        check_nonneg("nbar", self.nbar)?;
        self.signal_det.validate()?;
        self.idler_det.validate()?;
        if let Some(eta) = self.intercept_eta {
            crate::error::check_range("intercept_eta", eta, 0.0, 1.0, "[0, 1]")?;
        }
        Ok(())
    }

    pub fn with_probe(self, probe_kind: ProbeKind) -> Self {
        Self { probe_kind, ..self }
    }

    pub fn with_nbar(self, nbar: f64) -> Self {
        Self { nbar, ..self }
    }

    pub fn intercept_eta(&self) -> f64 {
        self.intercept_eta.unwrap_or(self.signal_det.eta)
    }

    /// Per-arm TMSV brightness actually used by a heralded probe.
    pub fn tmsv_nbar(&self) -> Result<f64> {
        match self.probe_kind {
            ProbeKind::TmsvMatched => match_click_probability(self.nbar, self.intercept_eta()),
            _ => Ok(self.nbar),
        }
    }

    /// Thermal parameter `1 + n̄_d + η n̄_b` that appears in every return
    /// probability.
    fn background_scale(&self) -> f64 {
        1.0 + self.signal_det.nbar_d + self.signal_det.eta * self.nbar_b
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotLikelihoods {
    pub p_click_h0: f64,
    pub p_click_h1: f64,
    pub probe_label: Branch,
}

impl ShotLikelihoods {
    pub fn new(p_click_h0: f64, p_click_h1: f64, probe_label: Branch) -> Result<Self> {
        for (name, p) in [("p_click_h0", p_click_h0), ("p_click_h1", p_click_h1)] {
            crate::error::check_range(name, p, 0.0, 1.0, "[0, 1]")?;
        }
        Ok(Self {
            p_click_h0,
            p_click_h1,
            probe_label,
        })
    }
}

/// The state reaching the receiver when the object is present.
pub fn return_state_h1(probe: &SignalState, scenario: &Scenario) -> Result<SignalState> {
    scenario.validate()?;
    probe.map_components(|c| gaussian::loss_channel(c, scenario.kappa, scenario.nbar_b))
}

/// False-alarm probability; independent of the probe.
pub fn p_click_h0(scenario: &Scenario) -> f64 {
    1.0 - 1.0 / scenario.background_scale()
}

pub fn p_click_h1_coherent(scenario: &Scenario) -> f64 {
    let b = scenario.background_scale();
    let signal = scenario.signal_det.eta * scenario.kappa * scenario.nbar;
    1.0 - (-signal / b).exp() / b
}

/// Idler no-click probability `N` for the scenario's TMSV.
pub fn herald_no_click_prob(scenario: &Scenario) -> Result<f64> {
    let n = scenario.tmsv_nbar()?;
    let d = &scenario.idler_det;
    Ok(1.0 / (1.0 + d.nbar_d + d.eta * n))
}

/// Diagonal entry of the PNST covariance after the object and detector.
fn pnst_return_variance(scenario: &Scenario, n: f64) -> f64 {
    let (eta, k) = (scenario.signal_det.eta, scenario.kappa);
    let (eta_i, nd_i) = (scenario.idler_det.eta, scenario.idler_det.nbar_d);
    0.5 - eta * k
        + eta * scenario.nbar_b
        + scenario.signal_det.nbar_d
        + eta * k * (1.0 + n) * (1.0 + nd_i) / (1.0 + nd_i + n * eta_i)
}

/// Diagonal entry of the unconditioned signal covariance after the object and
/// detector.
fn thermal_return_variance(scenario: &Scenario, n: f64) -> f64 {
    0.5 + (scenario.nbar_b + n * scenario.kappa) * scenario.signal_det.eta + scenario.signal_det.nbar_d
}

pub fn p_click_h1_pnst(scenario: &Scenario) -> Result<f64> {
    let n = scenario.tmsv_nbar()?;
    Ok(1.0 - 1.0 / (pnst_return_variance(scenario, n) + 0.5))
}

pub fn p_click_h1_vst(scenario: &Scenario) -> Result<f64> {
    let n = scenario.tmsv_nbar()?;
    let herald_n = herald_no_click_prob(scenario)?;
    let p_herald = 1.0 - herald_n;
    if p_herald < HERALD_GUARD {
        return Err(Error::DegenerateHeralding(p_herald));
    }
    let thermal = 1.0 / (thermal_return_variance(scenario, n) + 0.5);
    let pnst = 1.0 / (pnst_return_variance(scenario, n) + 0.5);
    clamp_probability(1.0 - (thermal - herald_n * pnst) / p_herald)
}

/// Closed-form likelihood pair for one branch.
pub fn shot_likelihoods(scenario: &Scenario, branch: Branch) -> Result<ShotLikelihoods> {
    let p1 = match branch {
        Branch::Coherent => p_click_h1_coherent(scenario),
        Branch::Pnst => p_click_h1_pnst(scenario)?,
        Branch::Vst => p_click_h1_vst(scenario)?,
    };
    ShotLikelihoods::new(p_click_h0(scenario), p1, branch)
}

/// The state sent on a branch, built from the TMSV or coherent state.
pub fn probe_state(scenario: &Scenario, branch: Branch) -> Result<SignalState> {
    match branch {
        Branch::Coherent => Ok(coherent_state(scenario.nbar)?.into()),
        Branch::Pnst => {
            let tmsv = Tmsv::new(scenario.tmsv_nbar()?)?;
            Ok(conditioning::herald_no_click(&tmsv, &scenario.idler_det)?.0.into())
        }
        Branch::Vst => {
            let tmsv = Tmsv::new(scenario.tmsv_nbar()?)?;
            Ok(conditioning::herald_click(&tmsv, &scenario.idler_det)?.0.into())
        }
    }
}

/// `P(click | H1)` recomputed as herald → return channel → click POVM.
pub fn p_click_h1_composed(scenario: &Scenario, branch: Branch) -> Result<f64> {
    let probe = probe_state(scenario, branch)?;
    let returned = return_state_h1(&probe, scenario)?;
    click::click_prob(&returned, &scenario.signal_det)
}

/// `P(click | H0)` recomputed from the background state.
pub fn p_click_h0_composed(scenario: &Scenario) -> Result<f64> {
    let background = gaussian::thermal_state(scenario.nbar_b)?;
    click::click_prob(&background.into(), &scenario.signal_det)
}

/// Bayes update of `P(H1)` after one detector outcome, clamped to
/// `[ε, 1 − ε]`.
pub fn posterior_update(prior_h1: f64, likelihoods: &ShotLikelihoods, outcome: Outcome) -> Result<f64> {
    crate::error::check_range("prior_h1", prior_h1, 0.0, 1.0, "[0, 1]")?;
    let (l1, l0) = match outcome {
        Outcome::Click => (likelihoods.p_click_h1, likelihoods.p_click_h0),
        Outcome::NoClick => (1.0 - likelihoods.p_click_h1, 1.0 - likelihoods.p_click_h0),
    };
    let num = prior_h1 * l1;
    let den = num + (1.0 - prior_h1) * l0;
    if den <= 0.0 {
        return Err(Error::UndefinedUpdate);
    }
    Ok((num / den).clamp(POSTERIOR_EPS, 1.0 - POSTERIOR_EPS))
}

/// TMSV brightness whose thermal click probability at an interceptor of
/// efficiency `eta` equals that of a coherent state with `nbar_alpha`.
pub fn match_click_probability(nbar_alpha: f64, eta: f64) -> Result<f64> {
    check_nonneg("nbar_alpha", nbar_alpha)?;
    crate::error::check_range("eta", eta, 0.0, 1.0, "[0, 1]")?;
    if eta == 0.0 {
        return Err(Error::UnconstrainedMatching);
    }
    Ok((eta * nbar_alpha).exp_m1() / eta)
}

/// How a TMSV single-shot error treats the heralding outcome.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMode {
    /// Conditioned on a successful (click) herald.
    #[default]
    VstBranch,
    /// Averaged over both heralding outcomes with their probabilities.
    HeraldAveraged,
}

fn click_error(p_h1: f64, p_h0: f64) -> f64 {
    0.5 * (1.0 - p_h1) + 0.5 * p_h0
}

/// Equal-prior error of deciding "present" on a click.
pub fn single_shot_error(scenario: &Scenario, mode: ErrorMode) -> Result<f64> {
    scenario.validate()?;
    let p0 = p_click_h0(scenario);
    match scenario.probe_kind {
        ProbeKind::Coherent => Ok(click_error(p_click_h1_coherent(scenario), p0)),
        ProbeKind::Tmsv | ProbeKind::TmsvMatched => match mode {
            ErrorMode::VstBranch => Ok(click_error(p_click_h1_vst(scenario)?, p0)),
            ErrorMode::HeraldAveraged => {
                let n = herald_no_click_prob(scenario)?;
                let pnst = click_error(p_click_h1_pnst(scenario)?, p0);
                if 1.0 - n < HERALD_GUARD {
                    return Ok(pnst);
                }
                Ok(n * pnst + (1.0 - n) * click_error(p_click_h1_vst(scenario)?, p0))
            }
        },
    }
}

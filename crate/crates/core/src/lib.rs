//! Quantum illumination with Gaussian states and click detectors.
//!
//! The Gaussian modules (`gaussian`, `click`, `conditioning`,
//! `illumination`) give closed-form click statistics for coherent and
//! heralded two-mode-squeezed probes. `fock` recomputes them in a truncated
//! number basis and supplies the Helstrom and Chernoff bounds. `sequential`
//! runs Bayesian multi-shot detection as Monte-Carlo ensembles, and `cli`
//! drives it all from config files.

// Range checks are written as `!(ok)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod click;
pub mod conditioning;
pub mod config;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod illumination;
pub mod mixture;
pub mod sequential;

pub use click::DetectorModel;
pub use error::{Error, Result};
pub use gaussian::GaussianState;
pub use illumination::{Branch, Outcome, ProbeKind, Scenario};
pub use mixture::{GaussianMixture, SignalState};

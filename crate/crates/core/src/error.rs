use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{name} = {value} is outside its domain ({expected})")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is singular or not positive definite: {0}")]
    Singular(&'static str),

    #[error("state is unphysical: smallest symplectic eigenvalue {0} < 1/2")]
    Unphysical(f64),

    #[error("not symplectic: {0}")]
    NotSymplectic(String),

    #[error("mixture weights sum to {0}, expected 1")]
    WeightSum(f64),

    #[error("probability {0} is outside [0, 1]; the mixture is unphysical")]
    UnphysicalMixture(f64),

    #[error("heralding click probability {0:e} is too small to condition on")]
    DegenerateHeralding(f64),

    #[error("photon distribution requires zero-mean thermal components; use the Fock oracle for {0}")]
    UnsupportedShape(&'static str),

    #[error("click matching needs a positive intercept efficiency")]
    UnconstrainedMatching,

    #[error("posterior update undefined: both outcome branches have zero probability")]
    UndefinedUpdate,

    #[error("Fock truncation dim {dim} too small for {quantity}; need at least {required}")]
    Truncation { quantity: String, dim: usize, required: usize },

    #[error("operator is not Hermitian (deviation {0:e})")]
    NonHermitian(f64),

    #[error("configs cannot be paired: {0}")]
    Pairing(String),

    #[error("heralding starved: only {counted} of {wanted} counted shots after {sent} sent")]
    HeraldingStarved { counted: usize, wanted: usize, sent: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(name: &'static str, value: f64, lo: f64, hi: f64, expected: &'static str) -> Result<()> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(())
    } else {
        Err(Error::Domain { name, value, expected })
    }
}

pub(crate) fn check_nonneg(name: &'static str, value: f64) -> Result<()> {
    check_range(name, value, 0.0, f64::INFINITY, ">= 0")
}

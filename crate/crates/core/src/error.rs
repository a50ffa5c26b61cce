use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model parameters: {}", .0.join("; "))]
    InvalidParams(Vec<String>),

    #[error("scaled time undefined for uncoupled cavities (lambda = 0)")]
    UncoupledCavities,

    #[error("state is not normalized (norm^2 = {0})")]
    Unnormalized(f64),

    #[error("photon-difference ratio undefined: total mean photon number is {0}")]
    NoPhotons(f64),

    #[error("truncation at cutoff ({cutoff_a}, {cutoff_b}) is inadequate: estimated leakage {leakage:.3e}; use a larger cutoff")]
    CutoffInadequate {
        cutoff_a: usize,
        cutoff_b: usize,
        leakage: f64,
    },

    #[error("Fock cutoff would exceed the ceiling of {ceiling} photons per mode before converging (last change {last_change:.3e}); strong pumping or parametrically unstable regime")]
    CutoffCeiling { ceiling: usize, last_change: f64 },

    #[error("negative mean pump amplitude {0}")]
    NegativeMean(f64),

    #[error("{needed} trials needed, got {got}")]
    TooFewTrials { needed: usize, got: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

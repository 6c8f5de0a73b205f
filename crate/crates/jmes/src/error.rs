//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failures raised by model construction, numerical routines and estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A probability argument fell outside the admissible interval.
    #[error("probability {value} outside the domain {domain}")]
    Domain { value: f64, domain: &'static str },

    /// A model parameter violates its family's constraints.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The upper (or lower) tail mean of a margin diverges.
    #[error("tail mean diverges: {0}")]
    NonintegrableTail(String),

    /// EPW is undefined when the quantile is zero.
    #[error("quantile is zero at p = {0}")]
    ZeroQuantile(f64),

    /// The conditioning event has (numerically) zero probability.
    #[error("conditioning event has probability {tail:e} at alpha = {alpha}, beta = {beta}")]
    DegenerateConditioning { alpha: f64, beta: f64, tail: f64 },

    /// A ratio measure's baseline is zero.
    #[error("zero denominator in {0}")]
    ZeroDenominator(String),

    /// An iterative routine hit its iteration budget; `best` is the last iterate.
    #[error("{what} did not converge (best iterate {best:?}, objective {objective})")]
    NonConvergence { what: String, best: Vec<f64>, objective: f64 },

    /// All observations are identical.
    #[error("degenerate sample: all observations are equal")]
    DegenerateSample,

    /// Too few observations for the requested estimator.
    #[error("need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// The Monte Carlo conditioning event is too rare for the requested sample size.
    #[error("expected {expected:.1} conditional samples, need at least 100")]
    InsufficientTailSamples { expected: f64 },

    /// A density-based check was requested for a margin without a density.
    #[error("density unavailable for {0}")]
    DensityUnavailable(String),

    /// Log losses need strictly positive prices.
    #[error("non-positive price {value} at index {index}")]
    NonPositivePrice { index: usize, value: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

/// Checks `p ∈ (0,1)`.
pub(crate) fn open_unit(p: f64) -> Result<f64> {
    if p > 0.0 && p < 1.0 {
        Ok(p)
    } else {
        Err(Error::Domain { value: p, domain: "(0,1)" })
    }
}

/// Checks `p ∈ [0,1)`.
pub(crate) fn half_open_unit(p: f64) -> Result<f64> {
    if (0.0..1.0).contains(&p) {
        Ok(p)
    } else {
        Err(Error::Domain { value: p, domain: "[0,1)" })
    }
}

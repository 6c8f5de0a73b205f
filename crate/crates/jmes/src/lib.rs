//! Joint marginal expected shortfall (JMES) and related systemic risk
//! measures over bivariate copula models.

pub mod copulas;
pub mod distortion;
pub mod distributions;
pub mod error;
pub mod measures;
pub mod optim;
pub mod oracle;
pub mod orders;
pub mod pot;
pub mod quad;
pub mod rng;
pub mod special;

pub use error::{Error, Result};

//! Command-line front end for the `jmes` library: report pipeline over
//! price or loss series, figure data, model fitting, order checks and
//! Monte Carlo validation.

pub mod config;
pub mod error;
pub mod figures;
pub mod ingest;
pub mod pipeline;
pub mod synth;
pub mod validate;

pub use error::{CliError, Result};

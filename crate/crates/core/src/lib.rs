//! Fusion of a trusted primary sensor cue with a secondary cue learned from it.
//!
//! * [`model`]: the minimal Gaussian model and seeded sampling.
//! * [`theory`]: closed-form slope, proxy variance, fusion weights, expected
//!   errors and the favorability thresholds.
//! * [`estimation`]: robot-side regressors, variance estimators and fusion.
//! * [`sensor`]: barometer/sonar case-study data path.
//! * [`harness`]: Monte Carlo verification, case-study protocol and
//!   distribution analysis.
//! * [`cli`]: the `ssl-fusion` command-line front end.

pub mod cli;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod model;
pub mod rng;
pub mod sensor;
pub mod stats;
pub mod theory;

pub use error::{Error, Result};
pub use model::{draw, Dataset, ModelParams, Sample};

/// Seed used whenever none is given.
pub const DEFAULT_SEED: u64 = 42;

//! Failure-count evaluation toolkit.
//!
//! Turns per-instance failure counts into an empirical distribution, fits
//! its power-law decay rate, maps the rate onto the Limited / Capable /
//! Autonomous levels, and extrapolates decay rates across model sizes into
//! parameter, timeline and hardware estimates. A d-dimensional Abelian
//! sandpile simulator produces avalanche-size data for the same pipeline.

pub mod classifier;
pub mod distributions;
pub mod error;
pub mod pipeline;
pub mod plot;
pub mod powerlaw;
pub mod records;
pub mod regression;
pub mod sandpile;
pub mod scale_invariance;
pub mod scaling;
pub mod synth;

pub use classifier::{classify, classify_alpha, IntelligenceLevel};
pub use distributions::{
    average_distributions, empirical_distribution, EmpiricalDistribution, LogBinnedDistribution,
};
pub use error::{Error, Result};
pub use powerlaw::{fit_powerlaw, fit_powerlaw_mle, FitMethod, FitRange, PowerLawFit};
pub use records::{FailureRecord, RecordFormat, RunManifest, RunStore};
pub use sandpile::{run_simulation, AvalancheLog, SandpileConfig, SandpileState};
pub use scaling::{HardwareAssumptions, ScalingLine, ScalingPoint, ScalingProjection};

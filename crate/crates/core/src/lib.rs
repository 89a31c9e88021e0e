//! Two-way relay NOMA performance model.
//!
//! Closed-form and numerical outage probabilities, ergodic rates, throughput
//! and energy efficiency of a two-way decode-and-forward relay serving two
//! NOMA user pairs under imperfect or perfect SIC, with a seeded Monte Carlo
//! simulator of the underlying Rayleigh-faded SINRs as an independent check.
//!
//! Every numeric routine is generic over [`Real`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar to `f64`.

pub mod analysis;
pub mod config_file;
pub mod ergodic;
pub mod error;
pub mod metrics;
pub mod model;
pub mod montecarlo;
pub mod num;
pub mod oracle;
pub mod output;
pub mod quadrature;
pub mod specfun;
pub mod sweep;
pub mod validate;

pub use error::{Error, Result};
pub use model::{sample_channel_draw, sinr_set, gamma_threshold, SicMode, Signal, SignalIndex, SignalRole};
pub use num::Real;

pub type SystemConfig = model::SystemConfig<f64>;
pub type ChannelDraw = model::ChannelDraw<f64>;
pub type SinrSet = model::SinrSet<f64>;
pub type PathLoss = model::PathLoss<f64>;
pub type HypoExpParams = specfun::HypoExpParams<f64>;
pub type OutageResult = analysis::OutageResult<f64>;
pub type OutageIntermediates = analysis::OutageIntermediates<f64>;
pub type RateIntermediates = ergodic::RateIntermediates<f64>;
pub type SystemThroughput = metrics::SystemThroughput<f64>;

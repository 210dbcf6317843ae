//! Spectral estimation of integrated volatility and integrated covolatility
//! from noisy, non-synchronous high-frequency observations.
//!
//! The crate provides:
//!
//! - the sine-basis spectral statistics machinery ([`basis`], [`spectral`]),
//! - a path simulator with stochastic volatility, quantile-transform sampling
//!   times and additive observation noise ([`sim`]),
//! - the one-dimensional spectral integrated-volatility pipeline with oracle
//!   and adaptive weights ([`est1d`]),
//! - the multivariate machinery: local noise levels, pilot covolatility, the
//!   bivariate spectral covolatility estimator and the local method of
//!   moments ([`estmd`], [`matrixops`]),
//! - closed-form asymptotic variance targets ([`asymptotics`]),
//! - a deterministic, replication-parallel Monte Carlo harness
//!   ([`montecarlo`]).
//!
//! The numeric core is generic over the scalar type (see [`scalar::Scalar`]);
//! the aliases below fix `f64`, which is what the CLI and the acceptance
//! suite use.

pub mod asymptotics;
pub mod basis;
pub mod error;
pub mod est1d;
pub mod estmd;
pub mod grid;
pub mod io;
pub mod matrixops;
pub mod montecarlo;
pub mod report;
pub mod scalar;
pub mod sim;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// `f64` aliases for the main entry-point types.
pub type BinGrid64 = grid::BinGrid<f64>;

pub type ScenarioConfig64 = sim::ScenarioConfig<f64>;
pub type PathBundle64 = sim::PathBundle<f64>;
pub type ObservationSet64 = sim::ObservationSet<f64>;
pub type SpectralArray64 = spectral::SpectralArray<f64>;
pub type EstimateReport64 = report::EstimateReport<f64>;
pub type MatrixEstimateReport64 = report::MatrixEstimateReport<f64>;

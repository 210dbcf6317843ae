//! Ground-truth simulator: semimartingale paths with stochastic volatility,
//! quantile-transform sampling times and additive observation noise.

mod config;
mod observations;
mod paths;

pub use config::{
    seasonality, CountSpec, NoiseDistribution, NoiseSpec, SamplingScheme, SamplingSpec,
    ScalarSpec, ScenarioConfig, VolatilityModel,
};
pub use observations::{
    previous_tick_synchronize, sample_noisy_observations, ComponentObservations, ObservationSet,
};
pub use paths::{
    rng_from_seed, simulate_paths, simulate_signal_given_vol, simulate_volatility, PathBundle,
    VolatilityPath,
};

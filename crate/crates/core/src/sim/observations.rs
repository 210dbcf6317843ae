//! Noisy, possibly non-synchronous observation sets.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::config::{NoiseDistribution, SamplingScheme, ScenarioConfig};
use super::paths::PathBundle;
use crate::error::{Error, Result};
use crate::scalar::{count, real, Scalar};

/// Observations of one component: `n+1` (time, value) pairs with
/// `t_0 = 0 < t_1 < … < t_n = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentObservations<T> {
    pub times: Vec<T>,
    pub values: Vec<T>,
    /// Whether the times are the regular grid `i/n` (enables the exact
    /// discrete Fourier fast path).
    pub regular: bool,
}

impl<T: Scalar> ComponentObservations<T> {
    /// Observations on the regular grid `i/n` from the raw values.
    pub fn regular(values: Vec<T>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid_argument("need at least 2 observations"));
        }
        let n = values.len() - 1;
        let times = (0..=n).map(|i| count::<T>(i) / count(n)).collect();
        let obs = ComponentObservations { times, values, regular: true };
        obs.validate()?;
        Ok(obs)
    }

    pub fn irregular(times: Vec<T>, values: Vec<T>) -> Result<Self> {
        let obs = ComponentObservations { times, values, regular: false };
        obs.validate()?;
        Ok(obs)
    }

    /// Number of increments `n`.
    pub fn n_increments(&self) -> usize {
        self.times.len() - 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.len() < 2 {
            return Err(Error::invalid_argument("need at least 2 observations"));
        }
        if self.times.len() != self.values.len() {
            return Err(Error::invalid_argument("times and values lengths differ"));
        }
        if !self.values.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid_argument("observation values must be finite"));
        }
        let eps = real::<T>(1e-9);
        if self.times[0].abs() > eps {
            return Err(Error::invalid_argument("first observation time must be 0"));
        }
        if (self.times[self.times.len() - 1] - T::one()).abs() > eps {
            return Err(Error::invalid_argument("last observation time must be 1"));
        }
        for w in self.times.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::invalid_argument("observation times must be strictly increasing"));
            }
        }
        Ok(())
    }

    /// Increment `ΔY_i = Y_i - Y_{i-1}` for `i = 1..=n` (0-indexed slot `i-1`).
    #[inline]
    pub fn increment(&self, i: usize) -> T {
        self.values[i + 1] - self.values[i]
    }

    /// Midpoint `(t_i + t_{i-1})/2` of increment `i` (0-indexed slot).
    #[inline]
    pub fn midpoint(&self, i: usize) -> T {
        (self.times[i + 1] + self.times[i]) / real(2.0)
    }

    /// `(2n)⁻¹ Σ (Δ_i Y)²`, the noise variance estimator (d = 1) and the
    /// global factor of the local noise level estimator.
    pub fn half_mean_square_increment(&self) -> T {
        let n = self.n_increments();
        let mut acc = T::zero();
        for i in 0..n {
            let d = self.increment(i);
            acc += d * d;
        }
        acc / (real::<T>(2.0) * count(n))
    }
}

/// Observations of all components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSet<T> {
    pub components: Vec<ComponentObservations<T>>,
}

impl<T: Scalar> ObservationSet<T> {
    pub fn new(components: Vec<ComponentObservations<T>>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid_argument("observation set needs >= 1 component"));
        }
        for c in &components {
            c.validate()?;
        }
        Ok(ObservationSet { components })
    }

    pub fn dimension(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, l: usize) -> &ComponentObservations<T> {
        &self.components[l]
    }
}

/// Samples noisy observations `Y_i^(l) = X_{t_i^(l)}^(l) + ε_i^(l)` from a
/// simulated path. Times follow the component's sampling scheme; noise is
/// i.i.d. per component and independent across components.
pub fn sample_noisy_observations<T: Scalar>(
    paths: &PathBundle<T>,
    config: &ScenarioConfig<T>,
    rng: &mut ChaCha8Rng,
) -> Result<ObservationSet<T>>
where
    StandardNormal: Distribution<T>,
{
    config.validate()?;
    if paths.dimension() != config.d {
        return Err(Error::invalid_argument("path and config dimensions differ"));
    }
    let mut components = Vec::with_capacity(config.d);
    for l in 0..config.d {
        let n_l = config.n_component(l);
        if paths.steps() < 10 * n_l {
            return Err(Error::invalid_argument(
                "fine grid too coarse to resolve observation times",
            ));
        }
        let scheme = config.scheme(l);
        let times = sample_times(&scheme, n_l, rng);
        let eta = config.eta(l);
        let values = times
            .iter()
            .map(|&t| paths.x_at(t, l) + draw_noise(config.noise.distribution, eta, rng))
            .collect();
        components.push(ComponentObservations {
            times,
            values,
            regular: scheme.is_equidistant(),
        });
    }
    ObservationSet::new(components)
}

fn sample_times<T: Scalar>(scheme: &SamplingScheme<T>, n: usize, rng: &mut ChaCha8Rng) -> Vec<T>
where
    StandardNormal: Distribution<T>,
{
    match scheme {
        SamplingScheme::Poisson => {
            let mut interior: Vec<T> = (0..n - 1)
                .map(|_| real::<T>(rng.random::<f64>()))
                .collect();
            interior.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
            let mut times = Vec::with_capacity(n + 1);
            times.push(T::zero());
            times.extend(interior);
            times.push(T::one());
            dedup_strictly_increasing(&mut times);
            times
        }
        _ => (0..=n)
            .map(|i| scheme.inverse_cdf(count::<T>(i) / count(n)))
            .collect(),
    }
}

// Ties among drawn uniforms have probability zero but finite precision can
// still produce them; nudge any collision by one ulp-scale step.
fn dedup_strictly_increasing<T: Scalar>(times: &mut [T]) {
    for i in 1..times.len() - 1 {
        if times[i] <= times[i - 1] {
            times[i] = times[i - 1] + real(1e-12);
        }
    }
}

fn draw_noise<T: Scalar>(dist: NoiseDistribution, eta: T, rng: &mut ChaCha8Rng) -> T
where
    StandardNormal: Distribution<T>,
{
    if eta == T::zero() {
        return T::zero();
    }
    match dist {
        NoiseDistribution::Gaussian => {
            let z: T = StandardNormal.sample(rng);
            z * eta
        }
        NoiseDistribution::Uniform => {
            // U(-a, a) with a = η√3 has variance η².
            let a = eta * real::<T>(3.0).sqrt();
            let u: T = real::<T>(rng.random::<f64>());
            (u * real::<T>(2.0) - T::one()) * a
        }
        NoiseDistribution::TwoPoint => {
            if rng.random::<bool>() {
                eta
            } else {
                -eta
            }
        }
    }
}

/// Previous-tick synchronization of every component onto the time grid of
/// `target`, the coarsest-grid reference used by the synchronization
/// robustness check.
pub fn previous_tick_synchronize<T: Scalar>(
    obs: &ObservationSet<T>,
    target: usize,
) -> Result<ObservationSet<T>> {
    if target >= obs.dimension() {
        return Err(Error::invalid_argument("target component out of range"));
    }
    let grid_times = obs.component(target).times.clone();
    let mut components = Vec::with_capacity(obs.dimension());
    for l in 0..obs.dimension() {
        if l == target {
            components.push(obs.component(l).clone());
            continue;
        }
        let src = obs.component(l);
        let mut values = Vec::with_capacity(grid_times.len());
        let mut idx = 0usize;
        for &t in &grid_times {
            while idx + 1 < src.times.len() && src.times[idx + 1] <= t {
                idx += 1;
            }
            values.push(src.values[idx]);
        }
        components.push(ComponentObservations {
            times: grid_times.clone(),
            values,
            regular: false,
        });
    }
    ObservationSet::new(components)
}

//! Fine-grid path simulation.
//!
//! Volatility and signal are simulated separately so the Monte Carlo harness
//! can freeze one volatility realization and redraw the signal's driving
//! Brownian motion per replication:
//!
//! - [`simulate_volatility`] draws the spot volatility factor path,
//! - [`simulate_signal_given_vol`] integrates `X_t = ∫b ds + ∫σ_s dW_s` with
//!   a freshly drawn `W`,
//! - [`simulate_paths`] is the one-shot combination that, for the leverage
//!   model, reuses the same `W` in both the volatility factor and the signal.

use std::sync::Arc;

use nalgebra::DMatrix;
use ndarray::{Array2, Array3};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::{seasonality, ScenarioConfig, VolatilityModel};
use crate::error::{Error, Result};
use crate::grid::to_f64;
use crate::scalar::{count, real, Scalar};

/// Spot-volatility floor applied when the stochastic variance factor is
/// driven negative.
const SIGMA_SQ_FLOOR: f64 = 1e-6;

/// Deterministic RNG used throughout the simulator.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Spot volatility factor σ_s on the fine grid.
#[derive(Debug, Clone)]
pub enum VolRepr<T: Scalar> {
    /// Time-constant factor matrix.
    Constant(DMatrix<T>),
    /// One matrix per grid point, shape `(steps+1, d, d)`.
    Path(Array3<T>),
}

#[derive(Debug, Clone)]
pub struct VolatilityPath<T: Scalar> {
    repr: VolRepr<T>,
    steps: usize,
    d: usize,
    /// Increments of the signal-driving Brownian motion consumed by the
    /// leverage term, for reuse in the joint simulation.
    w_increments: Option<Vec<T>>,
    /// Combined volatility-driving Brownian path `λW + √(1-λ²)W^⊥`.
    driver: Option<Vec<T>>,
    clamp_count: usize,
}

impl<T: Scalar> VolatilityPath<T> {
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    /// Number of grid points at which the variance factor was clamped at the
    /// floor.
    pub fn clamp_count(&self) -> usize {
        self.clamp_count
    }

    pub fn driver(&self) -> Option<&[T]> {
        self.driver.as_deref()
    }

    /// σ at grid index `i` written into `out` (d×d).
    pub fn factor_at(&self, i: usize, out: &mut DMatrix<T>) {
        match &self.repr {
            VolRepr::Constant(m) => out.copy_from(m),
            VolRepr::Path(a) => {
                for r in 0..self.d {
                    for c in 0..self.d {
                        out[(r, c)] = a[[i, r, c]];
                    }
                }
            }
        }
    }

    /// Spot covolatility Σ = σσᵀ at grid index `i`.
    pub fn covolatility_at(&self, i: usize) -> DMatrix<T> {
        let mut f = DMatrix::zeros(self.d, self.d);
        self.factor_at(i, &mut f);
        &f * f.transpose()
    }

    /// Spot squared volatility σ² at grid index `i` (d = 1).
    pub fn sigma_sq_1d(&self, i: usize) -> T {
        match &self.repr {
            VolRepr::Constant(m) => m[(0, 0)] * m[(0, 0)],
            VolRepr::Path(a) => a[[i, 0, 0]] * a[[i, 0, 0]],
        }
    }

    /// Pins this volatility path into a `Grid` volatility model (d = 1), the
    /// representation used to freeze a realization across replications.
    pub fn to_grid_model(&self) -> Result<VolatilityModel<T>> {
        if self.d != 1 {
            return Err(Error::invalid_argument("grid volatility model is one-dimensional"));
        }
        let sigma = match &self.repr {
            VolRepr::Constant(m) => vec![m[(0, 0)]; self.steps + 1],
            VolRepr::Path(a) => (0..=self.steps).map(|i| a[[i, 0, 0]]).collect(),
        };
        Ok(VolatilityModel::Grid { sigma })
    }
}

/// Simulated signal path plus the volatility path that generated it.
#[derive(Debug, Clone)]
pub struct PathBundle<T: Scalar> {
    /// Signal values on the fine grid, shape `(steps+1, d)`.
    x: Array2<T>,
    vol: Arc<VolatilityPath<T>>,
    steps: usize,
    d: usize,
}

impl<T: Scalar> PathBundle<T> {
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn dt(&self) -> T {
        T::one() / count(self.steps)
    }

    pub fn volatility(&self) -> &VolatilityPath<T> {
        &self.vol
    }

    pub fn volatility_arc(&self) -> Arc<VolatilityPath<T>> {
        Arc::clone(&self.vol)
    }

    /// Grid time of index `i`.
    pub fn time(&self, i: usize) -> T {
        count::<T>(i) / count(self.steps)
    }

    /// Signal value of component `l` at the grid point nearest to `t`.
    pub fn x_at(&self, t: T, component: usize) -> T {
        let idx = self.grid_index(t);
        self.x[[idx, component]]
    }

    pub fn x_grid(&self) -> &Array2<T> {
        &self.x
    }

    fn grid_index(&self, t: T) -> usize {
        let pos = to_f64(t * count::<T>(self.steps)).round();
        (pos.max(0.0) as usize).min(self.steps)
    }

    /// Integrated covolatility `∫₀ᵗ Σ_s ds` by the trapezoidal rule on the
    /// fine grid (linear interpolation inside the last partial step).
    pub fn true_integrated_covolatility(&self, t: T) -> DMatrix<T> {
        let d = self.d;
        let mut acc = DMatrix::<T>::zeros(d, d);
        if t <= T::zero() {
            return acc;
        }
        let dt = self.dt();
        let t = t.min(T::one());
        let full = to_f64(t / dt).floor() as usize;
        let full = full.min(self.steps);
        let mut prev = self.vol.covolatility_at(0);
        for i in 1..=full {
            let cur = self.vol.covolatility_at(i);
            acc += (&prev + &cur) * (dt / real::<T>(2.0));
            prev = cur;
        }
        let rem = t - count::<T>(full) * dt;
        if rem > T::zero() && full < self.steps {
            let cur = self.vol.covolatility_at(full + 1);
            // Trapezoid over the partial step, integrand interpolated linearly.
            let frac = rem / dt;
            let end = &prev + (&cur - &prev) * frac;
            acc += (&prev + &end) * (rem / real::<T>(2.0));
        }
        acc
    }

    /// Integrated squared volatility `∫₀ᵗ σ_s² ds` for d = 1.
    pub fn true_integrated_volatility(&self, t: T) -> T {
        self.true_integrated_covolatility(t)[(0, 0)]
    }

    /// σ²_s at the grid point nearest to `t` (d = 1); used by oracle weights.
    pub fn sigma_sq_at(&self, t: T) -> T {
        self.vol.sigma_sq_1d(self.grid_index(t))
    }

    /// Spot covolatility matrix at the grid point nearest to `t`.
    pub fn covolatility_at_time(&self, t: T) -> DMatrix<T> {
        self.vol.covolatility_at(self.grid_index(t))
    }
}

/// Draws the spot volatility factor path.
pub fn simulate_volatility<T: Scalar>(
    config: &ScenarioConfig<T>,
    rng: &mut ChaCha8Rng,
) -> Result<VolatilityPath<T>>
where
    StandardNormal: Distribution<T>,
{
    config.validate()?;
    let steps = config.fine_steps();
    let d = config.d;
    match &config.volatility {
        VolatilityModel::Constant { sigma } => Ok(VolatilityPath {
            repr: VolRepr::Constant(DMatrix::identity(d, d) * *sigma),
            steps,
            d,
            w_increments: None,
            driver: None,
            clamp_count: 0,
        }),
        VolatilityModel::ConstantMatrix { sigma } => {
            let mut m = DMatrix::zeros(d, d);
            for r in 0..d {
                for c in 0..d {
                    m[(r, c)] = sigma[r][c];
                }
            }
            Ok(VolatilityPath {
                repr: VolRepr::Constant(m),
                steps,
                d,
                w_increments: None,
                driver: None,
                clamp_count: 0,
            })
        }
        VolatilityModel::Grid { sigma } => {
            let path = resample_to_grid(sigma, steps);
            let mut a = Array3::zeros((steps + 1, 1, 1));
            for (i, s) in path.iter().enumerate() {
                a[[i, 0, 0]] = *s;
            }
            Ok(VolatilityPath {
                repr: VolRepr::Path(a),
                steps,
                d: 1,
                w_increments: None,
                driver: None,
                clamp_count: 0,
            })
        }
        VolatilityModel::StochVolSeasonal { sigma_tilde, lambda } => {
            let dt = T::one() / count(steps);
            let sqrt_dt = dt.sqrt();
            let lam = *lambda;
            let lam_perp = (T::one() - lam * lam).max(T::zero()).sqrt();
            let mut a = Array3::zeros((steps + 1, 1, 1));
            let mut w_inc = Vec::with_capacity(steps);
            let mut driver = Vec::with_capacity(steps + 1);
            let mut clamp_count = 0usize;
            let mut martingale = T::one();
            let mut driver_level = T::zero();
            driver.push(driver_level);
            let floor = real::<T>(SIGMA_SQ_FLOOR);
            a[[0, 0, 0]] = (martingale * seasonality(T::zero())).max(floor).sqrt();
            for i in 1..=steps {
                let dw: T = StandardNormal.sample(rng);
                let dw_perp: T = StandardNormal.sample(rng);
                let dw = dw * sqrt_dt;
                let dw_perp = dw_perp * sqrt_dt;
                let d_driver = lam * dw + lam_perp * dw_perp;
                driver_level += d_driver;
                driver.push(driver_level);
                martingale += *sigma_tilde * d_driver;
                let mut var = martingale * seasonality(count::<T>(i) * dt);
                if var < floor {
                    var = floor;
                    clamp_count += 1;
                }
                a[[i, 0, 0]] = var.sqrt();
                w_inc.push(dw);
            }
            Ok(VolatilityPath {
                repr: VolRepr::Path(a),
                steps,
                d: 1,
                w_increments: Some(w_inc),
                driver: Some(driver),
                clamp_count,
            })
        }
    }
}

fn resample_to_grid<T: Scalar>(sigma: &[T], steps: usize) -> Vec<T> {
    if sigma.len() == steps + 1 {
        return sigma.to_vec();
    }
    // Linear interpolation onto the requested grid.
    let src_step = T::one() / count(sigma.len() - 1);
    (0..=steps)
        .map(|i| {
            let t = count::<T>(i) / count(steps);
            let pos = t / src_step;
            let idx = (to_f64(pos).floor() as usize).min(sigma.len() - 2);
            let frac = pos - count(idx);
            sigma[idx] + (sigma[idx + 1] - sigma[idx]) * frac
        })
        .collect()
}

/// Integrates the signal `X = ∫ b ds + ∫ σ_s dW_s` against a freshly drawn
/// Brownian motion (the frozen-volatility replication mode).
pub fn simulate_signal_given_vol<T: Scalar>(
    config: &ScenarioConfig<T>,
    vol: Arc<VolatilityPath<T>>,
    rng: &mut ChaCha8Rng,
) -> Result<PathBundle<T>>
where
    StandardNormal: Distribution<T>,
{
    euler_signal(config, vol, rng, false)
}

/// One-shot simulation: volatility and signal drawn together. In the
/// leverage model the signal reuses the Brownian increments that drive the
/// volatility factor, so `Cov(dW, dσ²) = λ σ̃ f dt` as specified.
pub fn simulate_paths<T: Scalar>(config: &ScenarioConfig<T>) -> Result<PathBundle<T>>
where
    StandardNormal: Distribution<T>,
{
    let mut rng = rng_from_seed(config.seed);
    let vol = simulate_volatility(config, &mut rng)?;
    let reuse = vol.w_increments.is_some();
    euler_signal(config, Arc::new(vol), &mut rng, reuse)
}

fn euler_signal<T: Scalar>(
    config: &ScenarioConfig<T>,
    vol: Arc<VolatilityPath<T>>,
    rng: &mut ChaCha8Rng,
    reuse_vol_increments: bool,
) -> Result<PathBundle<T>>
where
    StandardNormal: Distribution<T>,
{
    config.validate()?;
    let steps = vol.steps();
    let d = config.d;
    if vol.dimension() != d {
        return Err(Error::invalid_argument("volatility path dimension mismatch"));
    }
    let dt = T::one() / count(steps);
    let sqrt_dt = dt.sqrt();
    let mut x = Array2::zeros((steps + 1, d));
    let drift = config.b;
    let mut factor = DMatrix::<T>::zeros(d, d);
    let mut level = vec![T::zero(); d];
    let mut dw = vec![T::zero(); d];
    for i in 0..steps {
        vol.factor_at(i, &mut factor);
        for (r, slot) in dw.iter_mut().enumerate() {
            *slot = if reuse_vol_increments && r == 0 {
                vol.w_increments.as_ref().expect("vol increments present")[i]
            } else {
                let z: T = StandardNormal.sample(rng);
                z * sqrt_dt
            };
        }
        for row in 0..d {
            let mut inc = drift * dt;
            // Column r of σ scales the r-th Brownian coordinate.
            for (r, dwr) in dw.iter().enumerate() {
                inc += factor[(row, r)] * *dwr;
            }
            level[row] += inc;
            x[[i + 1, row]] = level[row];
        }
    }
    Ok(PathBundle { x, vol, steps, d })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::config::{NoiseSpec, SamplingSpec, ScalarSpec, SamplingScheme};
    use crate::sim::CountSpec;
    use approx::assert_relative_eq;

    fn constant_cfg(n: usize, sigma: f64) -> ScenarioConfig<f64> {
        ScenarioConfig::one_dimensional(n, 10, VolatilityModel::Constant { sigma }, 0.01)
    }

    #[test]
    fn constant_vol_bundle_basics() {
        let cfg = constant_cfg(200, 2.0);
        let paths = simulate_paths(&cfg).unwrap();
        assert_eq!(paths.steps(), 2000);
        // ∫σ² over [0,1] and [0,0.5].
        assert_relative_eq!(paths.true_integrated_volatility(1.0), 4.0, max_relative = 1e-12);
        assert_relative_eq!(paths.true_integrated_volatility(0.5), 2.0, max_relative = 1e-12);
        assert_relative_eq!(paths.true_integrated_volatility(0.13), 0.52, max_relative = 1e-10);
    }

    #[test]
    fn reproducibility_same_seed() {
        let cfg = ScenarioConfig {
            seed: 1234,
            ..constant_cfg(500, 1.0)
        };
        let a = simulate_paths(&cfg).unwrap();
        let b = simulate_paths(&cfg).unwrap();
        assert_eq!(a.x_grid(), b.x_grid());
    }

    #[test]
    fn terminal_variance_matches_sigma() {
        // Var(X_1) = σ² for constant volatility and zero drift; 10^4 seeds.
        let mut acc = 0.0;
        let mut acc_sq = 0.0;
        let reps = 10_000;
        for seed in 0..reps {
            let cfg = ScenarioConfig {
                seed,
                ..constant_cfg(50, 1.0)
            };
            let paths = simulate_paths(&cfg).unwrap();
            let x1 = paths.x_at(1.0, 0);
            acc += x1;
            acc_sq += x1 * x1;
        }
        let mean = acc / reps as f64;
        let var = acc_sq / reps as f64 - mean * mean;
        assert!((0.94..=1.06).contains(&var), "sample variance {var}");
    }

    #[test]
    fn stoch_vol_initial_value_and_leverage() {
        let cfg = ScenarioConfig {
            b: 0.1,
            seed: 5,
            ..ScenarioConfig::one_dimensional(
                2000,
                25,
                VolatilityModel::StochVolSeasonal { sigma_tilde: 0.01, lambda: 0.5 },
                0.01,
            )
        };
        let paths = simulate_paths(&cfg).unwrap();
        // σ_0² = 0.1.
        assert_relative_eq!(paths.vol.sigma_sq_1d(0), 0.1, max_relative = 1e-12);
        assert_eq!(paths.vol.clamp_count(), 0);
        // Integrated variance should land in the plausible band set by f.
        let iv = paths.true_integrated_volatility(1.0);
        assert!(iv > 0.02 && iv < 0.2, "IV = {iv}");
    }

    #[test]
    fn frozen_vol_reuses_path_but_not_signal() {
        let cfg = ScenarioConfig {
            seed: 9,
            ..ScenarioConfig::one_dimensional(
                1000,
                10,
                VolatilityModel::StochVolSeasonal { sigma_tilde: 0.01, lambda: 0.5 },
                0.01,
            )
        };
        let mut rng = rng_from_seed(77);
        let vol = Arc::new(simulate_volatility(&cfg, &mut rng).unwrap());
        let mut rng1 = rng_from_seed(100);
        let mut rng2 = rng_from_seed(200);
        let a = simulate_signal_given_vol(&cfg, Arc::clone(&vol), &mut rng1).unwrap();
        let b = simulate_signal_given_vol(&cfg, Arc::clone(&vol), &mut rng2).unwrap();
        assert_eq!(a.vol.sigma_sq_1d(500), b.vol.sigma_sq_1d(500));
        assert!(a.x_at(1.0, 0) != b.x_at(1.0, 0));
    }

    #[test]
    fn multivariate_correlated_factor() {
        let rho: f64 = 0.5;
        let cfg = ScenarioConfig {
            n: CountSpec::PerComponent(vec![400, 300]),
            d: 2,
            h_inv: 5,
            b: 0.0,
            volatility: VolatilityModel::ConstantMatrix {
                sigma: vec![vec![1.0, 0.0], vec![rho, (1.0 - rho * rho).sqrt()]],
            },
            noise: NoiseSpec {
                eta: ScalarSpec::Single(0.01),
                distribution: crate::sim::NoiseDistribution::Gaussian,
            },
            sampling: SamplingSpec::Single(SamplingScheme::Equidistant),
            seed: 3,
            fine_grid_steps: None,
        };
        let paths = simulate_paths(&cfg).unwrap();
        let ic = paths.true_integrated_covolatility(1.0);
        assert_relative_eq!(ic[(0, 0)], 1.0, max_relative = 1e-10);
        assert_relative_eq!(ic[(0, 1)], rho, max_relative = 1e-10);
        assert_relative_eq!(ic[(1, 1)], 1.0, max_relative = 1e-10);
        // PSD at a few grid points.
        for i in [0, 1500, 3000] {
            let cov = paths.vol.covolatility_at(i);
            let eig = nalgebra::SymmetricEigen::new(cov);
            assert!(eig.eigenvalues.iter().all(|&e| e >= -1e-12));
        }
    }
}

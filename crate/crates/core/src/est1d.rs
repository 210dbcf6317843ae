//! One-dimensional spectral integrated-volatility pipeline.
//!
//! The local estimate on bin `k` is the weighted, bias-corrected combination
//! of squared spectral statistics
//!
//! ```text
//! σ̂²_k = Σ_j w_jk (S²_jk - [φ_jk,φ_jk]_n η²/n),
//! ```
//!
//! the integrated-volatility estimator is the Riemann sum `Σ_k h σ̂²_k`, and
//! with Fisher weights `w_jk = I_jk/I_k`, `I_jk = ½(σ²_k + η²[φ_jk,φ_jk]_n/n)⁻²`,
//! its variance estimator is `Σ_k h² I_k⁻¹`. Oracle weights read the true
//! spot volatility at bin left edges; the adaptive two-stage version plugs in
//! the pilot estimates and the estimated noise variance.

use ndarray::Array2;

use crate::basis::PhiNorms;
use crate::error::{Error, Result};
use crate::grid::{default_pilot_window, BinGrid, FrequencyRange};
use crate::report::{EstimateReport, WeightMode};
use crate::scalar::{count, real, Scalar};
use crate::sim::{ComponentObservations, ObservationSet, PathBundle};
use crate::spectral::{spectral_statistics, SpectralArray};

/// `η̂² = (2n)⁻¹ Σ (Δ_i Y)²`.
pub fn estimate_noise_variance<T: Scalar>(comp: &ComponentObservations<T>) -> Result<T> {
    if comp.n_increments() < 2 {
        return Err(Error::invalid_argument("noise variance needs at least 2 increments"));
    }
    Ok(comp.half_mean_square_increment())
}

/// Tuning parameters of the one-dimensional pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct IvParams<T> {
    /// Spectral cutoff of the final adaptive estimator (`None` = the full
    /// admissible range `⌊nh⌋-1`). Default 150.
    pub j_max_final: Option<usize>,
    /// Spectral cutoff of oracle-weight estimators (`None` = full range).
    /// Oracle weights know the exact information content of every frequency,
    /// so the default keeps them all.
    pub j_max_oracle: Option<usize>,
    /// Spectral cutoff of the pilot stage. Default 100.
    pub j_max_pilot: usize,
    /// Pilot window half-width `K_n` (`None` = `round(n^{1/4}/2)`).
    pub pilot_window: Option<usize>,
    /// Absolute pilot floor.
    pub pilot_floor_abs: T,
    /// Relative pilot floor (fraction of the median pilot).
    pub pilot_floor_rel: T,
    /// Confidence level carried into reports.
    pub ci_level: T,
}

impl<T: Scalar> Default for IvParams<T> {
    fn default() -> Self {
        IvParams {
            j_max_final: Some(150),
            j_max_oracle: None,
            j_max_pilot: 100,
            pilot_window: None,
            pilot_floor_abs: real(1e-8),
            pilot_floor_rel: real(0.05),
            ci_level: real(0.95),
        }
    }
}

impl<T: Scalar> IvParams<T> {
    pub fn pilot_window_for(&self, n: usize) -> usize {
        self.pilot_window.unwrap_or_else(|| default_pilot_window(n))
    }

    fn final_range(&self, grid: &BinGrid<T>) -> Result<FrequencyRange> {
        match self.j_max_final {
            Some(cap) => FrequencyRange::capped(cap, grid),
            None => FrequencyRange::full(grid),
        }
    }

    fn oracle_range(&self, grid: &BinGrid<T>) -> Result<FrequencyRange> {
        match self.j_max_oracle {
            Some(cap) => FrequencyRange::capped(cap, grid),
            None => FrequencyRange::full(grid),
        }
    }
}

/// Fisher-information weights of the one-dimensional estimator.
#[derive(Debug, Clone)]
pub struct WeightTable1D<T> {
    /// `w_jk`, shape `(n_bins, j_max)`.
    pub weights: Array2<T>,
    /// `I_jk = ½(σ²_k + η²[φ_jk,φ_jk]_n/n)⁻²`.
    pub fisher: Array2<T>,
    /// `I_k = Σ_j I_jk`.
    pub fisher_per_bin: Vec<T>,
    pub mode: WeightMode,
    pub grid: BinGrid<T>,
    pub freq: FrequencyRange,
}

/// Optimal (variance-minimizing) weights from per-bin squared volatilities
/// and the noise variance.
pub fn optimal_weights_1d<T: Scalar>(
    sigma_sq: &[T],
    eta_sq: T,
    n: usize,
    grid: &BinGrid<T>,
    freq: &FrequencyRange,
    mode: WeightMode,
) -> Result<WeightTable1D<T>> {
    if sigma_sq.len() != grid.n_bins() {
        return Err(Error::invalid_argument("need one squared volatility per bin"));
    }
    if sigma_sq.iter().any(|&s| s <= T::zero()) {
        return Err(Error::invalid_argument(
            "weights need positive squared volatilities (floor the pilots first)",
        ));
    }
    if eta_sq < T::zero() {
        return Err(Error::invalid_argument("noise variance must be >= 0"));
    }
    let norms = PhiNorms::discrete(n, grid, freq.j_max());
    let n_bins = grid.n_bins();
    let j_max = freq.j_max();
    let mut fisher = Array2::zeros((n_bins, j_max));
    let mut weights = Array2::zeros((n_bins, j_max));
    let mut fisher_per_bin = vec![T::zero(); n_bins];
    let half = real::<T>(0.5);
    let n_t = count::<T>(n);
    for bin in 0..n_bins {
        let mut total = T::zero();
        for j in 1..=j_max {
            let level = sigma_sq[bin] + eta_sq * norms.get(j) / n_t;
            let info = half / (level * level);
            fisher[[bin, j - 1]] = info;
            total += info;
        }
        fisher_per_bin[bin] = total;
        for j in 0..j_max {
            weights[[bin, j]] = fisher[[bin, j]] / total;
        }
    }
    Ok(WeightTable1D {
        weights,
        fisher,
        fisher_per_bin,
        mode,
        grid: *grid,
        freq: *freq,
    })
}

/// Pilot spot volatility: uniform-weight bias-corrected averages over
/// `J_n` frequencies and a window of neighboring bins, floored at
/// `max(floor_abs, floor_rel·median)`.
pub fn pilot_spot_volatility<T: Scalar>(
    obs: &ObservationSet<T>,
    grid: &BinGrid<T>,
    j_pilot: usize,
    k_window: usize,
    eta_sq: T,
    floor_abs: T,
    floor_rel: T,
) -> Result<Vec<T>> {
    let n = obs.component(0).n_increments();
    let freq = FrequencyRange::capped(j_pilot, grid)?;
    let spectra = spectral_statistics(obs, grid, &freq)?;
    let raw = pilot_from_spectra(&spectra, n, freq.j_max(), k_window, eta_sq);
    Ok(apply_pilot_floor(raw, floor_abs, floor_rel))
}

pub(crate) fn pilot_from_spectra<T: Scalar>(
    spectra: &SpectralArray<T>,
    n: usize,
    j_pilot: usize,
    k_window: usize,
    eta_sq: T,
) -> Vec<T> {
    let grid = spectra.grid();
    let n_bins = grid.n_bins();
    let j_pilot = j_pilot.min(spectra.freq().j_max());
    let norms = PhiNorms::discrete(n, grid, j_pilot);
    let n_t = count::<T>(n);
    // Per-bin uniform-weight local estimates.
    let per_bin: Vec<T> = (0..n_bins)
        .map(|bin| {
            let mut acc = T::zero();
            for j in 1..=j_pilot {
                let s = spectra.get(bin, j, 0);
                acc += s * s - norms.get(j) * eta_sq / n_t;
            }
            acc / count(j_pilot)
        })
        .collect();
    // Window average over neighboring bins, truncated at the boundary and
    // normalized by the actual window size.
    (0..n_bins)
        .map(|bin| {
            let lo = bin.saturating_sub(k_window);
            let hi = (bin + k_window).min(n_bins - 1);
            let mut acc = T::zero();
            for value in &per_bin[lo..=hi] {
                acc += *value;
            }
            acc / count(hi - lo + 1)
        })
        .collect()
}

pub(crate) fn apply_pilot_floor<T: Scalar>(mut pilots: Vec<T>, floor_abs: T, floor_rel: T) -> Vec<T> {
    let mut sorted = pilots.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite pilots"));
    let median = sorted[sorted.len() / 2];
    let floor = floor_abs.max(floor_rel * median);
    for p in pilots.iter_mut() {
        *p = (*p).max(floor);
    }
    pilots
}

/// Integrated-volatility estimator from precomputed weights:
/// `IV̂_t = Σ_{k ≤ th⁻¹} h Σ_j w_jk (S²_jk - η²[φ_jk,φ_jk]_n/n)` with variance
/// path `Σ_k h² I_k⁻¹`.
pub fn spectral_iv<T: Scalar>(
    obs: &ObservationSet<T>,
    weights: &WeightTable1D<T>,
    eta_sq: T,
) -> Result<EstimateReport<T>> {
    let spectra = spectral_statistics(obs, &weights.grid, &weights.freq)?;
    spectral_iv_from_spectra(&spectra, weights, eta_sq, obs.component(0).n_increments())
}

pub(crate) fn spectral_iv_from_spectra<T: Scalar>(
    spectra: &SpectralArray<T>,
    weights: &WeightTable1D<T>,
    eta_sq: T,
    n: usize,
) -> Result<EstimateReport<T>> {
    let grid = &weights.grid;
    let j_max = weights.freq.j_max();
    if spectra.freq().j_max() < j_max {
        return Err(Error::invalid_argument(
            "spectral array has fewer frequencies than the weight table",
        ));
    }
    let norms = PhiNorms::discrete(n, grid, j_max);
    let n_bins = grid.n_bins();
    let h = grid.bin_width();
    let n_t = count::<T>(n);
    let mut ts = Vec::with_capacity(n_bins + 1);
    let mut estimates = Vec::with_capacity(n_bins + 1);
    let mut variances = Vec::with_capacity(n_bins + 1);
    ts.push(T::zero());
    estimates.push(T::zero());
    variances.push(T::zero());
    let mut est = T::zero();
    let mut var = T::zero();
    for bin in 0..n_bins {
        let mut local = T::zero();
        for j in 1..=j_max {
            let s = spectra.get(bin, j, 0);
            local += weights.weights[[bin, j - 1]] * (s * s - norms.get(j) * eta_sq / n_t);
        }
        est += h * local;
        var += h * h / weights.fisher_per_bin[bin];
        ts.push(grid.right_edge(bin));
        estimates.push(est);
        variances.push(var);
    }
    Ok(EstimateReport {
        ts,
        estimates,
        variances,
        eta_sq: Some(eta_sq),
        mode: weights.mode,
        ci_level: real(0.95),
        estimator: match weights.mode {
            WeightMode::Oracle => "iv_oracle".into(),
            WeightMode::Adaptive => "iv_adaptive".into(),
        },
    })
}

/// Confidence interval `estimate ± z_{(1+γ)/2}·√V̂` at the report's final
/// time.
pub fn confidence_interval<T: Scalar>(report: &EstimateReport<T>, level: T) -> Result<(T, T)> {
    report.confidence_interval(level)
}

/// Oracle estimator: weights from the true spot volatility at bin left edges
/// and the true noise variance.
pub fn run_iv_oracle<T: Scalar>(
    obs: &ObservationSet<T>,
    paths: &PathBundle<T>,
    eta_sq: T,
    grid: &BinGrid<T>,
    params: &IvParams<T>,
) -> Result<EstimateReport<T>> {
    let freq = params.oracle_range(grid)?;
    let sigma_sq: Vec<T> = (0..grid.n_bins())
        .map(|bin| paths.sigma_sq_at(grid.left_edge(bin)))
        .collect();
    let n = obs.component(0).n_increments();
    let weights = optimal_weights_1d(&sigma_sq, eta_sq, n, grid, &freq, WeightMode::Oracle)?;
    spectral_iv(obs, &weights, eta_sq)
}

/// Fully adaptive two-stage estimator: estimated noise variance, pilot spot
/// volatilities, plug-in weights.
pub fn run_iv_adaptive<T: Scalar>(
    obs: &ObservationSet<T>,
    grid: &BinGrid<T>,
    params: &IvParams<T>,
) -> Result<EstimateReport<T>> {
    let comp = obs.component(0);
    let n = comp.n_increments();
    let eta_sq = estimate_noise_variance(comp)?;
    let freq_final = params.final_range(grid)?;
    let j_pilot = params.j_max_pilot.min(freq_final.j_max());
    // One spectral pass at the larger cutoff serves both stages.
    let j_all = freq_final.j_max().max(j_pilot);
    let spectra = spectral_statistics(obs, grid, &FrequencyRange::new(j_all)?)?;
    let raw = pilot_from_spectra(&spectra, n, j_pilot, params.pilot_window_for(n), eta_sq);
    let pilots = apply_pilot_floor(raw, params.pilot_floor_abs, params.pilot_floor_rel);
    let weights = optimal_weights_1d(&pilots, eta_sq, n, grid, &freq_final, WeightMode::Adaptive)?;
    spectral_iv_from_spectra(&spectra, &weights, eta_sq, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::shifted_norm_discrete;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn obs_1d(values: Vec<f64>) -> ObservationSet<f64> {
        ObservationSet::new(vec![ComponentObservations::regular(values).unwrap()]).unwrap()
    }

    #[test]
    fn noise_variance_zero_for_constant() {
        let obs = ComponentObservations::regular(vec![2.0; 51]).unwrap();
        assert_eq!(estimate_noise_variance(&obs).unwrap(), 0.0);
    }

    #[test]
    fn noise_variance_matches_direct_sum() {
        let mut rng = crate::sim::rng_from_seed(8);
        let values: Vec<f64> = (0..=100).map(|_| rng.random::<f64>()).collect();
        let comp = ComponentObservations::regular(values.clone()).unwrap();
        let direct: f64 = values.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / 200.0;
        assert_relative_eq!(estimate_noise_variance(&comp).unwrap(), direct, epsilon = 1e-15);
    }

    #[test]
    fn weights_normalize_and_decrease() {
        let grid = BinGrid::regular(3000, 5).unwrap();
        let freq = FrequencyRange::full(&grid).unwrap();
        let sigma_sq = vec![1.0, 0.5, 2.0, 1.5, 0.7];
        let table =
            optimal_weights_1d(&sigma_sq, 1e-4, 3000, &grid, &freq, WeightMode::Oracle).unwrap();
        for bin in 0..5 {
            let total: f64 = (0..freq.j_max()).map(|j| table.weights[[bin, j]]).sum();
            assert_relative_eq!(total, 1.0, epsilon = 1e-12);
            // Monotone non-increasing in j.
            for j in 1..freq.j_max() {
                assert!(table.weights[[bin, j]] <= table.weights[[bin, j - 1]] + 1e-15);
            }
        }
    }

    #[test]
    fn weights_uniform_in_no_noise_limit() {
        let grid = BinGrid::regular(1000, 4).unwrap();
        let freq = FrequencyRange::full(&grid).unwrap();
        let table =
            optimal_weights_1d(&[1.0; 4], 0.0, 1000, &grid, &freq, WeightMode::Oracle).unwrap();
        let expected = 1.0 / freq.j_max() as f64;
        for j in 0..freq.j_max() {
            assert_relative_eq!(table.weights[[0, j]], expected, epsilon = 1e-14);
        }
    }

    #[test]
    fn weights_reject_nonpositive_sigma() {
        let grid = BinGrid::regular(1000, 4).unwrap();
        let freq = FrequencyRange::full(&grid).unwrap();
        assert!(optimal_weights_1d(&[1.0, 0.0, 1.0, 1.0], 1e-4, 1000, &grid, &freq, WeightMode::Oracle)
            .is_err());
    }

    #[test]
    fn oracle_weights_minimize_variance_form() {
        // Among weight vectors summing to one, w ∝ I_jk minimizes
        // Σ_j w_j²/I_jk; random tangent perturbations never reduce it.
        let grid = BinGrid::regular(2000, 4).unwrap();
        let freq = FrequencyRange::capped(80, &grid).unwrap();
        let table =
            optimal_weights_1d(&[0.8; 4], 1e-4, 2000, &grid, &freq, WeightMode::Oracle).unwrap();
        let j_max = freq.j_max();
        let value = |w: &[f64]| -> f64 {
            (0..j_max).map(|j| w[j] * w[j] / table.fisher[[1, j]]).sum()
        };
        let base: Vec<f64> = (0..j_max).map(|j| table.weights[[1, j]]).collect();
        let v0 = value(&base);
        let mut rng = crate::sim::rng_from_seed(17);
        for _ in 0..100 {
            let dir: Vec<f64> = (0..j_max).map(|_| rng.random::<f64>() - 0.5).collect();
            let mean = dir.iter().sum::<f64>() / j_max as f64;
            let scale = 1e-3;
            let perturbed: Vec<f64> = base
                .iter()
                .zip(&dir)
                .map(|(w, d)| w + scale * (d - mean))
                .collect();
            assert!(value(&perturbed) >= v0 - 1e-12);
        }
    }

    #[test]
    fn pilot_degenerate_window_single_term() {
        // K = 0, J = 1: the pilot is S²_{1k} - [φ_1k,φ_1k]_n η²/n (then floored).
        let n = 400;
        let grid = BinGrid::regular(n, 4).unwrap();
        let mut rng = crate::sim::rng_from_seed(91);
        let mut values = vec![0.0f64];
        let mut lvl = 0.0;
        for _ in 0..n {
            lvl += (rng.random::<f64>() - 0.5) * 0.1;
            values.push(lvl);
        }
        let obs = obs_1d(values);
        let eta_sq = 1e-6;
        let pilots = pilot_spot_volatility(&obs, &grid, 1, 0, eta_sq, 1e-8, 0.0).unwrap();
        let freq = FrequencyRange::new(1).unwrap();
        let spectra = spectral_statistics(&obs, &grid, &freq).unwrap();
        for bin in 0..4 {
            let s = spectra.get(bin, 1, 0);
            let expected =
                (s * s - shifted_norm_discrete(1, n, &grid) * eta_sq / n as f64).max(1e-8);
            assert_relative_eq!(pilots[bin], expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn pilot_window_truncates_at_boundaries() {
        // With a window wider than the grid every bin sees all bins, so the
        // pilot is flat and equals the global average.
        let n = 500;
        let grid = BinGrid::regular(n, 5).unwrap();
        let mut rng = crate::sim::rng_from_seed(92);
        let mut values = vec![0.0f64];
        let mut lvl = 0.0;
        for _ in 0..n {
            lvl += (rng.random::<f64>() - 0.5) * 0.1;
            values.push(lvl);
        }
        let obs = obs_1d(values);
        let pilots = pilot_spot_volatility(&obs, &grid, 5, 10, 0.0, 0.0, 0.0).unwrap();
        for w in pilots.windows(2) {
            assert_relative_eq!(w[0], w[1], max_relative = 1e-12);
        }
    }

    #[test]
    fn spectral_iv_matches_brute_force_uniform_weights() {
        // Noise-free data, uniform weights, η̂² = 0: the estimate equals the
        // plain double sum h Σ_k Σ_j S²_jk / (⌊nh⌋-1), cross-checked against
        // direct per-term summation with naive basis evaluations.
        let n = 300;
        let grid = BinGrid::regular(n, 3).unwrap();
        let freq = FrequencyRange::full(&grid).unwrap();
        let mut rng = crate::sim::rng_from_seed(93);
        let mut values = vec![0.0f64];
        let mut lvl = 0.0;
        for _ in 0..n {
            lvl += (rng.random::<f64>() - 0.5) * 0.05;
            values.push(lvl);
        }
        let obs = obs_1d(values.clone());
        let table = optimal_weights_1d(&[1.0; 3], 0.0, n, &grid, &freq, WeightMode::Oracle).unwrap();
        let report = spectral_iv(&obs, &table, 0.0).unwrap();

        // Independent re-implementation by direct loops.
        let h = grid.bin_width();
        let mut direct = 0.0;
        for bin in 0..3 {
            for j in 1..=freq.j_max() {
                let mut s = 0.0;
                for i in 1..=n {
                    let t = i as f64 / n as f64;
                    s += (values[i] - values[i - 1])
                        * crate::basis::sine_basis_value(j, bin, &grid, t).unwrap();
                }
                direct += h * s * s / freq.j_max() as f64;
            }
        }
        assert_relative_eq!(report.final_estimate(), direct, epsilon = 1e-12, max_relative = 1e-12);
    }

    #[test]
    fn estimator_scales_quadratically() {
        // Scaling increments by a and the noise variance by a² scales the
        // estimate by a².
        let n = 200;
        let grid = BinGrid::regular(n, 2).unwrap();
        let freq = FrequencyRange::capped(40, &grid).unwrap();
        let mut rng = crate::sim::rng_from_seed(94);
        let values: Vec<f64> = (0..=n).map(|_| rng.random::<f64>()).collect();
        let scaled: Vec<f64> = values.iter().map(|v| 3.0 * v).collect();
        let table = optimal_weights_1d(&[1.0; 2], 1e-4, n, &grid, &freq, WeightMode::Oracle).unwrap();
        let base = spectral_iv(&obs_1d(values), &table, 1e-4).unwrap();
        let big = spectral_iv(&obs_1d(scaled), &table, 9.0 * 1e-4).unwrap();
        assert_relative_eq!(big.final_estimate(), 9.0 * base.final_estimate(), max_relative = 1e-12);
    }

    #[test]
    fn variance_estimator_accumulates_bin_information() {
        let grid = BinGrid::regular(1000, 4).unwrap();
        let freq = FrequencyRange::capped(30, &grid).unwrap();
        let table =
            optimal_weights_1d(&[1.0; 4], 1e-4, 1000, &grid, &freq, WeightMode::Oracle).unwrap();
        let obs = obs_1d(vec![0.0; 1001]);
        let report = spectral_iv(&obs, &table, 0.0).unwrap();
        let h = grid.bin_width();
        let expected: f64 = (0..4).map(|k| h * h / table.fisher_per_bin[k]).sum();
        assert_relative_eq!(report.final_variance(), expected, epsilon = 1e-15);
        assert!(report.variances.windows(2).all(|w| w[1] > w[0]));
    }
}

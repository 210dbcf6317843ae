//! Multivariate spectral estimation: local noise levels, pilot covolatility
//! matrices, the bivariate spectral covolatility estimator and the local
//! method of moments (LMM).
//!
//! All multivariate machinery uses the continuous weight-function norm
//! `[φ_jk, φ_jk] = π²j²h⁻²` and midpoint-evaluated spectral statistics. Local
//! noise levels `H_p ≈ η_p²/(n_p F_p'(t))` combine the component's noise
//! variance with its local observation density.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use ndarray::Array2;

use crate::basis::continuous_norm;
use crate::error::{Error, Result};
use crate::grid::{default_pilot_window, BinGrid, FrequencyRange};
use crate::matrixops::{kronecker, psd_projection, vec_matrix};
use crate::report::{EstimateReport, MatrixEstimateReport, RowMajorMatrix, WeightMode};
use crate::scalar::{count, real, Scalar};
use crate::sim::{ObservationSet, PathBundle, ScenarioConfig};
use crate::spectral::{spectral_statistics, SpectralArray};

/// Per-bin pilot covolatility matrices and noise-level diagonals.
#[derive(Debug, Clone)]
pub struct LocalEstimates<T: Scalar> {
    /// Pilot spot covolatility Σ̂ per bin (symmetric PSD after projection).
    pub sigma: Vec<DMatrix<T>>,
    /// Diagonal noise levels Ĥ per bin.
    pub noise_levels: Vec<DVector<T>>,
    /// `(component, bin)` pairs whose noise level was borrowed from the
    /// nearest populated bin.
    pub borrowed_bins: Vec<(usize, usize)>,
}

/// Tuning parameters of the multivariate pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct MdParams<T> {
    /// Spectral cutoff of the final estimators. Default 150.
    pub j_max_final: usize,
    /// Spectral cutoff of the pilot stage. Default 100.
    pub j_max_pilot: usize,
    /// Pilot window half-width `K_n` (`None` = `round(n^{1/4}/2)` with n the
    /// largest component count).
    pub pilot_window: Option<usize>,
    /// Relative eigenvalue floor of the pilot PSD projection, as a fraction
    /// of `trace/d`.
    pub psd_floor_rel: T,
    pub ci_level: T,
}

impl<T: Scalar> Default for MdParams<T> {
    fn default() -> Self {
        MdParams {
            j_max_final: 150,
            j_max_pilot: 100,
            pilot_window: None,
            psd_floor_rel: real(1e-8),
            ci_level: real(0.95),
        }
    }
}

impl<T: Scalar> MdParams<T> {
    fn pilot_window_for(&self, n: usize) -> usize {
        self.pilot_window.unwrap_or_else(|| default_pilot_window(n))
    }
}

/// Estimates the local noise level of every component on every bin through
/// the local quadratic variation of time,
///
/// ```text
/// Ĥ_p(bin) = [Σ_i (Δ_i Y^(p))² / (2 n_p h)] · Σ_{t_v ∈ bin} (t_v - t_{v-1})².
/// ```
///
/// Bins without any observation of a component borrow the nearest populated
/// bin's value; the returned pairs flag every borrow.
pub fn estimate_local_noise_levels<T: Scalar>(
    obs: &ObservationSet<T>,
    grid: &BinGrid<T>,
) -> Result<(Vec<DVector<T>>, Vec<(usize, usize)>)> {
    let d = obs.dimension();
    let n_bins = grid.n_bins();
    let mut per_bin: Vec<DVector<T>> = vec![DVector::zeros(d); n_bins];
    let mut borrowed = Vec::new();
    for l in 0..d {
        let comp = obs.component(l);
        let global = comp.half_mean_square_increment() / grid.bin_width();
        let mut qvt = vec![T::zero(); n_bins];
        let mut populated = vec![false; n_bins];
        for v in 1..comp.times.len() {
            let t = comp.times[v];
            if let Some(bin) = grid.bin_of(t) {
                let dt = t - comp.times[v - 1];
                qvt[bin] += dt * dt;
                populated[bin] = true;
            }
        }
        for bin in 0..n_bins {
            if populated[bin] {
                per_bin[bin][l] = global * qvt[bin];
            } else {
                // Borrow the nearest populated bin.
                let mut source = None;
                for offset in 1..n_bins {
                    if bin >= offset && populated[bin - offset] {
                        source = Some(bin - offset);
                        break;
                    }
                    if bin + offset < n_bins && populated[bin + offset] {
                        source = Some(bin + offset);
                        break;
                    }
                }
                let src = source.ok_or_else(|| {
                    Error::invalid_argument("component has no observations in any bin")
                })?;
                per_bin[bin][l] = global * qvt[src];
                borrowed.push((l, bin));
            }
        }
    }
    Ok((per_bin, borrowed))
}

/// Pilot spot covolatility matrices: window-averaged, bias-corrected
/// frequency averages of outer products of spectral statistics, followed by a
/// PSD projection with relative eigenvalue floor.
pub fn pilot_covolatility<T: Scalar>(
    obs: &ObservationSet<T>,
    grid: &BinGrid<T>,
    j_pilot: usize,
    k_window: usize,
    noise_levels: &[DVector<T>],
    psd_floor_rel: T,
) -> Result<LocalEstimates<T>> {
    let freq = FrequencyRange::new(j_pilot)?;
    let spectra = spectral_statistics(obs, grid, &freq)?;
    let sigma =
        pilot_covolatility_from_spectra(&spectra, j_pilot, k_window, noise_levels, psd_floor_rel)?;
    Ok(LocalEstimates {
        sigma,
        noise_levels: noise_levels.to_vec(),
        borrowed_bins: Vec::new(),
    })
}

pub(crate) fn pilot_covolatility_from_spectra<T: Scalar>(
    spectra: &SpectralArray<T>,
    j_pilot: usize,
    k_window: usize,
    noise_levels: &[DVector<T>],
    psd_floor_rel: T,
) -> Result<Vec<DMatrix<T>>> {
    let grid = spectra.grid();
    let d = spectra.dimension();
    let n_bins = grid.n_bins();
    if noise_levels.len() != n_bins {
        return Err(Error::invalid_argument("need one noise-level vector per bin"));
    }
    let j_pilot = j_pilot.min(spectra.freq().j_max());
    // Raw per-bin frequency averages.
    let mut raw: Vec<DMatrix<T>> = Vec::with_capacity(n_bins);
    for bin in 0..n_bins {
        let mut m = DMatrix::<T>::zeros(d, d);
        for j in 1..=j_pilot {
            let norm = continuous_norm(j, grid);
            for p in 0..d {
                let sp = spectra.get(bin, j, p);
                for q in 0..d {
                    let sq = spectra.get(bin, j, q);
                    let mut term = sp * sq;
                    if p == q {
                        term -= norm * noise_levels[bin][p];
                    }
                    m[(p, q)] += term;
                }
            }
        }
        raw.push(m / count::<T>(j_pilot));
    }
    // Window average and PSD projection.
    let mut out = Vec::with_capacity(n_bins);
    for bin in 0..n_bins {
        let lo = bin.saturating_sub(k_window);
        let hi = (bin + k_window).min(n_bins - 1);
        let mut m = DMatrix::<T>::zeros(d, d);
        for item in &raw[lo..=hi] {
            m += item;
        }
        m /= count::<T>(hi - lo + 1);
        let trace = m.trace();
        let floor = (psd_floor_rel * trace / count(d)).max(real(1e-10));
        out.push(psd_projection(&m, floor));
    }
    Ok(out)
}

/// Bivariate Fisher information of the cross product `S_jk^(p) S_jk^(q)`,
///
/// ```text
/// I_jk = (Σ^{pp}Σ^{qq} + (Σ^{pq})² + H_p H_q [φ,φ]² + (Σ^{pp}H_q + Σ^{qq}H_p)[φ,φ])⁻¹,
/// ```
///
/// with `[φ,φ] = π²j²h⁻²`.
pub fn bivariate_fisher_info<T: Scalar>(
    sigma: &DMatrix<T>,
    noise: &DVector<T>,
    p: usize,
    q: usize,
    j: usize,
    grid: &BinGrid<T>,
) -> T {
    let norm = continuous_norm(j, grid);
    let spp = sigma[(p, p)];
    let sqq = sigma[(q, q)];
    let spq = sigma[(p, q)];
    let hp = noise[p];
    let hq = noise[q];
    let denom = spp * sqq + spq * spq + hp * hq * norm * norm + (spp * hq + sqq * hp) * norm;
    T::one() / denom
}

/// Scalar weight table of the bivariate covolatility estimator.
#[derive(Debug, Clone)]
pub struct WeightTableBiv<T> {
    pub weights: Array2<T>,
    pub fisher_per_bin: Vec<T>,
    pub p: usize,
    pub q: usize,
    pub mode: WeightMode,
    pub grid: BinGrid<T>,
    pub freq: FrequencyRange,
}

/// Optimal weights `w_jk = I_jk/I_k` for the `(p, q)` covolatility.
pub fn icv_weights<T: Scalar>(
    sigma: &[DMatrix<T>],
    noise_levels: &[DVector<T>],
    p: usize,
    q: usize,
    grid: &BinGrid<T>,
    freq: &FrequencyRange,
    mode: WeightMode,
) -> Result<WeightTableBiv<T>> {
    let n_bins = grid.n_bins();
    if sigma.len() != n_bins || noise_levels.len() != n_bins {
        return Err(Error::invalid_argument("need per-bin pilots and noise levels"));
    }
    let j_max = freq.j_max();
    let mut weights = Array2::zeros((n_bins, j_max));
    let mut fisher_per_bin = vec![T::zero(); n_bins];
    for bin in 0..n_bins {
        let mut total = T::zero();
        for j in 1..=j_max {
            let info = bivariate_fisher_info(&sigma[bin], &noise_levels[bin], p, q, j, grid);
            weights[[bin, j - 1]] = info;
            total += info;
        }
        fisher_per_bin[bin] = total;
        for j in 0..j_max {
            weights[[bin, j]] /= total;
        }
    }
    Ok(WeightTableBiv {
        weights,
        fisher_per_bin,
        p,
        q,
        mode,
        grid: *grid,
        freq: *freq,
    })
}

/// Bivariate spectral covolatility estimator
/// `ICV_t = Σ_k h Σ_j w_jk (S_jk^(p) S_jk^(q) - δ_pq π²j²h⁻² Ĥ_p,k)` with
/// variance path `Σ_k h² I_k⁻¹`. Cross products (`p ≠ q`) carry no bias
/// correction since the noise is component-wise independent.
pub fn spectral_icv<T: Scalar>(
    obs: &ObservationSet<T>,
    p: usize,
    q: usize,
    weights: &WeightTableBiv<T>,
    noise_levels: &[DVector<T>],
) -> Result<EstimateReport<T>> {
    let spectra = spectral_statistics(obs, &weights.grid, &weights.freq)?;
    spectral_icv_from_spectra(&spectra, p, q, weights, noise_levels)
}

pub(crate) fn spectral_icv_from_spectra<T: Scalar>(
    spectra: &SpectralArray<T>,
    p: usize,
    q: usize,
    weights: &WeightTableBiv<T>,
    noise_levels: &[DVector<T>],
) -> Result<EstimateReport<T>> {
    let grid = &weights.grid;
    let n_bins = grid.n_bins();
    if p >= spectra.dimension() || q >= spectra.dimension() {
        return Err(Error::invalid_argument("component index out of range"));
    }
    if (p, q) != (weights.p, weights.q) {
        return Err(Error::invalid_argument("weight table built for a different pair"));
    }
    let j_max = weights.freq.j_max();
    let h = grid.bin_width();
    let mut ts = vec![T::zero()];
    let mut estimates = vec![T::zero()];
    let mut variances = vec![T::zero()];
    let mut est = T::zero();
    let mut var = T::zero();
    for bin in 0..n_bins {
        let mut local = T::zero();
        for j in 1..=j_max {
            let mut term = spectra.get(bin, j, p) * spectra.get(bin, j, q);
            if p == q {
                term -= continuous_norm(j, grid) * noise_levels[bin][p];
            }
            local += weights.weights[[bin, j - 1]] * term;
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
        eta_sq: None,
        mode: weights.mode,
        ci_level: real(0.95),
        estimator: "icv".into(),
    })
}

/// Fisher-information weight matrices of the local method of moments,
/// `W_jk = I_k^{-1} I_jk` with `I_jk = (Σ_k + [φ_jk,φ_jk] H_k)^{-⊗2}`.
#[derive(Debug, Clone)]
pub struct LmmWeightTable<T: Scalar> {
    /// `W_jk` per bin and frequency.
    pub weights: Vec<Vec<DMatrix<T>>>,
    /// `I_k = Σ_j I_jk` per bin.
    pub fisher_per_bin: Vec<DMatrix<T>>,
    /// Count of `(bin, j)` pairs that needed ridge regularization.
    pub regularized: usize,
    pub grid: BinGrid<T>,
    pub freq: FrequencyRange,
    pub mode: WeightMode,
}

pub fn lmm_weight_matrices<T: Scalar>(
    sigma: &[DMatrix<T>],
    noise_levels: &[DVector<T>],
    grid: &BinGrid<T>,
    freq: &FrequencyRange,
    mode: WeightMode,
) -> Result<LmmWeightTable<T>> {
    let n_bins = grid.n_bins();
    if sigma.len() != n_bins || noise_levels.len() != n_bins {
        return Err(Error::invalid_argument("need per-bin pilots and noise levels"));
    }
    let d = sigma[0].nrows();
    let j_max = freq.j_max();
    let mut weights = Vec::with_capacity(n_bins);
    let mut fisher_per_bin = Vec::with_capacity(n_bins);
    let mut regularized = 0usize;
    for bin in 0..n_bins {
        let mut infos: Vec<DMatrix<T>> = Vec::with_capacity(j_max);
        let mut i_k = DMatrix::<T>::zeros(d * d, d * d);
        for j in 1..=j_max {
            let norm = continuous_norm(j, grid);
            let mut a = sigma[bin].clone();
            for l in 0..d {
                a[(l, l)] += norm * noise_levels[bin][l];
            }
            let inv = match Cholesky::new(a.clone()) {
                Some(chol) => chol.inverse(),
                None => {
                    regularized += 1;
                    let ridge = &a + DMatrix::identity(d, d) * real::<T>(1e-10);
                    Cholesky::new(ridge)
                        .ok_or_else(|| Error::SingularMatrix { min_eigenvalue: 0.0 })?
                        .inverse()
                }
            };
            let info = kronecker(&inv, &inv);
            i_k += &info;
            infos.push(info);
        }
        let chol = Cholesky::new(i_k.clone())
            .ok_or_else(|| Error::SingularMatrix { min_eigenvalue: 0.0 })?;
        let w_bin: Vec<DMatrix<T>> = infos.iter().map(|info| chol.solve(info)).collect();
        fisher_per_bin.push(i_k);
        weights.push(w_bin);
    }
    Ok(LmmWeightTable {
        weights,
        fisher_per_bin,
        regularized,
        grid: *grid,
        freq: *freq,
        mode,
    })
}

/// Local method of moments estimator of `vec(∫Σ_s ds)`,
/// `LMM_t = Σ_k h Σ_j W_jk vec(S_jk S_jkᵀ - π²j²h⁻² Ĥ_k)`, with covariance
/// estimate `Î⁻¹ = Σ_k h² I_k⁻¹`.
pub fn lmm_estimate<T: Scalar>(
    obs: &ObservationSet<T>,
    pilots: &LocalEstimates<T>,
    grid: &BinGrid<T>,
    freq: &FrequencyRange,
    mode: WeightMode,
) -> Result<MatrixEstimateReport<T>> {
    let weights = lmm_weight_matrices(&pilots.sigma, &pilots.noise_levels, grid, freq, mode)?;
    let spectra = spectral_statistics(obs, grid, freq)?;
    lmm_estimate_from_spectra(&spectra, &weights, &pilots.noise_levels)
}

pub(crate) fn lmm_estimate_from_spectra<T: Scalar>(
    spectra: &SpectralArray<T>,
    weights: &LmmWeightTable<T>,
    noise_levels: &[DVector<T>],
) -> Result<MatrixEstimateReport<T>> {
    let grid = &weights.grid;
    let d = spectra.dimension();
    let d2 = d * d;
    let n_bins = grid.n_bins();
    let j_max = weights.freq.j_max();
    if spectra.freq().j_max() < j_max {
        return Err(Error::invalid_argument(
            "spectral array has fewer frequencies than the weight table",
        ));
    }
    let h = grid.bin_width();
    let mut ts = vec![T::zero()];
    let mut estimates: Vec<Vec<T>> = vec![vec![T::zero(); d2]];
    let mut cum = DVector::<T>::zeros(d2);
    let mut covariance = DMatrix::<T>::zeros(d2, d2);
    let mut s_vec = DVector::<T>::zeros(d);
    for bin in 0..n_bins {
        let mut local = DVector::<T>::zeros(d2);
        for j in 1..=j_max {
            for p in 0..d {
                s_vec[p] = spectra.get(bin, j, p);
            }
            let mut outer = &s_vec * s_vec.transpose();
            let norm = continuous_norm(j, grid);
            for l in 0..d {
                outer[(l, l)] -= norm * noise_levels[bin][l];
            }
            local += &weights.weights[bin][j - 1] * vec_matrix(&outer)?;
        }
        cum += local * h;
        let chol = Cholesky::new(weights.fisher_per_bin[bin].clone())
            .ok_or_else(|| Error::SingularMatrix { min_eigenvalue: 0.0 })?;
        covariance += chol.inverse() * (h * h);
        ts.push(grid.right_edge(bin));
        estimates.push(cum.iter().copied().collect());
    }
    Ok(MatrixEstimateReport {
        d,
        ts,
        estimates,
        covariance: RowMajorMatrix::from_dmatrix(&covariance),
        mode: weights.mode,
        ci_level: real(0.95),
        estimator: "lmm".into(),
    })
}

/// Oracle local estimates: true spot covolatility at bin left edges and the
/// analytic local noise levels `η_l²/(n_l F_l'(t))`.
pub fn oracle_local_estimates<T: Scalar>(
    paths: &PathBundle<T>,
    config: &ScenarioConfig<T>,
    grid: &BinGrid<T>,
) -> Result<LocalEstimates<T>> {
    let d = config.d;
    let n_bins = grid.n_bins();
    let mut sigma = Vec::with_capacity(n_bins);
    let mut noise_levels = Vec::with_capacity(n_bins);
    for bin in 0..n_bins {
        let edge = grid.left_edge(bin);
        sigma.push(paths.covolatility_at_time(edge));
        let mut level = DVector::zeros(d);
        for l in 0..d {
            // Evaluate the density at the bin midpoint so power-law schemes
            // with F'(0) = 0 stay finite on the first bin.
            let at = edge.max(grid.bin_width() / real(2.0));
            level[l] = config.local_noise_level(l, at);
        }
        noise_levels.push(level);
    }
    Ok(LocalEstimates {
        sigma,
        noise_levels,
        borrowed_bins: Vec::new(),
    })
}

/// Adaptive local estimates: estimated noise levels and pilot covolatility.
pub fn adaptive_local_estimates<T: Scalar>(
    obs: &ObservationSet<T>,
    grid: &BinGrid<T>,
    params: &MdParams<T>,
) -> Result<LocalEstimates<T>> {
    let (noise_levels, borrowed_bins) = estimate_local_noise_levels(obs, grid)?;
    let n_max = (0..obs.dimension())
        .map(|l| obs.component(l).n_increments())
        .max()
        .unwrap_or(0);
    let k_window = params.pilot_window_for(n_max);
    let pilots = pilot_covolatility(
        obs,
        grid,
        params.j_max_pilot,
        k_window,
        &noise_levels,
        params.psd_floor_rel,
    )?;
    Ok(LocalEstimates {
        sigma: pilots.sigma,
        noise_levels,
        borrowed_bins,
    })
}

/// Full adaptive ICV pipeline for the pair `(p, q)`.
pub fn run_icv_adaptive<T: Scalar>(
    obs: &ObservationSet<T>,
    grid: &BinGrid<T>,
    params: &MdParams<T>,
    p: usize,
    q: usize,
) -> Result<EstimateReport<T>> {
    let local = adaptive_local_estimates(obs, grid, params)?;
    let freq = FrequencyRange::new(params.j_max_final)?;
    let weights = icv_weights(
        &local.sigma,
        &local.noise_levels,
        p,
        q,
        grid,
        &freq,
        WeightMode::Adaptive,
    )?;
    spectral_icv(obs, p, q, &weights, &local.noise_levels)
}

/// Oracle ICV pipeline (true spot covolatility and analytic noise levels).
pub fn run_icv_oracle<T: Scalar>(
    obs: &ObservationSet<T>,
    paths: &PathBundle<T>,
    config: &ScenarioConfig<T>,
    grid: &BinGrid<T>,
    params: &MdParams<T>,
    p: usize,
    q: usize,
) -> Result<EstimateReport<T>> {
    let local = oracle_local_estimates(paths, config, grid)?;
    let freq = FrequencyRange::new(params.j_max_final)?;
    let weights = icv_weights(
        &local.sigma,
        &local.noise_levels,
        p,
        q,
        grid,
        &freq,
        WeightMode::Oracle,
    )?;
    spectral_icv(obs, p, q, &weights, &local.noise_levels)
}

/// Full adaptive LMM pipeline.
pub fn run_lmm_adaptive<T: Scalar>(
    obs: &ObservationSet<T>,
    grid: &BinGrid<T>,
    params: &MdParams<T>,
) -> Result<MatrixEstimateReport<T>> {
    let local = adaptive_local_estimates(obs, grid, params)?;
    let freq = FrequencyRange::new(params.j_max_final)?;
    lmm_estimate(obs, &local, grid, &freq, WeightMode::Adaptive)
}

/// Oracle LMM pipeline.
pub fn run_lmm_oracle<T: Scalar>(
    obs: &ObservationSet<T>,
    paths: &PathBundle<T>,
    config: &ScenarioConfig<T>,
    grid: &BinGrid<T>,
    params: &MdParams<T>,
) -> Result<MatrixEstimateReport<T>> {
    let local = oracle_local_estimates(paths, config, grid)?;
    let freq = FrequencyRange::new(params.j_max_final)?;
    lmm_estimate(obs, &local, grid, &freq, WeightMode::Oracle)
}

/// Smallest eigenvalue of a symmetric matrix (diagnostic helper).
pub fn min_eigenvalue<T: Scalar>(m: &DMatrix<T>) -> T {
    let sym = (m + m.transpose()) / real::<T>(2.0);
    let eig = SymmetricEigen::new(sym);
    eig.eigenvalues
        .iter()
        .copied()
        .fold(T::max_value().unwrap_or_else(T::one), |a, b| a.min(b))
}

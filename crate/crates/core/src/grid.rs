//! Bin grids over the unit interval and spectral frequency ranges.
//!
//! The time interval `[0, 1]` is partitioned into `n_bins` equal bins
//! `[k·h, (k+1)·h]`, `k = 0, …, n_bins-1` (bins are 0-indexed in code). For a
//! regular observation grid `i/n` the bin width is snapped so that every bin
//! holds exactly `⌊n/n_bins⌋` observations; when `n/n_bins` is not an integer
//! this cuts off a small interval at the end and the effective horizon
//! `t_end = n_bins·⌊n/n_bins⌋/n` is exposed so that error metrics can
//! integrate ground truth over the same horizon. With the snapped width the
//! discrete sine-basis orthogonality relations hold exactly for every `n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{count, Scalar};

/// Equidistant partition of `[0, t_end]` into bins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinGrid<T> {
    n_bins: usize,
    bin_width: T,
    t_end: T,
    /// Observations per bin for grids snapped to a regular `i/n` design.
    obs_per_bin: Option<usize>,
}

impl<T: Scalar> BinGrid<T> {
    /// Grid of `n_bins` bins of width `1/n_bins` covering all of `[0, 1]`.
    ///
    /// This is the construction used with irregular (quantile-transformed or
    /// non-synchronous) observation times.
    pub fn uniform(n_bins: usize) -> Result<Self> {
        if n_bins == 0 {
            return Err(Error::invalid_argument("bin count must be positive"));
        }
        Ok(BinGrid {
            n_bins,
            bin_width: T::one() / count(n_bins),
            t_end: T::one(),
            obs_per_bin: None,
        })
    }

    /// Grid snapped to the regular design `i/n`, `i = 0, …, n`.
    ///
    /// Each bin holds exactly `⌊n/n_bins⌋` observations; the effective
    /// horizon is `t_end = n_bins·⌊n/n_bins⌋/n ≤ 1`.
    pub fn regular(n: usize, n_bins: usize) -> Result<Self> {
        if n_bins == 0 {
            return Err(Error::invalid_argument("bin count must be positive"));
        }
        let per_bin = n / n_bins;
        if per_bin < 2 {
            return Err(Error::invalid_argument(format!(
                "need at least 2 observations per bin, got {per_bin} (n = {n}, bins = {n_bins})"
            )));
        }
        let bin_width = count::<T>(per_bin) / count(n);
        Ok(BinGrid {
            n_bins,
            bin_width,
            t_end: bin_width * count(n_bins),
            obs_per_bin: Some(per_bin),
        })
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    /// Bin width `h`.
    pub fn bin_width(&self) -> T {
        self.bin_width
    }

    /// Effective horizon covered by the bins.
    pub fn t_end(&self) -> T {
        self.t_end
    }

    /// Observations per bin, when snapped to a regular grid.
    pub fn obs_per_bin(&self) -> Option<usize> {
        self.obs_per_bin
    }

    /// Left edge of bin `k` (0-indexed).
    pub fn left_edge(&self, bin: usize) -> T {
        self.bin_width * count(bin)
    }

    /// Right edge of bin `k` (0-indexed).
    pub fn right_edge(&self, bin: usize) -> T {
        self.bin_width * count(bin + 1)
    }

    /// Bin containing `t`, attributing points on interior edges to the bin on
    /// the right, with `t_end` itself attributed to the last bin.
    pub fn bin_of(&self, t: T) -> Option<usize> {
        if t < T::zero() || t > self.t_end {
            return None;
        }
        let idx = (t / self.bin_width).floor().to_subset().unwrap_or(0.0) as usize;
        Some(idx.min(self.n_bins - 1))
    }

    /// Largest admissible spectral frequency `⌊nh⌋ - 1` for snapped grids.
    pub fn max_frequency(&self) -> Option<usize> {
        self.obs_per_bin.map(|per_bin| per_bin - 1)
    }

    /// `t` clamped into the grid's horizon.
    pub fn clamp(&self, t: T) -> T {
        t.clamp(T::zero(), self.t_end)
    }
}

/// Spectral frequencies `j = 1, …, j_max` entering an estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyRange {
    j_max: usize,
}

impl FrequencyRange {
    pub fn new(j_max: usize) -> Result<Self> {
        if j_max == 0 {
            return Err(Error::invalid_argument("frequency cutoff must be >= 1"));
        }
        Ok(FrequencyRange { j_max })
    }

    /// Full admissible range `j = 1, …, ⌊nh⌋ - 1` of a regular grid.
    pub fn full<T: Scalar>(grid: &BinGrid<T>) -> Result<Self> {
        match grid.max_frequency() {
            Some(j_max) => FrequencyRange::new(j_max),
            None => Err(Error::invalid_argument(
                "full frequency range requires a grid snapped to a regular design",
            )),
        }
    }

    /// Range capped at `cap` but never exceeding the grid's admissible
    /// maximum (when the grid is snapped to a regular design).
    pub fn capped<T: Scalar>(cap: usize, grid: &BinGrid<T>) -> Result<Self> {
        let j_max = match grid.max_frequency() {
            Some(max_j) => cap.min(max_j),
            None => cap,
        };
        FrequencyRange::new(j_max)
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    /// Iterates the physical frequencies `1..=j_max`.
    pub fn frequencies(&self) -> impl Iterator<Item = usize> {
        1..=self.j_max
    }
}

/// Default bin count rule `h ≍ n^{-1/2} log n`, anchored at 25 bins for
/// n = 30000.
pub fn default_bin_count(n: usize) -> usize {
    let n_f = n as f64;
    let anchor = 25.0 * (n_f / 30000.0).sqrt() * (30000f64.ln() / n_f.ln());
    (anchor.round() as usize).max(1)
}

/// Default pilot window half-width `K_n = round(n^{1/4}/2)`, so that
/// `2K_n + 1 ≍ n^{1/4}`.
pub fn default_pilot_window(n: usize) -> usize {
    ((n as f64).powf(0.25) / 2.0).round() as usize
}

pub(crate) fn to_f64<T: Scalar>(x: T) -> f64 {
    x.to_subset().expect("scalar convertible to f64")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regular_grid_snaps_to_observation_count() {
        // nh integral: everything exact.
        let grid: BinGrid<f64> = BinGrid::regular(30000, 25).unwrap();
        assert_eq!(grid.obs_per_bin(), Some(1200));
        assert_eq!(grid.bin_width(), 0.04);
        assert_eq!(grid.t_end(), 1.0);
        assert_eq!(grid.max_frequency(), Some(1199));

        // nh not integral: horizon truncated to n_bins·⌊nh⌋/n.
        let grid: BinGrid<f64> = BinGrid::regular(5000, 7).unwrap();
        assert_eq!(grid.obs_per_bin(), Some(714));
        assert!((grid.t_end() - 7.0 * 714.0 / 5000.0).abs() < 1e-15);
        assert!(grid.t_end() < 1.0);
    }

    #[test]
    fn bin_lookup_covers_horizon() {
        let grid: BinGrid<f64> = BinGrid::uniform(25).unwrap();
        assert_eq!(grid.bin_of(0.0), Some(0));
        assert_eq!(grid.bin_of(0.04), Some(1));
        assert_eq!(grid.bin_of(1.0), Some(24));
        assert_eq!(grid.bin_of(1.0 + 1e-12), None);
        assert_eq!(grid.bin_of(-0.1), None);
    }

    #[test]
    fn bin_count_rule_matches_baseline() {
        assert_eq!(default_bin_count(30000), 25);
        // h ≍ n^{-1/2} log n scaling direction: more observations, more bins.
        assert!(default_bin_count(120000) > default_bin_count(30000));
        assert!(default_bin_count(5000) < default_bin_count(30000));
    }

    #[test]
    fn pilot_window_rule() {
        assert_eq!(default_pilot_window(30000), 7);
        assert_eq!(default_pilot_window(5000), 4);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(BinGrid::<f64>::uniform(0).is_err());
        assert!(BinGrid::<f64>::regular(10, 9).is_err());
        assert!(FrequencyRange::new(0).is_err());
    }
}

//! Spectral statistics of observed increments.
//!
//! For regular one-dimensional observations on `i/n`,
//!
//! ```text
//! S_jk = Σ_i Δ_i Y · Φ_jk(i/n),
//! ```
//!
//! evaluated through an exact integer-reduced sine table (within bin `k` the
//! arguments are `sin(jπl/N)`). For irregular or multivariate observations
//! the increments enter at their interval midpoints,
//!
//! ```text
//! S_jk^(p) = Σ_i Δ_i Y^(p) · Φ_jk((t_i + t_{i-1})/2),
//! ```
//!
//! with an increment attributed to the bin containing its midpoint.

use ndarray::Array3;

use crate::basis::SineTable;
use crate::error::{Error, Result};
use crate::grid::{BinGrid, FrequencyRange};
use crate::scalar::{real, Scalar};
use crate::sim::{ComponentObservations, ObservationSet};

/// Spectral statistics `S_jk^(p)` indexed by `(bin, frequency, component)`.
#[derive(Debug, Clone)]
pub struct SpectralArray<T> {
    values: Array3<T>,
    grid: BinGrid<T>,
    freq: FrequencyRange,
    d: usize,
}

impl<T: Scalar> SpectralArray<T> {
    /// `S_jk^(p)` for physical frequency `j >= 1` and 0-indexed bin.
    #[inline]
    pub fn get(&self, bin: usize, j: usize, component: usize) -> T {
        self.values[[bin, j - 1, component]]
    }

    pub fn grid(&self) -> &BinGrid<T> {
        &self.grid
    }

    pub fn freq(&self) -> &FrequencyRange {
        &self.freq
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    /// Restricts to the leading `j_max` frequencies.
    pub fn truncated(&self, j_max: usize) -> Result<SpectralArray<T>> {
        if j_max > self.freq.j_max() {
            return Err(Error::invalid_argument(
                "cannot truncate to more frequencies than computed",
            ));
        }
        Ok(SpectralArray {
            values: self.values.slice(ndarray::s![.., ..j_max, ..]).to_owned(),
            grid: self.grid,
            freq: FrequencyRange::new(j_max)?,
            d: self.d,
        })
    }
}

/// Computes the spectral statistics of every component.
///
/// Components flagged `regular` whose observation count matches the grid's
/// snapped design use the exact `i/n` evaluation; all others use midpoint
/// arguments.
pub fn spectral_statistics<T: Scalar>(
    obs: &ObservationSet<T>,
    grid: &BinGrid<T>,
    freq: &FrequencyRange,
) -> Result<SpectralArray<T>> {
    let d = obs.dimension();
    let mut values = Array3::zeros((grid.n_bins(), freq.j_max(), d));
    for l in 0..d {
        let comp = obs.component(l);
        if comp.times.len() < 2 {
            return Err(Error::invalid_argument("component with fewer than 2 observations"));
        }
        let use_regular = comp.regular
            && grid
                .obs_per_bin()
                .map(|per_bin| per_bin * grid.n_bins() <= comp.n_increments())
                .unwrap_or(false);
        if use_regular {
            accumulate_regular(comp, grid, freq, l, &mut values)?;
        } else {
            accumulate_midpoint(comp, grid, freq, l, &mut values);
        }
    }
    Ok(SpectralArray {
        values,
        grid: *grid,
        freq: *freq,
        d,
    })
}

fn accumulate_regular<T: Scalar>(
    comp: &ComponentObservations<T>,
    grid: &BinGrid<T>,
    freq: &FrequencyRange,
    component: usize,
    values: &mut Array3<T>,
) -> Result<()> {
    let per_bin = grid.obs_per_bin().expect("regular path requires snapped grid");
    if freq.j_max() > per_bin - 1 {
        return Err(Error::invalid_argument(format!(
            "frequency cutoff {} exceeds ⌊nh⌋-1 = {}",
            freq.j_max(),
            per_bin - 1
        )));
    }
    let table: SineTable<T> = SineTable::new(per_bin);
    let amp = (real::<T>(2.0) / grid.bin_width()).sqrt();
    let period = 2 * per_bin;
    let j_max = freq.j_max();
    for bin in 0..grid.n_bins() {
        let base = bin * per_bin;
        let mut acc = vec![T::zero(); j_max];
        for l in 1..=per_bin {
            let dy = comp.increment(base + l - 1);
            if dy == T::zero() {
                continue;
            }
            // r_j = (j·l) mod 2N advances by l per frequency step.
            let step = l % period;
            let mut r = step;
            for slot in acc.iter_mut() {
                *slot += dy * table.value_at(r);
                r += step;
                if r >= period {
                    r -= period;
                }
            }
        }
        for (j_slot, v) in acc.into_iter().enumerate() {
            values[[bin, j_slot, component]] = v * amp;
        }
    }
    Ok(())
}

fn accumulate_midpoint<T: Scalar>(
    comp: &ComponentObservations<T>,
    grid: &BinGrid<T>,
    freq: &FrequencyRange,
    component: usize,
    values: &mut Array3<T>,
) {
    let h = grid.bin_width();
    let amp = (real::<T>(2.0) / h).sqrt();
    let j_max = freq.j_max();
    for i in 0..comp.n_increments() {
        let mid = comp.midpoint(i);
        let bin = match grid.bin_of(mid) {
            Some(b) => b,
            None => continue,
        };
        let dy = comp.increment(i);
        if dy == T::zero() {
            continue;
        }
        let theta = T::pi() * (mid - grid.left_edge(bin)) / h;
        // sin(jθ), cos(jθ) by complex rotation; drift is O(j·ε), negligible
        // for the frequency counts used here.
        let (s1, c1) = (theta.sin(), theta.cos());
        let (mut s, mut c) = (s1, c1);
        let scaled = dy * amp;
        for j_slot in 0..j_max {
            values[[bin, j_slot, component]] += scaled * s;
            let s_next = s * c1 + c * s1;
            c = c * c1 - s * s1;
            s = s_next;
        }
    }
}

//! Estimate reports: point-estimate paths, variance estimates and confidence
//! intervals, exportable as JSON and CSV.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrixops::{unvec_matrix, MatrixOpsContext};
use crate::scalar::{real, Scalar};
use crate::stats::normal_quantile;

/// Whether an estimator ran with oracle or data-driven weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    Oracle,
    Adaptive,
}

/// Scalar estimate path `t ↦ estimate` at bin edges with the matching
/// cumulative variance estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport<T> {
    /// Bin edges `0, h, 2h, …, t_end`.
    pub ts: Vec<T>,
    /// Cumulative estimate at each edge (`estimates[0] = 0`).
    pub estimates: Vec<T>,
    /// Cumulative variance estimate at each edge.
    pub variances: Vec<T>,
    /// Estimated (or true, in oracle mode) noise variance, when applicable.
    pub eta_sq: Option<T>,
    pub mode: WeightMode,
    /// Confidence level used by the CSV export.
    pub ci_level: T,
    /// Short label of the estimator that produced the report.
    pub estimator: String,
}

impl<T: Scalar> EstimateReport<T> {
    pub fn final_estimate(&self) -> T {
        *self.estimates.last().expect("non-empty report")
    }

    pub fn final_variance(&self) -> T {
        *self.variances.last().expect("non-empty report")
    }

    /// Two-sided confidence interval at the report's final time.
    pub fn confidence_interval(&self, level: T) -> Result<(T, T)> {
        self.confidence_interval_at(self.ts.len() - 1, level)
    }

    /// Two-sided confidence interval at bin edge `idx`.
    pub fn confidence_interval_at(&self, idx: usize, level: T) -> Result<(T, T)> {
        if level <= T::zero() || level >= T::one() {
            return Err(Error::invalid_argument("confidence level must lie in (0, 1)"));
        }
        let var = self.variances[idx];
        if idx > 0 && var <= T::zero() {
            return Err(Error::InvalidReport(
                "variance estimate must be positive for confidence intervals".into(),
            ));
        }
        let z = normal_quantile((T::one() + level) / real(2.0))?;
        let half = z * var.max(T::zero()).sqrt();
        let est = self.estimates[idx];
        Ok((est - half, est + half))
    }

    /// CSV export with columns `t,estimate,variance,ci_lo,ci_hi`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "t,estimate,variance,ci_lo,ci_hi")?;
        for idx in 0..self.ts.len() {
            let (lo, hi) = if idx == 0 {
                (self.estimates[0], self.estimates[0])
            } else {
                self.confidence_interval_at(idx, self.ci_level)?
            };
            writeln!(
                out,
                "{},{},{},{},{}",
                fmt(self.ts[idx]),
                fmt(self.estimates[idx]),
                fmt(self.variances[idx]),
                fmt(lo),
                fmt(hi)
            )?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String>
    where
        T: Serialize,
    {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Dense matrix serialized row-major with explicit dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowMajorMatrix<T> {
    pub dims: [usize; 2],
    pub data: Vec<T>,
}

impl<T: Scalar> RowMajorMatrix<T> {
    pub fn from_dmatrix(m: &DMatrix<T>) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                data.push(m[(r, c)]);
            }
        }
        RowMajorMatrix { dims: [m.nrows(), m.ncols()], data }
    }

    pub fn to_dmatrix(&self) -> DMatrix<T> {
        DMatrix::from_row_slice(self.dims[0], self.dims[1], &self.data)
    }
}

/// Vector-valued (vectorized covolatility matrix) estimate path with a
/// `d²×d²` covariance estimate at the final time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixEstimateReport<T> {
    pub d: usize,
    pub ts: Vec<T>,
    /// Cumulative vectorized estimates (column-major `vec`), one per edge.
    pub estimates: Vec<Vec<T>>,
    /// Final covariance estimate of the vectorized estimator.
    pub covariance: RowMajorMatrix<T>,
    pub mode: WeightMode,
    pub ci_level: T,
    pub estimator: String,
}

impl<T: Scalar> MatrixEstimateReport<T> {
    pub fn final_vec(&self) -> DVector<T> {
        DVector::from_vec(self.estimates.last().expect("non-empty report").clone())
    }

    /// Final estimate reshaped to a `d×d` matrix.
    pub fn final_matrix(&self) -> Result<DMatrix<T>> {
        unvec_matrix(&self.final_vec())
    }

    pub fn covariance_matrix(&self) -> DMatrix<T> {
        self.covariance.to_dmatrix()
    }

    /// Marginal confidence interval for matrix entry `(p, q)` (0-indexed),
    /// using the studentization `Î^{1/2}(estimate - truth) → N(0, 𝒵)`, i.e.
    /// marginal variances `diag(Î⁻¹𝒵)`.
    pub fn entry_confidence_interval(&self, p: usize, q: usize, level: T) -> Result<(T, T)> {
        if p >= self.d || q >= self.d {
            return Err(Error::invalid_argument("matrix entry out of range"));
        }
        if level <= T::zero() || level >= T::one() {
            return Err(Error::invalid_argument("confidence level must lie in (0, 1)"));
        }
        let idx = q * self.d + p;
        let ctx = MatrixOpsContext::new(self.d)?;
        let marginal = (self.covariance_matrix() * ctx.z_matrix())[(idx, idx)];
        if marginal <= T::zero() {
            return Err(Error::InvalidReport("non-positive marginal variance".into()));
        }
        let z = normal_quantile((T::one() + level) / real(2.0))?;
        let est = self.final_vec()[idx];
        let half = z * marginal.sqrt();
        Ok((est - half, est + half))
    }

    /// Long-format CSV: `t,p,q,estimate` rows for the whole path.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "t,p,q,estimate")?;
        for (edge, est) in self.ts.iter().zip(&self.estimates) {
            for q in 0..self.d {
                for p in 0..self.d {
                    writeln!(
                        out,
                        "{},{},{},{}",
                        fmt(*edge),
                        p + 1,
                        q + 1,
                        fmt(est[q * self.d + p])
                    )?;
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String>
    where
        T: Serialize,
    {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn fmt<T: Scalar>(x: T) -> String {
    format!("{:.*e}", 12, x.to_subset().unwrap_or(f64::NAN))
}

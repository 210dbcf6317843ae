//! Small statistical helpers: normal quantiles, Wilson intervals, moments.

use crate::error::{Error, Result};
use crate::scalar::{count, real, Scalar};

/// Inverse standard normal CDF.
///
/// Acklam's rational approximation (|relative error| < 1.15e-9) followed by
/// one Halley refinement step, which brings the error down to the order of
/// machine precision in `f64`.
pub fn normal_quantile<T: Scalar>(p: T) -> Result<T> {
    let p64 = p.to_subset().ok_or_else(|| Error::numeric_domain("probability not finite"))?;
    if !(0.0..=1.0).contains(&p64) || p64 == 0.0 || p64 == 1.0 {
        return Err(Error::numeric_domain(format!(
            "normal quantile needs p in (0, 1), got {p64}"
        )));
    }
    Ok(real(normal_quantile_f64(p64)))
}

fn normal_quantile_f64(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    // One Halley step against the exact CDF.
    let e = normal_cdf_f64(x) - p;
    let u = e * (2.0 * std::f64::consts::PI).sqrt() * (x * x / 2.0).exp();
    x - u / (1.0 + x * u / 2.0)
}

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf<T: Scalar>(x: T) -> T {
    real(normal_cdf_f64(x.to_subset().expect("finite scalar")))
}

fn normal_cdf_f64(x: f64) -> f64 {
    0.5 * erfc_f64(-x / std::f64::consts::SQRT_2)
}

fn erfc_f64(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc_f64(-x);
    }
    if x < 2.5 {
        1.0 - erf_series(x)
    } else {
        erfc_continued_fraction(x)
    }
}

// erf(x) = 2x e^{-x²}/√π · Σ_k (2x²)^k / (2k+1)!!, stable for moderate x.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term: f64 = 1.0;
    let mut sum: f64 = 1.0;
    let mut k = 0.0;
    while term.abs() > 1e-18 * sum.abs() {
        k += 1.0;
        term *= 2.0 * x2 / (2.0 * k + 1.0);
        sum += term;
        if k > 200.0 {
            break;
        }
    }
    2.0 * x * (-x2).exp() / std::f64::consts::PI.sqrt() * sum
}

// erfc(x) = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + …)))) for large
// x, evaluated with the modified Lentz algorithm.
fn erfc_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x.max(TINY);
    let mut c = f;
    let mut d = 0.0;
    for k in 1..200 {
        // Partial numerators k/2, partial denominators x throughout.
        let a = k as f64 / 2.0;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (std::f64::consts::PI.sqrt() * f)
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, trials: usize, confidence: f64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::invalid_argument("Wilson interval needs trials >= 1"));
    }
    let z: f64 = normal_quantile((1.0 + confidence) / 2.0)?;
    let n = trials as f64;
    let p = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * ((p * (1.0 - p) + z * z / (4.0 * n)) / n).sqrt() / denom;
    Ok(((centre - half).max(0.0), (centre + half).min(1.0)))
}

/// Population mean and variance (denominator `n`), so that
/// `rmse² = bias² + variance` holds exactly for the matching RMSE.
pub fn mean_variance<T: Scalar>(values: &[T]) -> (T, T) {
    if values.is_empty() {
        return (T::zero(), T::zero());
    }
    let n = count::<T>(values.len());
    let mean = pairwise_sum(values) / n;
    let sq: Vec<T> = values.iter().map(|&v| (v - mean) * (v - mean)).collect();
    (mean, pairwise_sum(&sq) / n)
}

/// Pairwise (cascade) summation: associativity-stable, so aggregates do not
/// depend on how replications were distributed across workers.
pub fn pairwise_sum<T: Scalar>(values: &[T]) -> T {
    match values.len() {
        0 => T::zero(),
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Simple trapezoidal rule over a uniformly spaced sample.
pub fn trapezoid_uniform<T: Scalar>(values: &[T], dt: T) -> T {
    if values.len() < 2 {
        return T::zero();
    }
    let inner: T = values[1..values.len() - 1]
        .iter()
        .fold(T::zero(), |acc, &v| acc + v);
    (inner + (values[0] + values[values.len() - 1]) / real(2.0)) * dt
}

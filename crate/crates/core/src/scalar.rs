//! Scalar abstraction for the numeric core.
//!
//! Everything numeric in this crate is generic over a real scalar type. The
//! trait below bundles what the estimators actually need: real field
//! arithmetic with elementary functions (via [`nalgebra::RealField`]) and
//! conversions from primitive literals (via [`num_traits::FromPrimitive`]).
//! `f32` and `f64` satisfy it out of the box; `f64` is what the type aliases
//! at the crate root use.

use nalgebra::RealField;
use num_traits::FromPrimitive;

/// Real scalar type usable throughout the crate.
pub trait Scalar: RealField + FromPrimitive + Copy + Send + Sync {}

impl<T> Scalar for T where T: RealField + FromPrimitive + Copy + Send + Sync {}

/// Converts an `f64` literal into the working scalar type.
#[inline]
pub fn real<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

/// Converts a `usize` count into the working scalar type.
#[inline]
pub fn count<T: Scalar>(n: usize) -> T {
    T::from_usize(n).expect("count representable in scalar type")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_round_trip() {
        let x: f64 = real(0.25);
        assert_eq!(x, 0.25);
        let n: f32 = count(7);
        assert_eq!(n, 7.0);
    }
}

//! Scalar abstraction for the dense-matrix kernel.
//!
//! The linear-algebra and norm layers are generic over [`Real`], which is any
//! IEEE float with the usual elementary operations (`f32` and `f64` in
//! practice). The stochastic layers (sampling, solvers, experiments) fix
//! `f64` through the crate-root aliases.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by the matrix kernel.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, for tolerances and step sizes.
    #[inline]
    fn from_f64_lossy(x: f64) -> Self {
        Self::from(x).expect("f64 conversion")
    }

    /// Lossy conversion to `f64`, for reporting.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("f64 conversion")
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Send + Sync + 'static
{
}

#[cfg(test)]
mod tests {
    use super::*;

    fn accepts_real<T: Real>() {}

    #[test]
    fn f32_and_f64_are_real() {
        accepts_real::<f32>();
        accepts_real::<f64>();
    }

    #[test]
    fn lossy_round_trip() {
        assert_eq!(f64::from_f64_lossy(1.5), 1.5);
        assert_eq!(f32::from_f64_lossy(1.5), 1.5f32);
        assert_eq!(1.5f32.to_f64_lossy(), 1.5);
    }
}

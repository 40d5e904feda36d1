//! Scalar abstraction shared by every numerical module.
//!
//! All model and optimizer code is written against [`Real`], which is
//! implemented for `f32` and `f64`. Complex quantities are
//! `num_complex::Complex<T>`.

use core::fmt::{Debug, Display};
use core::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, NumAssign};

/// Real floating-point scalar used throughout the crate.
pub trait Real:
    Float + FloatConst + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(v: f64) -> Self {
        // f32 and f64 both accept every finite f64 (f32 rounds).
        <Self as num_traits::NumCast>::from(v).expect("f64 literal representable")
    }

    /// Converts a count into `Self`.
    #[inline]
    fn from_usize(n: usize) -> Self {
        Self::lit(n as f64)
    }

    /// Lossy conversion to `f64` for reporting.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand for a complex number over `T`.
pub type C<T> = Complex<T>;

/// `exp(j * phase)`.
#[inline]
pub fn cis<T: Real>(phase: T) -> Complex<T> {
    Complex::new(phase.cos(), phase.sin())
}

/// Squared modulus.
#[inline]
pub fn norm_sqr<T: Real>(z: Complex<T>) -> T {
    z.re * z.re + z.im * z.im
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_round_trip() {
        assert_eq!(<f64 as Real>::lit(0.25), 0.25);
        assert_eq!(<f32 as Real>::lit(0.25), 0.25f32);
        assert_eq!(<f64 as Real>::from_usize(16), 16.0);
    }

    #[test]
    fn cis_is_unit_modulus() {
        let z = cis(1.234_f64);
        assert!((norm_sqr(z) - 1.0).abs() < 1e-15);
    }
}

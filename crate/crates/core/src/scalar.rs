//! Scalar abstraction for the numeric core.
//!
//! Everything downstream of the exact spin bookkeeping (matrix elements,
//! Boltzmann sums, witness values, fits) is written against [`Real`] so the
//! same code instantiates at `f32` or `f64`. The concrete aliases exported
//! from the crate root use `f64`, which is what the CLI and the quantitative
//! tolerances in the test suite assume.

use num_traits::ToPrimitive;

/// Floating-point scalar usable throughout the crate.
///
/// `nalgebra::RealField` supplies field operations and transcendentals for
/// the dense linear algebra; `num_traits::ToPrimitive` gives a lossless-ish
/// escape hatch back to `f64` for error reporting and I/O formatting.
pub trait Real: nalgebra::RealField + ToPrimitive + Copy {}

impl Real for f32 {}
impl Real for f64 {}

/// Lift an `f64` constant into the working scalar type.
///
/// Thin wrapper over `nalgebra::convert` so call sites read as `lift(0.5)`
/// rather than spelling the subset-trait machinery.
#[inline]
pub fn lift<R: Real>(x: f64) -> R {
    nalgebra::convert(x)
}

/// Lower a working scalar to `f64` (for diagnostics and printing).
#[inline]
pub fn lower<R: Real>(x: R) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

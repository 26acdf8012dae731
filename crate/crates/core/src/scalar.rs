//! Scalar abstraction for the dense linear algebra and the cocycles.
//!
//! Everything in [`crate::matgroup`] and [`crate::cocycles`] is written
//! against [`Scalar`], so the kernels run in `f32` or `f64`. The Monte Carlo
//! layers above them work in `f64` only.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar usable by the matrix kernels.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Relative pivot threshold below which a matrix is treated as singular.
    fn singular_tol() -> Self;
    /// Off-diagonal threshold at which a Jacobi rotation is skipped.
    fn jacobi_tol() -> Self;

    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }
}

impl Scalar for f64 {
    fn singular_tol() -> Self {
        1e-12
    }
    fn jacobi_tol() -> Self {
        // a few ulps: drives the off-diagonal mass well below 1e-12
        4.0 * f64::EPSILON
    }
}

impl Scalar for f32 {
    fn singular_tol() -> Self {
        1e-5
    }
    fn jacobi_tol() -> Self {
        4.0 * f32::EPSILON
    }
}

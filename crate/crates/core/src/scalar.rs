//! Scalar abstraction shared by the numerical modules.
//!
//! Everything in this crate is generic over a real floating type `T: Real`
//! (`f32` or `f64`). Complex quantities are `Complex<T>`. Tolerances that the
//! algorithms rely on are associated constants so the single-precision
//! instantiation gets thresholds it can actually meet.

use std::fmt;

use nalgebra::{Complex, DMatrix, DVector, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// Complex entry type of problem vectors and matrices.
pub type ComplexScalar<T> = Complex<T>;
/// Dense complex matrix.
pub type CMatrix<T> = DMatrix<Complex<T>>;
/// Dense complex vector.
pub type CVector<T> = DVector<Complex<T>>;

/// Real floating-point scalar usable throughout the crate.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + fmt::Display + fmt::LowerExp + Send + Sync + 'static
{
    /// Relative Hermiticity defect tolerated on a loaded `A`.
    const HERMITIAN_TOL: f64;
    /// Relative band below zero in which eigenvalues count as nullspace.
    const PSD_TOL: f64;
    /// Relative tolerance for nullspace orthogonality of the linear term.
    const NULLSPACE_TOL: f64;
    /// Relative tolerance (to the set diameter) for even-spacing detection.
    const FIT_TOL: f64;
    /// Relative tolerance on the imaginary part of a Hermitian quadratic form.
    const IMAG_TOL: f64;
    /// Absolute tolerance on the imaginary part of the constant term.
    const CONST_IMAG_TOL: f64;
    /// Residual tolerance of iterative linear solves.
    const SOLVE_TOL: f64;

    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("literal representable")
    }

    #[inline]
    fn from_usize_lossy(x: usize) -> Self {
        <Self as FromPrimitive>::from_usize(x).expect("integer representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Machine epsilon of the type.
    fn machine_eps() -> Self;
}

impl Real for f64 {
    const HERMITIAN_TOL: f64 = 1e-10;
    const PSD_TOL: f64 = 1e-10;
    const NULLSPACE_TOL: f64 = 1e-8;
    const FIT_TOL: f64 = 1e-9;
    const IMAG_TOL: f64 = 1e-10;
    const CONST_IMAG_TOL: f64 = 1e-12;
    const SOLVE_TOL: f64 = 1e-10;

    fn machine_eps() -> Self {
        f64::EPSILON
    }
}

impl Real for f32 {
    const HERMITIAN_TOL: f64 = 1e-5;
    const PSD_TOL: f64 = 1e-5;
    const NULLSPACE_TOL: f64 = 1e-3;
    const FIT_TOL: f64 = 1e-5;
    const IMAG_TOL: f64 = 1e-4;
    const CONST_IMAG_TOL: f64 = 1e-6;
    const SOLVE_TOL: f64 = 1e-5;

    fn machine_eps() -> Self {
        f32::EPSILON
    }
}

/// Builds a complex number from its real part.
#[inline]
pub fn re<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

/// Total order on complex numbers by `(re, im)`, used for canonical set order.
pub fn canonical_cmp<T: Real>(a: &Complex<T>, b: &Complex<T>) -> std::cmp::Ordering {
    a.re.as_f64().total_cmp(&b.re.as_f64()).then(a.im.as_f64().total_cmp(&b.im.as_f64()))
}

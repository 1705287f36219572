//! Scalar abstraction shared by every numerical module.

use std::fmt;

use nalgebra::{DMatrix, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

pub use num_complex::Complex;

/// Real floating-point scalar the tensor machinery is generic over.
///
/// Everything numerical is computed in `Complex<T>`; `T` itself carries norms,
/// singular values, tolerances and time steps.
pub trait Real:
    RealField + Copy + Default + FromPrimitive + ToPrimitive + fmt::LowerExp + fmt::Display
{
    /// Converts an `f64` literal or parameter into this scalar type.
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 is representable")
    }

    /// Widens to `f64` for reporting and I/O.
    fn as_f64(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).expect("finite scalar")
    }

    /// Machine epsilon of the type.
    fn eps() -> Self;
}

impl Real for f32 {
    fn eps() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    fn eps() -> Self {
        f64::EPSILON
    }
}

/// A local operator: a dense `d x d` complex matrix acting on one site.
pub type LocalOp<T> = DMatrix<Complex<T>>;

/// Shorthand for a purely real complex number.
#[inline]
pub fn re<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

/// Complex number from two `f64` parts.
#[inline]
pub fn c<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::of(re), T::of(im))
}

/// `exp(z)` for complex `z`, written out so only [`RealField`] is needed.
#[inline]
pub fn cexp<T: Real>(z: Complex<T>) -> Complex<T> {
    let m = z.re.exp();
    Complex::new(m * z.im.cos(), m * z.im.sin())
}

/// Modulus of a complex number.
#[inline]
pub fn cabs<T: Real>(z: Complex<T>) -> T {
    z.re.hypot(z.im)
}

/// Returns true when `op` equals its conjugate transpose to `tol` (max entry).
pub fn is_hermitian<T: Real>(op: &LocalOp<T>, tol: T) -> bool {
    if op.nrows() != op.ncols() {
        return false;
    }
    let n = op.nrows();
    for i in 0..n {
        for j in 0..n {
            if cabs(op[(i, j)] - op[(j, i)].conj()) > tol {
                return false;
            }
        }
    }
    true
}

//! Scalar abstractions shared by the whole crate.
//!
//! [`Real`] is the floating point type the solver is generic over (`f32` or
//! `f64`). [`Entry`] is anything that can sit in a [`DenseMatrix`]: a real
//! scalar or a complex number built on one.
//!
//! [`DenseMatrix`]: crate::linalg::DenseMatrix

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::Neg;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + std::fmt::LowerExp
    + Send
    + Sync
    + 'static
    + Entry<Real = Self>
{
    /// Converts an `f64` literal; every `f64` value is representable (possibly rounded).
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal converts to every Real")
    }

    /// Converts a count or index.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("usize converts to every Real")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Element type of a dense matrix: a [`Real`] or a `Complex<Real>`.
pub trait Entry: Copy + NumAssign + Neg<Output = Self> + PartialEq + Debug + Send + Sync + 'static {
    type Real: Real;

    /// Absolute value (real) or modulus (complex).
    fn modulus(self) -> Self::Real;
    fn from_real(r: Self::Real) -> Self;
    fn finite(self) -> bool;
}

macro_rules! impl_real_entry {
    ($t:ty) => {
        impl Entry for $t {
            type Real = $t;

            #[inline]
            fn modulus(self) -> $t {
                self.abs()
            }

            #[inline]
            fn from_real(r: $t) -> Self {
                r
            }

            #[inline]
            fn finite(self) -> bool {
                <$t>::is_finite(self)
            }
        }
    };
}

impl_real_entry!(f32);
impl_real_entry!(f64);

impl<T: Real> Entry for Complex<T> {
    type Real = T;

    #[inline]
    fn modulus(self) -> T {
        self.norm()
    }

    #[inline]
    fn from_real(r: T) -> Self {
        Complex::new(r, T::zero())
    }

    #[inline]
    fn finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Largest absolute entry of a slice (0 for an empty slice).
pub fn max_abs<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

//! Scalar traits the numerical code is generic over.

use std::fmt::{Debug, Display};
use std::ops::{AddAssign, DivAssign, MulAssign, Neg, SubAssign};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, Num, NumAssign, NumCast};

use crate::dd::Dd;

/// Real floating point type: `f32`, `f64` or [`Dd`].
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumCast
    + NumAssign
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
    + Field<Real = Self, Wide = <Self as Real>::Wider>
{
    /// Type determinants are evaluated in: `f64` for `f32`, [`Dd`] for
    /// `f64` and for itself.
    type Wider: Real;

    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("f64 literal representable")
    }

    fn count(n: usize) -> Self {
        <Self as NumCast>::from(n).expect("usize representable")
    }

    fn as_f64(self) -> f64 {
        <f64 as NumCast>::from(self).unwrap_or(f64::NAN)
    }
}

/// Summation over iterators of field elements.
pub trait Total: Iterator + Sized
where
    Self::Item: Field,
{
    fn total(self) -> Self::Item {
        self.fold(<Self::Item as num_traits::Zero>::zero(), |acc, x| acc + x)
    }
}

impl<I: Iterator> Total for I where I::Item: Field {}

impl Real for f32 {
    type Wider = f64;
}

impl Real for f64 {
    type Wider = Dd;
}

impl Real for Dd {
    type Wider = Dd;
}

/// Entry type of the determinant and linear-solve routines: a real float or
/// a complex number over one.
pub trait Field:
    Copy
    + Num
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Debug
    + Send
    + Sync
    + 'static
{
    type Real: Real;
    type Wide: Field<Real = <Self::Real as Real>::Wider>;

    fn widen(self) -> Self::Wide;
    fn narrow(w: Self::Wide) -> Self;

    fn from_real(r: Self::Real) -> Self;
    /// Absolute value, used for pivot selection.
    fn modulus(self) -> Self::Real;
    fn finite(self) -> bool;
    fn conj(self) -> Self;
    fn re(self) -> Self::Real;
    fn im(self) -> Self::Real;
    fn to_complex(self) -> Complex<Self::Real> {
        Complex::new(self.re(), self.im())
    }
}

macro_rules! impl_field_real {
    ($t:ty, |$x:ident| $widen:expr, |$w:ident| $narrow:expr) => {
        impl Field for $t {
            type Real = $t;
            type Wide = <$t as Real>::Wider;
            #[inline]
            fn widen(self) -> Self::Wide {
                let $x = self;
                $widen
            }
            #[inline]
            fn narrow($w: Self::Wide) -> Self {
                $narrow
            }
            #[inline]
            fn from_real(r: $t) -> Self {
                r
            }
            #[inline]
            fn modulus(self) -> $t {
                Float::abs(self)
            }
            #[inline]
            fn finite(self) -> bool {
                Float::is_finite(self)
            }
            #[inline]
            fn conj(self) -> Self {
                self
            }
            #[inline]
            fn re(self) -> $t {
                self
            }
            #[inline]
            fn im(self) -> $t {
                <$t as num_traits::Zero>::zero()
            }
        }
    };
}

impl<T: Real> Field for Complex<T> {
    type Real = T;
    type Wide = Complex<T::Wider>;
    #[inline]
    fn widen(self) -> Self::Wide {
        Complex::new(Field::widen(self.re), Field::widen(self.im))
    }
    #[inline]
    fn narrow(w: Self::Wide) -> Self {
        Complex::new(<T as Field>::narrow(w.re), <T as Field>::narrow(w.im))
    }
    #[inline]
    fn from_real(r: T) -> Self {
        Complex::new(r, T::zero())
    }
    #[inline]
    fn modulus(self) -> T {
        self.norm()
    }
    #[inline]
    fn finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    #[inline]
    fn conj(self) -> Self {
        Complex::conj(&self)
    }
    #[inline]
    fn re(self) -> T {
        self.re
    }
    #[inline]
    fn im(self) -> T {
        self.im
    }
}

impl_field_real!(f32, |x| x as f64, |w| w as f32);
impl_field_real!(f64, |x| Dd::new(x), |w| w.hi() + w.lo());
impl_field_real!(Dd, |x| x, |w| w);

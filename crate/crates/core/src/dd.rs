//! Double-double scalar used to polish solutions the Jacobian of which is
//! too ill-conditioned for `f64`.
//!
//! Arithmetic is delegated to [`TwoFloat`] except division: the upstream
//! quotient forms `1 − b·(1/b)` without a fused multiply-add and so is only
//! accurate to `f64` precision when the divisor has a nonzero low word.

use std::cmp::Ordering;
use std::fmt;
use std::num::FpCategory;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, RemAssign, Sub, SubAssign};

use num_traits::{Float, FloatConst, FromPrimitive, Num, NumCast, One, ToPrimitive, Zero};
use twofloat::TwoFloat;

#[derive(Clone, Copy, Default, PartialEq)]
pub struct Dd(pub TwoFloat);

impl Dd {
    pub const fn new(x: f64) -> Self {
        Dd(TwoFloat::from_f64(x))
    }

    pub fn hi(self) -> f64 {
        self.0.hi()
    }

    pub fn lo(self) -> f64 {
        self.0.lo()
    }
}

impl PartialOrd for Dd {
    /// Lexicographic on the words; the upstream ordering misorders the
    /// infinities.
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi().partial_cmp(&other.hi())? {
            Ordering::Equal if self.hi().is_finite() => self.lo().partial_cmp(&other.lo()),
            o => Some(o),
        }
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd::new(x)
    }
}

impl fmt::Debug for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dd({:e} + {:e})", self.hi(), self.lo())
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl fmt::LowerExp for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::LowerExp::fmt(&self.0, f)
    }
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident, $tra:ident, $ma:ident) => {
        impl $tr for Dd {
            type Output = Dd;
            #[inline]
            fn $m(self, rhs: Dd) -> Dd {
                Dd($tr::$m(self.0, rhs.0))
            }
        }
        impl $tra for Dd {
            #[inline]
            fn $ma(&mut self, rhs: Dd) {
                *self = $tr::$m(*self, rhs);
            }
        }
    };
}

forward_binop!(Add, add, AddAssign, add_assign);
forward_binop!(Sub, sub, SubAssign, sub_assign);
forward_binop!(Mul, mul, MulAssign, mul_assign);
forward_binop!(Rem, rem, RemAssign, rem_assign);

impl Div for Dd {
    type Output = Dd;
    /// Long division with three `f64` quotient digits; each remainder
    /// `a − b·q` is formed exactly enough by the double-double product.
    fn div(self, rhs: Dd) -> Dd {
        let (a, b) = (self.0, rhs.0);
        let q1 = a.hi() / b.hi();
        if !q1.is_finite() || q1 == 0.0 {
            return Dd(a / b);
        }
        let r = a - b * q1;
        let q2 = r.hi() / b.hi();
        let r = r - b * q2;
        let q3 = r.hi() / b.hi();
        Dd(TwoFloat::new_add(q1, q2) + q3)
    }
}

impl DivAssign for Dd {
    fn div_assign(&mut self, rhs: Dd) {
        *self = *self / rhs;
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd(-self.0)
    }
}

impl Zero for Dd {
    fn zero() -> Self {
        Dd(TwoFloat::zero())
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl One for Dd {
    fn one() -> Self {
        Dd(TwoFloat::one())
    }
}

impl Num for Dd {
    type FromStrRadixErr = <TwoFloat as Num>::FromStrRadixErr;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        TwoFloat::from_str_radix(s, radix).map(Dd)
    }
}

impl ToPrimitive for Dd {
    fn to_i64(&self) -> Option<i64> {
        self.0.to_i64()
    }
    fn to_u64(&self) -> Option<u64> {
        self.0.to_u64()
    }
    fn to_f64(&self) -> Option<f64> {
        self.0.to_f64()
    }
}

impl FromPrimitive for Dd {
    fn from_i64(n: i64) -> Option<Self> {
        TwoFloat::from_i64(n).map(Dd)
    }
    fn from_u64(n: u64) -> Option<Self> {
        TwoFloat::from_u64(n).map(Dd)
    }
    fn from_f64(n: f64) -> Option<Self> {
        Some(Dd::new(n))
    }
}

impl NumCast for Dd {
    fn from<T: ToPrimitive>(n: T) -> Option<Self> {
        <TwoFloat as NumCast>::from(n).map(Dd)
    }
}

macro_rules! forward_consts {
    ($($c:ident),*) => {
        impl FloatConst for Dd {
            $(fn $c() -> Self { Dd(TwoFloat::$c()) })*
        }
    };
}

forward_consts!(
    E,
    FRAC_1_PI,
    FRAC_1_SQRT_2,
    FRAC_2_PI,
    FRAC_2_SQRT_PI,
    FRAC_PI_2,
    FRAC_PI_3,
    FRAC_PI_4,
    FRAC_PI_6,
    FRAC_PI_8,
    LN_10,
    LN_2,
    LOG10_E,
    LOG2_E,
    PI,
    SQRT_2
);

macro_rules! forward_unary {
    ($($m:ident),*) => {
        $(#[inline] fn $m(self) -> Self { Dd(Float::$m(self.0)) })*
    };
}

macro_rules! forward_const {
    ($($m:ident),*) => {
        $(fn $m() -> Self { Dd(<TwoFloat as Float>::$m()) })*
    };
}

macro_rules! forward_pred {
    ($($m:ident),*) => {
        $(#[inline] fn $m(self) -> bool { Float::$m(self.0) })*
    };
}

macro_rules! forward_binary {
    ($($m:ident),*) => {
        $(#[inline] fn $m(self, other: Self) -> Self { Dd(Float::$m(self.0, other.0)) })*
    };
}

impl Float for Dd {
    forward_const!(
        nan,
        infinity,
        neg_infinity,
        neg_zero,
        min_value,
        min_positive_value,
        max_value
    );
    forward_pred!(
        is_nan,
        is_infinite,
        is_finite,
        is_normal,
        is_sign_positive,
        is_sign_negative
    );
    forward_unary!(
        floor, ceil, round, trunc, fract, abs, signum, sqrt, exp, exp2, ln, log2, log10, cbrt, sin, cos, tan,
        asin, acos, atan, exp_m1, ln_1p, sinh, cosh, tanh, asinh, acosh, atanh
    );
    forward_binary!(powf, log, abs_sub, hypot, atan2);

    fn epsilon() -> Self {
        Dd::new(2f64.powi(-104))
    }

    fn classify(self) -> FpCategory {
        Float::classify(self.0)
    }

    fn mul_add(self, a: Self, b: Self) -> Self {
        self * a + b
    }

    fn recip(self) -> Self {
        Dd::one() / self
    }

    fn powi(self, n: i32) -> Self {
        let mut base = if n < 0 { self.recip() } else { self };
        let mut e = n.unsigned_abs();
        let mut acc = Dd::one();
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base *= base;
            e >>= 1;
        }
        acc
    }

    fn max(self, other: Self) -> Self {
        match self.partial_cmp(&other) {
            Some(Ordering::Less) => other,
            None if self.is_nan() => other,
            _ => self,
        }
    }

    fn min(self, other: Self) -> Self {
        match self.partial_cmp(&other) {
            Some(Ordering::Greater) => other,
            None if self.is_nan() => other,
            _ => self,
        }
    }

    fn sin_cos(self) -> (Self, Self) {
        let (s, c) = Float::sin_cos(self.0);
        (Dd(s), Dd(c))
    }

    fn integer_decode(self) -> (u64, i16, i8) {
        Float::integer_decode(self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quotients_are_double_double_accurate() {
        let vals = [-0.700291361422, 0.198493666, 1.02615634, 3.0, 7.1, -11.3];
        for &a in &vals {
            for &b in &vals {
                let x = Dd::new(a) + Dd::new(1e-3).sqrt();
                let y = Dd::new(b) + Dd::new(2e-3).sqrt();
                let q = x / y;
                let err = (q * y - x).abs() / x.abs();
                assert!(err.hi() < 1e-30, "{a} / {b}: {err:e}");
            }
        }
    }

    #[test]
    fn square_roots_and_powers() {
        let two = Dd::new(2.0);
        let s = two.sqrt();
        assert!((s * s - two).abs().hi() < 1e-31);
        let p = Dd::new(1.5).powi(-3);
        assert!((p * Dd::new(3.375) - Dd::one()).abs().hi() < 1e-31);
    }

    #[test]
    fn infinities_order() {
        let one = Dd::one();
        assert!(Dd::neg_infinity() < one && one < Dd::infinity());
        assert_eq!(Float::max(Dd::neg_infinity(), one), one);
        assert_eq!(Float::min(Dd::infinity(), one), one);
    }
}

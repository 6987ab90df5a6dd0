//! Complex scalars with an unbounded binary exponent.
//!
//! Backward orbits of weighted shifts produce coefficients like `2^-10000`,
//! far outside the `f64` range, yet their forward images return to order
//! one. [`Wide`] keeps such values exact up to mantissa rounding by storing
//! `mant * 2^exp` with the mantissa normalised so that
//! `max(|re|, |im|)` lies in `[0.5, 1)`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;

pub type C64 = Complex64;

/// Exponent gap beyond which the smaller addend cannot affect the mantissa.
const NEGLIGIBLE_GAP: i64 = 1100;

#[derive(Clone, Copy, PartialEq)]
pub struct Wide {
    mant: C64,
    exp: i64,
}

impl Wide {
    pub const ZERO: Wide = Wide {
        mant: C64 { re: 0.0, im: 0.0 },
        exp: 0,
    };

    pub const ONE: Wide = Wide {
        mant: C64 { re: 0.5, im: 0.0 },
        exp: 1,
    };

    fn normalized(mant: C64, exp: i64) -> Wide {
        let scale = mant.re.abs().max(mant.im.abs());
        if scale == 0.0 {
            return Wide::ZERO;
        }
        if !scale.is_finite() {
            return Wide { mant, exp };
        }
        let (_, k) = libm::frexp(scale);
        Wide {
            mant: C64::new(libm::ldexp(mant.re, -k), libm::ldexp(mant.im, -k)),
            exp: exp + k as i64,
        }
    }

    pub fn from_c64(c: C64) -> Wide {
        Wide::normalized(c, 0)
    }

    pub fn from_real(x: f64) -> Wide {
        Wide::normalized(C64::new(x, 0.0), 0)
    }

    /// `mant * 2^exp` for an arbitrary (unnormalised) mantissa.
    pub fn from_parts(mant: C64, exp: i64) -> Wide {
        Wide::normalized(mant, exp)
    }

    pub fn mantissa(self) -> C64 {
        self.mant
    }

    pub fn exponent(self) -> i64 {
        self.exp
    }

    pub fn is_zero(self) -> bool {
        self.mant.re == 0.0 && self.mant.im == 0.0
    }

    pub fn is_finite(self) -> bool {
        self.mant.re.is_finite() && self.mant.im.is_finite()
    }

    /// Nearest `f64` complex; saturates to infinity or flushes to zero.
    pub fn to_c64(self) -> C64 {
        if self.is_zero() {
            return C64::new(0.0, 0.0);
        }
        let e = self.exp.clamp(-NEGLIGIBLE_GAP * 2, NEGLIGIBLE_GAP * 2) as i32;
        C64::new(libm::ldexp(self.mant.re, e), libm::ldexp(self.mant.im, e))
    }

    pub fn conj(self) -> Wide {
        Wide {
            mant: self.mant.conj(),
            exp: self.exp,
        }
    }

    pub fn recip(self) -> Wide {
        Wide::normalized(self.mant.inv(), -self.exp)
    }

    /// `|self|` as an `f64` (saturating).
    pub fn abs(self) -> f64 {
        let e = self.exp.clamp(-NEGLIGIBLE_GAP * 2, NEGLIGIBLE_GAP * 2) as i32;
        libm::ldexp(self.mant.norm(), e)
    }

    /// `log2 |self|`, `-inf` for zero.
    pub fn log2_abs(self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        self.mant.norm().log2() + self.exp as f64
    }

    pub fn scale_pow2(self, k: i64) -> Wide {
        if self.is_zero() {
            return self;
        }
        Wide {
            mant: self.mant,
            exp: self.exp + k,
        }
    }

    pub fn powu(self, n: u64) -> Wide {
        let mut base = self;
        let mut acc = Wide::ONE;
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc *= base;
            }
            base *= base;
            k >>= 1;
        }
        acc
    }

    /// Compare magnitudes without leaving the extended range.
    pub fn cmp_abs(self, other: Wide) -> Ordering {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        self.log2_abs()
            .partial_cmp(&other.log2_abs())
            .unwrap_or(Ordering::Equal)
    }
}

impl Default for Wide {
    fn default() -> Self {
        Wide::ZERO
    }
}

impl fmt::Debug for Wide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} + {}i)*2^{}", self.mant.re, self.mant.im, self.exp)
    }
}

impl From<C64> for Wide {
    fn from(c: C64) -> Self {
        Wide::from_c64(c)
    }
}

impl From<f64> for Wide {
    fn from(x: f64) -> Self {
        Wide::from_real(x)
    }
}

impl Add for Wide {
    type Output = Wide;
    fn add(self, rhs: Wide) -> Wide {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (big, small) = if self.exp >= rhs.exp {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let gap = big.exp - small.exp;
        if gap > NEGLIGIBLE_GAP {
            return big;
        }
        let g = -(gap as i32);
        let shifted = C64::new(libm::ldexp(small.mant.re, g), libm::ldexp(small.mant.im, g));
        Wide::normalized(big.mant + shifted, big.exp)
    }
}

impl Neg for Wide {
    type Output = Wide;
    fn neg(self) -> Wide {
        Wide {
            mant: -self.mant,
            exp: self.exp,
        }
    }
}

impl Sub for Wide {
    type Output = Wide;
    fn sub(self, rhs: Wide) -> Wide {
        self + (-rhs)
    }
}

impl Mul for Wide {
    type Output = Wide;
    fn mul(self, rhs: Wide) -> Wide {
        if self.is_zero() || rhs.is_zero() {
            return Wide::ZERO;
        }
        Wide::normalized(self.mant * rhs.mant, self.exp + rhs.exp)
    }
}

impl Div for Wide {
    type Output = Wide;
    fn div(self, rhs: Wide) -> Wide {
        if self.is_zero() {
            return Wide::ZERO;
        }
        Wide::normalized(self.mant / rhs.mant, self.exp - rhs.exp)
    }
}

impl AddAssign for Wide {
    fn add_assign(&mut self, rhs: Wide) {
        *self = *self + rhs;
    }
}

impl SubAssign for Wide {
    fn sub_assign(&mut self, rhs: Wide) {
        *self = *self - rhs;
    }
}

impl MulAssign for Wide {
    fn mul_assign(&mut self, rhs: Wide) {
        *self = *self * rhs;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_ordinary_values() {
        for &c in &[
            C64::new(3.0, -4.0),
            C64::new(1e-200, 0.0),
            C64::new(0.0, 7.5e250),
        ] {
            assert_eq!(Wide::from_c64(c).to_c64(), c);
        }
    }

    #[test]
    fn survives_underflow_and_returns() {
        let half = Wide::from_real(0.5);
        let tiny = half.powu(10_000);
        assert_eq!(tiny.to_c64(), C64::new(0.0, 0.0));
        assert!(!tiny.is_zero());
        assert!((tiny.log2_abs() + 10_000.0).abs() < 1e-9);
        let back = tiny * Wide::from_real(2.0).powu(10_000);
        assert!((back.to_c64() - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn exact_cancellation_gives_zero() {
        let a = Wide::from_c64(C64::new(0.3, 0.7)).scale_pow2(-5000);
        assert!((a - a).is_zero());
    }

    #[test]
    fn negligible_addend_is_absorbed() {
        let big = Wide::from_real(1.0);
        let small = Wide::from_real(1.0).scale_pow2(-2000);
        assert_eq!((big + small).to_c64(), C64::new(1.0, 0.0));
        assert!(small.cmp_abs(big) == Ordering::Less);
    }

    #[test]
    fn recip_and_division() {
        let x = Wide::from_c64(C64::new(2.0, 1.0)).scale_pow2(3000);
        let y = x.recip() * x;
        assert!((y.to_c64() - C64::new(1.0, 0.0)).norm() < 1e-15);
        let z = x / x;
        assert!((z.to_c64() - C64::new(1.0, 0.0)).norm() < 1e-15);
    }
}

//! Arithmetic in the Gaussian integers Z[i].
//!
//! [`GaussInt`] is generic over its coordinate type. The default is
//! [`BigInt`], so nothing in the public API silently overflows; the
//! enumeration core instantiates it at `i64` after bounding every entry it
//! can produce.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Signed;

use crate::error::{Error, Result};

/// Coordinate ring for [`GaussInt`].
pub trait Scalar: Clone + Integer + Signed + fmt::Debug {}

impl<T: Clone + Integer + Signed + fmt::Debug> Scalar for T {}

/// A Gaussian integer `re + im·i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct GaussInt<T = BigInt> {
    pub re: T,
    pub im: T,
}

impl<T: Scalar> GaussInt<T> {
    pub fn new(re: T, im: T) -> Self {
        GaussInt { re, im }
    }

    pub fn zero() -> Self {
        GaussInt::new(T::zero(), T::zero())
    }

    pub fn one() -> Self {
        GaussInt::new(T::one(), T::zero())
    }

    pub fn i() -> Self {
        GaussInt::new(T::zero(), T::one())
    }

    /// The four units `1, i, -1, -i`.
    pub fn units() -> [Self; 4] {
        [
            GaussInt::new(T::one(), T::zero()),
            GaussInt::new(T::zero(), T::one()),
            GaussInt::new(-T::one(), T::zero()),
            GaussInt::new(T::zero(), -T::one()),
        ]
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_unit(&self) -> bool {
        self.norm().is_one()
    }

    pub fn conj(&self) -> Self {
        GaussInt::new(self.re.clone(), -self.im.clone())
    }

    /// `re² + im²`.
    pub fn norm(&self) -> T {
        self.re.clone() * self.re.clone() + self.im.clone() * self.im.clone()
    }

    /// Multiplicative inverse, defined only for units.
    pub fn unit_inverse(&self) -> Option<Self> {
        self.is_unit().then(|| self.conj())
    }

    /// Exact quotient `self / other`, or `None` if `other` does not divide `self`.
    pub fn exact_div(&self, other: &Self) -> Option<Self> {
        if other.is_zero() {
            return None;
        }
        let n = other.norm();
        let num = self * &other.conj();
        let (qr, rr) = num.re.div_rem(&n);
        let (qi, ri) = num.im.div_rem(&n);
        (rr.is_zero() && ri.is_zero()).then(|| GaussInt::new(qr, qi))
    }

    pub fn divides(&self, other: &Self) -> bool {
        if self.is_zero() {
            return other.is_zero();
        }
        other.exact_div(self).is_some()
    }

    /// Euclidean division with the nearest-Gaussian-integer quotient.
    ///
    /// Each coordinate of `self / divisor` is rounded half-up, so the
    /// remainder satisfies `norm(rem) <= norm(divisor) / 2`.
    pub fn div_rem_nearest(&self, divisor: &Self) -> Result<(Self, Self)> {
        if divisor.is_zero() {
            return Err(Error::domain("division by zero Gaussian integer"));
        }
        let n = divisor.norm();
        let num = self * &divisor.conj();
        let q = GaussInt::new(round_half_up(&num.re, &n), round_half_up(&num.im, &n));
        let r = self - &(&q * divisor);
        Ok((q, r))
    }
}

/// `round(num / den)` with ties towards +infinity; `den > 0`.
fn round_half_up<T: Scalar>(num: &T, den: &T) -> T {
    let two = T::one() + T::one();
    (two.clone() * num.clone() + den.clone()).div_floor(&(two * den.clone()))
}

/// Result of the extended Euclidean algorithm: `gcd = u·c + v·d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtGcd<T = BigInt> {
    pub gcd: GaussInt<T>,
    pub u: GaussInt<T>,
    pub v: GaussInt<T>,
}

/// Extended Euclid on `(c, d)`.
///
/// The gcd is determined up to a unit; the representative returned is
/// whatever the nearest-quotient recursion produces, which is deterministic.
pub fn ext_gcd<T: Scalar>(c: &GaussInt<T>, d: &GaussInt<T>) -> Result<ExtGcd<T>> {
    if c.is_zero() && d.is_zero() {
        return Err(Error::domain("ext_gcd(0, 0) is undefined"));
    }
    let (mut r0, mut r1) = (c.clone(), d.clone());
    let (mut u0, mut u1) = (GaussInt::one(), GaussInt::zero());
    let (mut v0, mut v1) = (GaussInt::zero(), GaussInt::one());
    while !r1.is_zero() {
        let (q, r) = r0.div_rem_nearest(&r1)?;
        debug_assert!(r.norm() < r1.norm());
        let u2 = &u0 - &(&q * &u1);
        let v2 = &v0 - &(&q * &v1);
        r0 = std::mem::replace(&mut r1, r);
        u0 = std::mem::replace(&mut u1, u2);
        v0 = std::mem::replace(&mut v1, v2);
    }
    Ok(ExtGcd { gcd: r0, u: u0, v: v0 })
}

/// `(a, b)` with `a·d − b·c = 1`, or `None` when `c` and `d` are not coprime.
pub fn solve_unimodular<T: Scalar>(c: &GaussInt<T>, d: &GaussInt<T>) -> Option<(GaussInt<T>, GaussInt<T>)> {
    let eg = ext_gcd(c, d).ok()?;
    // u·c + v·d = g, g a unit  =>  (v/g)·d − (−u/g)·c = 1
    let ginv = eg.gcd.unit_inverse()?;
    let a = &eg.v * &ginv;
    let b = -(&eg.u * &ginv);
    Some((a, b))
}

impl From<GaussInt<i64>> for GaussInt<BigInt> {
    fn from(g: GaussInt<i64>) -> Self {
        GaussInt::new(BigInt::from(g.re), BigInt::from(g.im))
    }
}

impl<T: Scalar + fmt::Display> fmt::Display for GaussInt<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_negative() {
            write!(f, "{}-{}i", self.re, self.im.abs())
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

impl<'a, T: Scalar> Add<&'a GaussInt<T>> for &'a GaussInt<T> {
    type Output = GaussInt<T>;
    fn add(self, o: &GaussInt<T>) -> GaussInt<T> {
        GaussInt::new(self.re.clone() + o.re.clone(), self.im.clone() + o.im.clone())
    }
}

impl<'a, T: Scalar> Sub<&'a GaussInt<T>> for &'a GaussInt<T> {
    type Output = GaussInt<T>;
    fn sub(self, o: &GaussInt<T>) -> GaussInt<T> {
        GaussInt::new(self.re.clone() - o.re.clone(), self.im.clone() - o.im.clone())
    }
}

impl<'a, T: Scalar> Mul<&'a GaussInt<T>> for &'a GaussInt<T> {
    type Output = GaussInt<T>;
    fn mul(self, o: &GaussInt<T>) -> GaussInt<T> {
        GaussInt::new(
            self.re.clone() * o.re.clone() - self.im.clone() * o.im.clone(),
            self.re.clone() * o.im.clone() + self.im.clone() * o.re.clone(),
        )
    }
}

impl<T: Scalar> Add for GaussInt<T> {
    type Output = GaussInt<T>;
    fn add(self, o: Self) -> Self {
        &self + &o
    }
}

impl<T: Scalar> Sub for GaussInt<T> {
    type Output = GaussInt<T>;
    fn sub(self, o: Self) -> Self {
        &self - &o
    }
}

impl<T: Scalar> Mul for GaussInt<T> {
    type Output = GaussInt<T>;
    fn mul(self, o: Self) -> Self {
        &self * &o
    }
}

impl<T: Scalar> Neg for GaussInt<T> {
    type Output = GaussInt<T>;
    fn neg(self) -> Self {
        GaussInt::new(-self.re, -self.im)
    }
}

impl<T: Scalar> Neg for &GaussInt<T> {
    type Output = GaussInt<T>;
    fn neg(self) -> GaussInt<T> {
        GaussInt::new(-self.re.clone(), -self.im.clone())
    }
}

use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// An angle in radians, always held on `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Angle<T>(T);

impl<T: Scalar> Angle<T> {
    /// Wraps `radians` onto `(-π, π]`; fails on non-finite input.
    pub fn new(radians: T) -> Result<Self> {
        wrap(radians)
    }

    /// Wraps a value already known to be finite.
    pub(crate) fn wrapped(radians: T) -> Self {
        Angle(wrap_finite(radians))
    }

    pub fn zero() -> Self {
        Angle(T::zero())
    }

    pub fn from_degrees(degrees: T) -> Result<Self> {
        wrap(degrees.to_radians())
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }

    #[inline]
    pub fn sin(self) -> T {
        self.0.sin()
    }

    #[inline]
    pub fn cos(self) -> T {
        self.0.cos()
    }
}

impl<T: Scalar> Add for Angle<T> {
    type Output = Angle<T>;
    fn add(self, rhs: Self) -> Self {
        Angle::wrapped(self.0 + rhs.0)
    }
}

impl<T: Scalar> Sub for Angle<T> {
    type Output = Angle<T>;
    fn sub(self, rhs: Self) -> Self {
        Angle::wrapped(self.0 - rhs.0)
    }
}

impl<T: Scalar> Neg for Angle<T> {
    type Output = Angle<T>;
    fn neg(self) -> Self {
        Angle::wrapped(-self.0)
    }
}

impl<T: Scalar> fmt::Display for Angle<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

/// Canonical representative of `x mod 2π` in `(-π, π]`.
pub fn wrap<T: Scalar>(x: T) -> Result<Angle<T>> {
    if !x.is_finite() {
        return invalid(format!("cannot wrap non-finite angle {x}"));
    }
    Ok(Angle(wrap_finite(x)))
}

#[inline]
fn wrap_finite<T: Scalar>(x: T) -> T {
    let pi = T::PI();
    if x > -pi && x <= pi {
        return x;
    }
    let two_pi = pi + pi;
    let mut r = x - two_pi * ((x - pi) / two_pi).ceil();
    if r <= -pi {
        r = r + two_pi;
    }
    if r > pi {
        r = r - two_pi;
    }
    r
}

/// Signed minimal difference `a - b`, on `(-π, π]`.
#[inline]
pub fn angular_diff<T: Scalar>(a: Angle<T>, b: Angle<T>) -> T {
    wrap_finite(a.0 - b.0)
}

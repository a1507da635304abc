//! Scalar abstraction shared by the value-level geometry.
//!
//! Every geometric routine in this crate is generic over [`Real`] so the same
//! code path evaluates plain `f64` values, forward-mode [`Dual`] numbers (for
//! exact Jacobians of the projection) and any higher-precision type a caller
//! wants to plug in.

use core::fmt::Debug;
use core::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

/// A real number type the geometry can be evaluated in.
pub trait Real:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn from_f64(v: f64) -> Self;
    /// Primal value, used for branching and error checks.
    fn value(self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn tanh(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    fn recip(self) -> Self {
        Self::one() / self
    }
    fn sigmoid(self) -> Self {
        // 0.5 * (1 + tanh(x / 2)) stays finite for any input
        (self * 0.5).tanh() * 0.5 + 0.5
    }
    fn abs(self) -> Self {
        if self.value() < 0.0 {
            -self
        } else {
            self
        }
    }
}

impl Real for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(self) -> f64 {
        self
    }
    #[inline]
    fn exp(self) -> Self {
        libm::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        libm::log(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        libm::sqrt(self)
    }
    #[inline]
    fn tanh(self) -> Self {
        libm::tanh(self)
    }
    #[inline]
    fn sin(self) -> Self {
        libm::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        libm::cos(self)
    }
}

/// Forward-mode dual number carrying `N` tangent directions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<const N: usize> {
    pub v: f64,
    pub d: [f64; N],
}

impl<const N: usize> Dual<N> {
    pub fn constant(v: f64) -> Self {
        Self { v, d: [0.0; N] }
    }

    /// Independent variable seeded along tangent direction `slot`.
    pub fn variable(v: f64, slot: usize) -> Self {
        let mut d = [0.0; N];
        d[slot] = 1.0;
        Self { v, d }
    }

    #[inline]
    fn chain(self, v: f64, dv: f64) -> Self {
        let mut d = self.d;
        for x in d.iter_mut() {
            *x *= dv;
        }
        Self { v, d }
    }
}

impl<const N: usize> Add for Dual<N> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: Self) -> Self {
        self.v += rhs.v;
        for (a, b) in self.d.iter_mut().zip(rhs.d.iter()) {
            *a += *b;
        }
        self
    }
}

impl<const N: usize> Sub for Dual<N> {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: Self) -> Self {
        self.v -= rhs.v;
        for (a, b) in self.d.iter_mut().zip(rhs.d.iter()) {
            *a -= *b;
        }
        self
    }
}

impl<const N: usize> Mul for Dual<N> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let mut d = [0.0; N];
        for i in 0..N {
            d[i] = self.d[i] * rhs.v + self.v * rhs.d[i];
        }
        Self { v: self.v * rhs.v, d }
    }
}

impl<const N: usize> Div for Dual<N> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let inv = 1.0 / rhs.v;
        let v = self.v / rhs.v;
        let mut d = [0.0; N];
        for i in 0..N {
            d[i] = (self.d[i] - v * rhs.d[i]) * inv;
        }
        Self { v, d }
    }
}

impl<const N: usize> Neg for Dual<N> {
    type Output = Self;
    #[inline]
    fn neg(mut self) -> Self {
        self.v = -self.v;
        for x in self.d.iter_mut() {
            *x = -*x;
        }
        self
    }
}

impl<const N: usize> AddAssign for Dual<N> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<const N: usize> Add<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: f64) -> Self {
        self.v += rhs;
        self
    }
}

impl<const N: usize> Sub<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: f64) -> Self {
        self.v -= rhs;
        self
    }
}

impl<const N: usize> Mul<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: f64) -> Self {
        self.chain(self.v * rhs, rhs)
    }
}

impl<const N: usize> Div<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: f64) -> Self {
        self.chain(self.v / rhs, 1.0 / rhs)
    }
}

impl<const N: usize> Real for Dual<N> {
    fn from_f64(v: f64) -> Self {
        Self::constant(v)
    }
    #[inline]
    fn value(self) -> f64 {
        self.v
    }
    fn exp(self) -> Self {
        let e = libm::exp(self.v);
        self.chain(e, e)
    }
    fn ln(self) -> Self {
        self.chain(libm::log(self.v), 1.0 / self.v)
    }
    fn sqrt(self) -> Self {
        let s = libm::sqrt(self.v);
        self.chain(s, 0.5 / s)
    }
    fn tanh(self) -> Self {
        let t = libm::tanh(self.v);
        self.chain(t, 1.0 - t * t)
    }
    fn sin(self) -> Self {
        self.chain(libm::sin(self.v), libm::cos(self.v))
    }
    fn cos(self) -> Self {
        self.chain(libm::cos(self.v), -libm::sin(self.v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f<T: Real>(x: T) -> T {
        (x * x).exp().tanh() + x.sin() * x.cos() / (x + 2.0).sqrt() - (x * 3.0).sigmoid() + (x + 5.0).ln()
    }

    #[test]
    fn dual_matches_central_difference() {
        for &x in &[-1.3, -0.2, 0.0, 0.4, 1.1] {
            let d = f(Dual::<1>::variable(x, 0));
            let h = 1e-6;
            let fd = (f(x + h) - f(x - h)) / (2.0 * h);
            assert!((d.d[0] - fd).abs() < 1e-8, "x={x}: {} vs {fd}", d.d[0]);
            assert_eq!(d.v, f(x));
        }
    }

    #[test]
    fn sigmoid_is_bounded_and_centered() {
        assert_eq!(0.0f64.sigmoid(), 0.5);
        assert!(800.0f64.sigmoid() <= 1.0);
        assert!((-800.0f64).sigmoid() >= 0.0);
    }
}

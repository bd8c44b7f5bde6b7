//! Forward-mode dual numbers with two infinitesimal directions.
//!
//! A [`Dual2`] carries a value together with its partial derivatives with
//! respect to `x` and `y`. Evaluating an expression tree on `Dual2` inputs
//! seeded as `x = (x0, 1, 0)` and `y = (y0, 0, 1)` yields the exact gradient
//! of the expression at `(x0, y0)`, up to floating-point roundoff.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Operations an expression tree needs from its number type.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn constant(c: f64) -> Self;
    fn powi(self, n: i32) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;
    /// Four-quadrant arctangent of `self / x`.
    fn atan2(self, x: Self) -> Self;
}

/// Integer power by binary exponentiation. Kept in-crate so results do not
/// depend on the platform's `powi` intrinsic.
pub(crate) fn powi_f64(base: f64, n: i32) -> f64 {
    let mut e = n.unsigned_abs();
    let mut b = base;
    let mut acc = 1.0;
    while e > 0 {
        if e & 1 == 1 {
            acc *= b;
        }
        e >>= 1;
        if e > 0 {
            b *= b;
        }
    }
    if n < 0 {
        1.0 / acc
    } else {
        acc
    }
}

impl Scalar for f64 {
    fn constant(c: f64) -> Self {
        c
    }
    fn powi(self, n: i32) -> Self {
        powi_f64(self, n)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual2 {
    pub re: f64,
    pub dx: f64,
    pub dy: f64,
}

impl Dual2 {
    pub const fn new(re: f64, dx: f64, dy: f64) -> Self {
        Self { re, dx, dy }
    }

    pub const fn var_x(x: f64) -> Self {
        Self::new(x, 1.0, 0.0)
    }

    pub const fn var_y(y: f64) -> Self {
        Self::new(y, 0.0, 1.0)
    }

    #[inline]
    fn chain(self, value: f64, slope: f64) -> Self {
        Self::new(value, slope * self.dx, slope * self.dy)
    }
}

impl Add for Dual2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.dx + o.dx, self.dy + o.dy)
    }
}

impl Sub for Dual2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.dx - o.dx, self.dy - o.dy)
    }
}

impl Mul for Dual2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.re * o.re,
            self.dx * o.re + self.re * o.dx,
            self.dy * o.re + self.re * o.dy,
        )
    }
}

impl Div for Dual2 {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let q = self.re / o.re;
        Self::new(q, (self.dx - q * o.dx) / o.re, (self.dy - q * o.dy) / o.re)
    }
}

impl Neg for Dual2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.dx, -self.dy)
    }
}

impl Scalar for Dual2 {
    fn constant(c: f64) -> Self {
        Self::new(c, 0.0, 0.0)
    }

    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::constant(1.0);
        }
        let lower = powi_f64(self.re, n - 1);
        self.chain(lower * self.re, f64::from(n) * lower)
    }

    fn sin(self) -> Self {
        self.chain(self.re.sin(), self.re.cos())
    }

    fn cos(self) -> Self {
        self.chain(self.re.cos(), -self.re.sin())
    }

    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e)
    }

    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.chain(s, 0.5 / s)
    }

    fn atan2(self, x: Self) -> Self {
        // d atan2(y, x) = (x dy - y dx) / (x^2 + y^2)
        let den = x.re * x.re + self.re * self.re;
        Self::new(
            self.re.atan2(x.re),
            (x.re * self.dx - self.re * x.dx) / den,
            (x.re * self.dy - self.re * x.dy) / den,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule() {
        let x = Dual2::var_x(3.0);
        let y = Dual2::var_y(2.0);
        let f = x * x * y;
        assert_eq!(f, Dual2::new(18.0, 12.0, 9.0));
    }

    #[test]
    fn quotient_and_powers() {
        let x = Dual2::var_x(2.0);
        let f = Dual2::constant(1.0) / x.powi(2);
        assert!((f.re - 0.25).abs() < 1e-15);
        assert!((f.dx + 0.25).abs() < 1e-15);
        let g = x.powi(-3);
        assert!((g.dx + 3.0 / 16.0).abs() < 1e-15);
        assert_eq!(x.powi(0), Dual2::constant(1.0));
    }

    #[test]
    fn atan2_gradient_is_tangential() {
        let y = Dual2::var_y(1.0);
        let x = Dual2::var_x(1.0);
        let a = y.atan2(x);
        assert!((a.dx + 0.5).abs() < 1e-15);
        assert!((a.dy - 0.5).abs() < 1e-15);
    }

    #[test]
    fn powi_matches_std() {
        for n in -7..=7 {
            let a = powi_f64(1.3, n);
            let b = 1.3f64.powf(f64::from(n));
            assert!((a - b).abs() <= 1e-14 * b.abs(), "n = {n}");
        }
    }
}

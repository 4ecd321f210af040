use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use super::real::Real;

/// Complex number over any [`Real`] scalar.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Complex<R> {
    pub re: R,
    pub im: R,
}

pub type C64 = Complex<f64>;

impl<R: Real> Complex<R> {
    pub fn new(re: R, im: R) -> Self {
        Complex { re, im }
    }
    pub fn from_real(re: R) -> Self {
        Complex { re, im: R::zero() }
    }
    pub fn from_f64(re: f64, im: f64) -> Self {
        Complex { re: R::from_f64(re), im: R::from_f64(im) }
    }
    pub fn zero() -> Self {
        Self::from_real(R::zero())
    }
    pub fn one() -> Self {
        Self::from_real(R::one())
    }
    pub fn i() -> Self {
        Complex { re: R::zero(), im: R::one() }
    }
    /// `e^{i phi}`.
    pub fn cis(phi: R) -> Self {
        let (s, c) = phi.sin_cos();
        Complex { re: c, im: s }
    }
    pub fn conj(self) -> Self {
        Complex { re: self.re, im: -self.im }
    }
    pub fn norm_sqr(self) -> R {
        self.re * self.re + self.im * self.im
    }
    pub fn abs(self) -> R {
        self.norm_sqr().sqrt()
    }
    /// Argument in (-pi, pi].
    pub fn arg(self) -> R {
        let a = self.im.atan2(self.re);
        if a <= -R::pi() {
            a + R::pi().mul_f64(2.0)
        } else {
            a
        }
    }
    /// Principal square root.
    pub fn sqrt(self) -> Self {
        let r = self.abs();
        let half = R::from_f64(0.5);
        let re = ((r + self.re) * half).sqrt();
        let im = ((r - self.re) * half).sqrt();
        if self.im < R::zero() {
            Complex { re, im: -im }
        } else {
            Complex { re, im }
        }
    }
    pub fn scale(self, k: R) -> Self {
        Complex { re: self.re * k, im: self.im * k }
    }
    pub fn to_c64(self) -> C64 {
        Complex { re: self.re.to_f64(), im: self.im.to_f64() }
    }
    pub fn lift(c: C64) -> Self {
        Self::from_f64(c.re, c.im)
    }
    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    /// Magnitude evaluated in f64, for tolerance checks.
    pub fn abs_f64(self) -> f64 {
        let c = self.to_c64();
        c.re.hypot(c.im)
    }
}

impl<R: Real> Add for Complex<R> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Complex { re: self.re + o.re, im: self.im + o.im }
    }
}

impl<R: Real> Sub for Complex<R> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Complex { re: self.re - o.re, im: self.im - o.im }
    }
}

impl<R: Real> Mul for Complex<R> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Complex {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }
}

impl<R: Real> Div for Complex<R> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let d = o.norm_sqr();
        let n = self * o.conj();
        Complex { re: n.re / d, im: n.im / d }
    }
}

impl<R: Real> Neg for Complex<R> {
    type Output = Self;
    fn neg(self) -> Self {
        Complex { re: -self.re, im: -self.im }
    }
}

impl<R: Real> AddAssign for Complex<R> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        self.re += o.re;
        self.im += o.im;
    }
}

impl<R: Real> SubAssign for Complex<R> {
    fn sub_assign(&mut self, o: Self) {
        self.re -= o.re;
        self.im -= o.im;
    }
}

impl<R: Real> MulAssign for Complex<R> {
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::dd::Dd;

    #[test]
    fn field_identities() {
        let a = C64::new(1.5, -2.0);
        let b = C64::new(-0.25, 3.0);
        let q = (a * b) / b;
        assert!((q - a).abs() < 1e-15);
        assert_eq!(a.conj().conj(), a);
        assert!((a.norm_sqr() - 6.25).abs() < 1e-15);
        for z in [a, b, C64::new(-4.0, 0.0), C64::new(-4.0, -0.0)] {
            let r = z.sqrt();
            assert!((r * r - z).abs() < 1e-14);
            assert!(r.re >= 0.0);
        }
    }

    #[test]
    fn arg_range_includes_pi() {
        let z = C64::new(-1.0, -0.0);
        assert_eq!(z.arg(), std::f64::consts::PI);
        let w = Complex::<Dd>::cis(Dd::from_f64(-0.5));
        assert!((w.arg() - Dd::from_f64(-0.5)).abs().to_f64() < 1e-30);
    }
}

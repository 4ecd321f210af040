//! Double-double arithmetic: an unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.

use std::cmp::Ordering;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use super::real::{self, PrecisionMode, Real};

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(into = "[f64; 2]", from = "[f64; 2]")]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl From<Dd> for [f64; 2] {
    fn from(x: Dd) -> Self {
        [x.hi, x.lo]
    }
}

impl From<[f64; 2]> for Dd {
    fn from(c: [f64; 2]) -> Self {
        let (hi, lo) = two_sum(c[0], c[1]);
        Dd { hi, lo }
    }
}

#[inline]
pub(crate) fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
pub(crate) fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    const SPLITTER: f64 = 134_217_729.0; // 2^27 + 1
    let t = SPLITTER * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

/// Exact product `a*b = p + e` (Dekker).
#[inline]
pub(crate) fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)
}

impl Dd {
    pub const fn new(hi: f64, lo: f64) -> Self {
        Dd { hi, lo }
    }

    fn mul_scalar(self, b: f64) -> Dd {
        let (p1, mut p2) = two_prod(self.hi, b);
        p2 += self.lo * b;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    fn sqr_f64(a: f64) -> Dd {
        let (hi, lo) = two_prod(a, a);
        Dd { hi, lo }
    }
}

impl PartialEq for Dd {
    fn eq(&self, o: &Self) -> bool {
        self.hi == o.hi && self.lo == o.lo
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&o.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&o.lo),
            ord => Some(ord),
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, b: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, b: Dd) -> Dd {
        let (p1, mut p2) = two_prod(self.hi, b.hi);
        p2 += self.hi * b.lo + self.lo * b.hi;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    #[inline]
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_scalar(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_scalar(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_f64(q3)
    }
}

macro_rules! assign_ops {
    ($t:ty) => {
        impl AddAssign for $t {
            fn add_assign(&mut self, b: $t) {
                *self = *self + b;
            }
        }
        impl SubAssign for $t {
            fn sub_assign(&mut self, b: $t) {
                *self = *self - b;
            }
        }
        impl MulAssign for $t {
            fn mul_assign(&mut self, b: $t) {
                *self = *self * b;
            }
        }
        impl DivAssign for $t {
            fn div_assign(&mut self, b: $t) {
                *self = *self / b;
            }
        }
        impl Sum for $t {
            fn sum<I: Iterator<Item = $t>>(iter: I) -> $t {
                iter.fold(<$t>::default(), |a, b| a + b)
            }
        }
    };
}
pub(crate) use assign_ops;

assign_ops!(Dd);

#[allow(clippy::excessive_precision)]
impl Real for Dd {
    const MODE: PrecisionMode = PrecisionMode::DoubleDouble;

    fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }
    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
    fn epsilon() -> f64 {
        2f64.powi(-104)
    }
    fn pi() -> Self {
        Dd::new(std::f64::consts::PI, 1.224646799147353207e-16)
    }
    fn ln2() -> Self {
        Dd::new(std::f64::consts::LN_2, 2.319046813846299558e-17)
    }
    fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }
    fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return if self.hi == 0.0 { Dd::default() } else { Dd::from_f64(f64::NAN) };
        }
        let x = 1.0 / self.hi.sqrt();
        let ax = self.hi * x;
        Dd::from_f64(ax) + Dd::from_f64((self - Dd::sqr_f64(ax)).hi * x * 0.5)
    }
    fn floor(self) -> Self {
        let hi = self.hi.floor();
        if hi == self.hi {
            let (hi, lo) = quick_two_sum(hi, self.lo.floor());
            Dd { hi, lo }
        } else {
            Dd { hi, lo: 0.0 }
        }
    }
    fn exp(self) -> Self {
        real::generic_exp(self)
    }
    fn ln(self) -> Self {
        real::generic_ln(self)
    }
    fn sin_cos(self) -> (Self, Self) {
        real::generic_sin_cos(self)
    }
    fn atan2(self, x: Self) -> Self {
        real::generic_atan2(self, x)
    }
    fn mul_f64(self, k: f64) -> Self {
        self.mul_scalar(k)
    }
    fn to_decimal(self, digits: usize) -> String {
        real::generic_to_decimal(self, digits)
    }
    fn parse_decimal(s: &str) -> Option<Self> {
        real::generic_parse_decimal(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel_err(a: Dd, b: Dd) -> f64 {
        ((a - b).to_f64() / b.to_f64()).abs()
    }

    #[test]
    fn roundoff_is_below_1e30() {
        assert!(Dd::epsilon() <= 1e-30);
    }

    #[test]
    fn one_third_times_three() {
        let third = Dd::one() / Dd::from_f64(3.0);
        let back = third * Dd::from_f64(3.0);
        assert!((back - Dd::one()).abs().to_f64() < 1e-31);
        // beyond f64: the low word carries the tail of 1/3
        assert!(third.lo != 0.0);
    }

    #[test]
    fn pi_from_machin_formula() {
        // pi = 16 atan(1/5) - 4 atan(1/239) with series evaluated in Dd
        fn atan_inv(n: f64) -> Dd {
            let x = Dd::one() / Dd::from_f64(n);
            let x2 = x * x;
            let mut term = x;
            let mut sum = x;
            let mut k = 1.0;
            while term.to_f64().abs() > 1e-40 {
                term = -(term * x2);
                k += 2.0;
                sum += term / Dd::from_f64(k);
            }
            sum
        }
        let pi = atan_inv(5.0).mul_f64(16.0) - atan_inv(239.0).mul_f64(4.0);
        assert!(rel_err(pi, Dd::pi()) < 1e-31);
    }

    #[test]
    fn ln2_from_series() {
        // ln 2 = sum 1/(k 2^k)
        let mut s = Dd::default();
        let mut p = Dd::one();
        for k in 1..120 {
            p = p.mul_f64(0.5);
            s += p / Dd::from_f64(k as f64);
        }
        assert!(rel_err(s, Dd::ln2()) < 1e-31);
    }

    #[test]
    fn transcendentals() {
        let x = Dd::from_f64(0.7) / Dd::from_f64(3.0);
        let e = x.exp();
        assert!(rel_err(e.ln(), x) < 1e-30);
        let (s, c) = x.sin_cos();
        assert!((s * s + c * c - Dd::one()).abs().to_f64() < 1e-31);
        assert!(rel_err(s.atan2(c), x) < 1e-30);
        let y = Dd::from_f64(40.0) / Dd::from_f64(7.0);
        let (s, c) = y.sin_cos();
        assert!(rel_err(s.atan2(c) + Dd::pi().mul_f64(2.0), y) < 1e-30);
        assert!(rel_err(Dd::from_f64(2.0).sqrt().sqr(), Dd::from_f64(2.0)) < 1e-31);
        // e from its series
        let mut ee = Dd::one();
        let mut t = Dd::one();
        for k in 1..40 {
            t /= Dd::from_f64(k as f64);
            ee += t;
        }
        assert!(rel_err(Dd::one().exp(), ee) < 1e-31);
    }

    #[test]
    fn decimal_round_trip() {
        let x = Dd::one() / Dd::from_f64(7.0);
        let s = x.to_decimal(35);
        assert!(s.starts_with("1.428571428571428571428571428571"), "{s}");
        let y = Dd::parse_decimal(&s).unwrap();
        assert!(rel_err(y, x) < 1e-31);
        assert_eq!(Dd::parse_decimal("-2.5e3").unwrap(), Dd::from_f64(-2500.0));
        assert!(Dd::parse_decimal("1.2.3").is_none());
    }

    #[test]
    fn serde_is_exact() {
        let x = Dd::one() / Dd::from_f64(3.0);
        let j = serde_json::to_string(&x).unwrap();
        let y: Dd = serde_json::from_str(&j).unwrap();
        assert_eq!(x, y);
    }

    proptest! {
        #[test]
        fn add_sub_inverse(a in -1e6f64..1e6, b in -1e6f64..1e6, c in -1e-20f64..1e-20) {
            let x = Dd::from_f64(a) + Dd::from_f64(c);
            let y = Dd::from_f64(b);
            let z = (x + y) - y;
            prop_assert!((z - x).abs().to_f64() <= 1e-30 * (a.abs() + b.abs() + 1.0));
        }

        #[test]
        fn mul_div_inverse(a in 1e-3f64..1e3, b in 1e-3f64..1e3) {
            let x = Dd::from_f64(a) / Dd::from_f64(7.0);
            let y = Dd::from_f64(b);
            prop_assert!(rel_err((x * y) / y, x) < 1e-30);
        }

        #[test]
        fn two_prod_is_exact(a in -1e8f64..1e8, b in -1e8f64..1e8) {
            let (p, e) = two_prod(a, b);
            // compare against integer arithmetic on scaled values
            let ai = (a * 1024.0).trunc();
            let bi = (b * 1024.0).trunc();
            let (p2, e2) = two_prod(ai, bi);
            let exact = (ai as i128) * (bi as i128);
            prop_assert_eq!(p2 as i128 + e2 as i128, exact);
            prop_assert!(p.is_finite() && e.abs() <= p.abs() * 2e-16 + 1e-300);
        }
    }
}

//! Scalar abstraction shared by the native and extended-precision number types.

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// Arithmetic width selected for a computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrecisionMode {
    Native,
    DoubleDouble,
    QuadDouble,
}

impl PrecisionMode {
    /// Unit roundoff of the mode.
    pub fn epsilon(self) -> f64 {
        match self {
            PrecisionMode::Native => f64::EPSILON / 2.0,
            PrecisionMode::DoubleDouble => crate::numerics::dd::Dd::epsilon(),
            PrecisionMode::QuadDouble => crate::numerics::qd::Qd::epsilon(),
        }
    }

    /// Significant decimal digits used when printing values of this mode.
    pub fn print_digits(self) -> usize {
        match self {
            PrecisionMode::Native => 17,
            PrecisionMode::DoubleDouble | PrecisionMode::QuadDouble => 35,
        }
    }
}

impl std::str::FromStr for PrecisionMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "native" | "f64" => Ok(PrecisionMode::Native),
            "double-double" | "dd" => Ok(PrecisionMode::DoubleDouble),
            "quad-double" | "qd" => Ok(PrecisionMode::QuadDouble),
            other => Err(format!("unknown precision mode '{other}'")),
        }
    }
}

/// A real scalar type with the operations needed by the library.
pub trait Real:
    Copy
    + Send
    + Sync
    + 'static
    + Debug
    + Default
    + PartialEq
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Serialize
    + serde::de::DeserializeOwned
{
    const MODE: PrecisionMode;

    fn from_f64(x: f64) -> Self;
    /// Nearest f64 to the value.
    fn to_f64(self) -> f64;
    /// Unit roundoff.
    fn epsilon() -> f64;
    fn pi() -> Self;
    fn ln2() -> Self;
    fn abs(self) -> Self;
    fn sqrt(self) -> Self;
    fn floor(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin_cos(self) -> (Self, Self);
    fn atan2(self, x: Self) -> Self;
    /// Multiplication by an exact power of two (or any f64 for the native type).
    fn mul_f64(self, k: f64) -> Self;
    /// Decimal rendering with the given number of significant digits.
    fn to_decimal(self, digits: usize) -> String;
    fn parse_decimal(s: &str) -> Option<Self>;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    fn from_usize(n: usize) -> Self {
        Self::from_f64(n as f64)
    }
    fn sin(self) -> Self {
        self.sin_cos().0
    }
    fn cos(self) -> Self {
        self.sin_cos().1
    }
    fn tan(self) -> Self {
        let (s, c) = self.sin_cos();
        s / c
    }
    fn atan(self) -> Self {
        self.atan2(Self::one())
    }
    fn is_finite(self) -> bool {
        self.to_f64().is_finite()
    }
    fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
    fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
    fn sqr(self) -> Self {
        self * self
    }
    fn powi(self, n: i32) -> Self {
        let mut base = if n < 0 { Self::one() / self } else { self };
        let mut e = n.unsigned_abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }
    /// `self^(1/k)` for positive `self`.
    fn root(self, k: u32) -> Self {
        if self == Self::zero() {
            return self;
        }
        (self.ln() / Self::from_f64(k as f64)).exp()
    }
    /// Nearest integer, ties away from zero.
    fn round(self) -> Self {
        let half = Self::from_f64(0.5);
        if self < Self::zero() {
            -((-self) + half).floor()
        } else {
            (self + half).floor()
        }
    }
}

impl Real for f64 {
    const MODE: PrecisionMode = PrecisionMode::Native;

    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn epsilon() -> f64 {
        f64::EPSILON / 2.0
    }
    fn pi() -> Self {
        std::f64::consts::PI
    }
    fn ln2() -> Self {
        std::f64::consts::LN_2
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn floor(self) -> Self {
        f64::floor(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sin_cos(self) -> (Self, Self) {
        f64::sin_cos(self)
    }
    fn tan(self) -> Self {
        f64::tan(self)
    }
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
    fn mul_f64(self, k: f64) -> Self {
        self * k
    }
    fn to_decimal(self, digits: usize) -> String {
        format!("{:.*e}", digits.saturating_sub(1), self)
    }
    fn parse_decimal(s: &str) -> Option<Self> {
        s.trim().parse().ok()
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    fn root(self, k: u32) -> Self {
        if k == 2 {
            f64::sqrt(self)
        } else {
            f64::powf(self, 1.0 / k as f64)
        }
    }
    fn round(self) -> Self {
        f64::round(self)
    }
}

// Generic series-based transcendental functions used by the extended types.
// Each starts from the f64 result and refines in the target precision.

pub(crate) fn generic_exp<R: Real>(x: R) -> R {
    let xf = x.to_f64();
    if xf.is_nan() {
        return R::from_f64(f64::NAN);
    }
    if xf > 709.0 {
        return R::from_f64(f64::INFINITY);
    }
    if xf < -745.0 {
        return R::zero();
    }
    let k = (xf / std::f64::consts::LN_2).round();
    let r = x - R::ln2().mul_f64(k);
    // exp(r) = (1 + t)^(2^s) with r scaled down by 2^s.
    const SQUARINGS: i32 = 10;
    let r = r.mul_f64(1.0 / f64::from(1 << SQUARINGS));
    let tiny = R::epsilon() * 1e-4;
    let mut term = r;
    let mut t = r;
    let mut n = 1.0;
    loop {
        n += 1.0;
        term = term * r / R::from_f64(n);
        t += term;
        if term.to_f64().abs() <= tiny * t.to_f64().abs().max(1e-300) || n > 200.0 {
            break;
        }
    }
    // (1 + t)^2 - 1 = 2t + t^2 keeps the small part accurate.
    for _ in 0..SQUARINGS {
        t = t.mul_f64(2.0) + t * t;
    }
    let y = t + R::one();
    scale_pow2(y, k as i32)
}

fn scale_pow2<R: Real>(y: R, k: i32) -> R {
    // Split so each factor stays a normal f64.
    let mut y = y;
    let mut k = k;
    while k > 1000 {
        y = y.mul_f64(2f64.powi(1000));
        k -= 1000;
    }
    while k < -1000 {
        y = y.mul_f64(2f64.powi(-1000));
        k += 1000;
    }
    y.mul_f64(2f64.powi(k))
}

pub(crate) fn generic_ln<R: Real>(x: R) -> R {
    let xf = x.to_f64();
    if xf.is_nan() || xf < 0.0 {
        return R::from_f64(f64::NAN);
    }
    if xf == 0.0 {
        return R::from_f64(f64::NEG_INFINITY);
    }
    if xf.is_infinite() {
        return x;
    }
    let mut y = R::from_f64(xf.ln());
    // Newton on exp(y) = x: y <- y + x exp(-y) - 1.
    for _ in 0..4 {
        let corr = x * generic_exp(-y) - R::one();
        y += corr;
        if corr.to_f64().abs() <= R::epsilon() * (1.0 + y.to_f64().abs()) {
            break;
        }
    }
    y
}

pub(crate) fn generic_sin_cos<R: Real>(x: R) -> (R, R) {
    let xf = x.to_f64();
    if !xf.is_finite() {
        let nan = R::from_f64(f64::NAN);
        return (nan, nan);
    }
    let half_pi = R::pi().mul_f64(0.5);
    let k = (xf / std::f64::consts::FRAC_PI_2).round();
    let r = x - half_pi * R::from_f64(k);
    // Taylor series on |r| <= pi/4 (slightly more after rounding of k).
    let r2 = r * r;
    let tiny = R::epsilon() * 1e-4;
    let mut s = r;
    let mut term = r;
    let mut n = 1.0;
    loop {
        term = -(term * r2) / R::from_f64((n + 1.0) * (n + 2.0));
        n += 2.0;
        s += term;
        if term.to_f64().abs() <= tiny || n > 200.0 {
            break;
        }
    }
    let mut c = R::one();
    let mut term = R::one();
    let mut n = 0.0;
    loop {
        term = -(term * r2) / R::from_f64((n + 1.0) * (n + 2.0));
        n += 2.0;
        c += term;
        if term.to_f64().abs() <= tiny || n > 200.0 {
            break;
        }
    }
    match (k as i64).rem_euclid(4) {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    }
}

pub(crate) fn generic_atan2<R: Real>(y: R, x: R) -> R {
    let (xf, yf) = (x.to_f64(), y.to_f64());
    if xf == 0.0 && yf == 0.0 {
        return R::zero();
    }
    if xf.is_nan() || yf.is_nan() {
        return R::from_f64(f64::NAN);
    }
    let r = (x * x + y * y).sqrt();
    let xx = x / r;
    let yy = y / r;
    let mut z = R::from_f64(yf.atan2(xf));
    for _ in 0..3 {
        let (s, c) = generic_sin_cos(z);
        if xx.abs() > yy.abs() {
            z += (yy - s) / c;
        } else {
            z -= (xx - c) / s;
        }
    }
    z
}

/// Decimal digits of |x| for the extended types: mantissa digits and exponent.
pub(crate) fn generic_to_decimal<R: Real>(x: R, digits: usize) -> String {
    let xf = x.to_f64();
    if xf.is_nan() {
        return "NaN".into();
    }
    if xf.is_infinite() {
        return if xf > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let digits = digits.max(1);
    if xf == 0.0 {
        return format!("{}e0", format_mantissa(&vec![0u8; digits]));
    }
    let neg = xf < 0.0;
    let a = x.abs();
    let mut e10 = xf.abs().log10().floor() as i32;
    let mut m = a / R::from_f64(10.0).powi(e10);
    if m.to_f64() >= 10.0 {
        m = m.mul_f64(0.1);
        e10 += 1;
    }
    if m.to_f64() < 1.0 {
        m = m * R::from_f64(10.0);
        e10 -= 1;
    }
    let mut ds = Vec::with_capacity(digits + 1);
    for _ in 0..=digits {
        let d = m.floor().to_f64().clamp(0.0, 9.0);
        ds.push(d as u8);
        m = (m - R::from_f64(d)) * R::from_f64(10.0);
    }
    // round half up on the guard digit, propagating carries
    let guard = ds.pop().unwrap_or(0);
    if guard >= 5 {
        let mut i = ds.len();
        loop {
            if i == 0 {
                ds.insert(0, 1);
                ds.pop();
                e10 += 1;
                break;
            }
            i -= 1;
            if ds[i] == 9 {
                ds[i] = 0;
            } else {
                ds[i] += 1;
                break;
            }
        }
    }
    format!("{}{}e{}", if neg { "-" } else { "" }, format_mantissa(&ds), e10)
}

fn format_mantissa(ds: &[u8]) -> String {
    let mut s = String::with_capacity(ds.len() + 1);
    s.push((b'0' + ds[0]) as char);
    if ds.len() > 1 {
        s.push('.');
        for d in &ds[1..] {
            s.push((b'0' + d) as char);
        }
    }
    s
}

pub(crate) fn generic_parse_decimal<R: Real>(s: &str) -> Option<R> {
    let s = s.trim();
    match s {
        "NaN" | "nan" => return Some(R::from_f64(f64::NAN)),
        "inf" | "+inf" => return Some(R::from_f64(f64::INFINITY)),
        "-inf" => return Some(R::from_f64(f64::NEG_INFINITY)),
        _ => {}
    }
    let (neg, body) = match s.as_bytes().first()? {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (mant, exp) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i32>().ok()?),
        None => (body, 0),
    };
    if mant.is_empty() {
        return None;
    }
    let mut acc = R::zero();
    let mut frac_digits = 0i32;
    let mut seen_point = false;
    let mut any = false;
    for ch in mant.chars() {
        match ch {
            '0'..='9' => {
                acc = acc * R::from_f64(10.0) + R::from_f64(f64::from(ch as u8 - b'0'));
                any = true;
                if seen_point {
                    frac_digits += 1;
                }
            }
            '.' if !seen_point => seen_point = true,
            _ => return None,
        }
    }
    if !any {
        return None;
    }
    let e = exp - frac_digits;
    let ten = R::from_f64(10.0);
    let v = if e >= 0 { acc * ten.powi(e) } else { acc / ten.powi(-e) };
    Some(if neg { -v } else { v })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64_roundoff_and_mode() {
        assert_eq!(<f64 as Real>::epsilon(), 2f64.powi(-53));
        assert_eq!(f64::MODE, PrecisionMode::Native);
        assert_eq!("dd".parse::<PrecisionMode>().unwrap(), PrecisionMode::DoubleDouble);
        assert!("triple".parse::<PrecisionMode>().is_err());
    }

    #[test]
    fn generic_functions_agree_with_std_in_f64() {
        for &x in &[-3.0, -0.5, 0.0, 0.1, 1.0, 2.5, 10.0] {
            assert!((generic_exp(x) - x.exp()).abs() <= 4e-16 * x.exp());
            let (s, c) = generic_sin_cos(x);
            assert!((s - x.sin()).abs() < 1e-15 && (c - x.cos()).abs() < 1e-15);
        }
        for &x in &[1e-3, 0.5, 1.0, 7.0, 1e5] {
            assert!((generic_ln(x) - x.ln()).abs() < 1e-15 * (1.0 + x.ln().abs()));
        }
        assert!((generic_atan2(1.0, -1.0) - 0.75 * std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn powi_and_round() {
        assert_eq!(Real::powi(2.0f64, 10), 1024.0);
        assert_eq!(Real::round(-2.5f64), -3.0);
    }
}

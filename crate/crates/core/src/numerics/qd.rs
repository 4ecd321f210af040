//! Quad-double arithmetic: four non-overlapping f64 components, largest first.
//!
//! Operations collect the exact error terms of the partial results into a
//! floating-point expansion (exact sum), then round that expansion back to four
//! components.

use std::cmp::Ordering;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use super::dd::{assign_ops, quick_two_sum, two_prod, two_sum};
use super::real::{self, PrecisionMode, Real};

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(into = "[f64; 4]", from = "[f64; 4]")]
pub struct Qd(pub [f64; 4]);

impl From<Qd> for [f64; 4] {
    fn from(x: Qd) -> Self {
        x.0
    }
}

impl From<[f64; 4]> for Qd {
    fn from(c: [f64; 4]) -> Self {
        Qd::from_terms(&c)
    }
}

/// Adds `b` to the expansion `e` (increasing magnitude, non-overlapping) exactly.
fn grow_expansion(e: &mut Vec<f64>, b: f64) {
    let mut q = b;
    let mut h = Vec::with_capacity(e.len() + 1);
    for &ei in e.iter() {
        let (s, err) = two_sum(q, ei);
        q = s;
        if err != 0.0 {
            h.push(err);
        }
    }
    if q != 0.0 || h.is_empty() {
        h.push(q);
    }
    *e = h;
}

/// Rounds an exact expansion (increasing magnitude) to its four leading components.
fn compress_top4(e: &[f64]) -> [f64; 4] {
    let m = e.len();
    if m == 0 {
        return [0.0; 4];
    }
    // Shewchuk's compression: result is non-adjacent, increasing magnitude.
    let mut g = vec![0.0; m];
    let mut bottom = m - 1;
    let mut q = e[m - 1];
    for i in (0..m - 1).rev() {
        let (s, err) = quick_two_sum(q, e[i]);
        if err != 0.0 {
            g[bottom] = s;
            bottom -= 1;
            q = err;
        } else {
            q = s;
        }
    }
    g[bottom] = q;
    let mut h = Vec::with_capacity(m);
    let mut q = g[bottom];
    for &gi in &g[bottom + 1..] {
        let (s, err) = quick_two_sum(gi, q);
        q = s;
        if err != 0.0 {
            h.push(err);
        }
    }
    h.push(q);
    let mut out = [0.0; 4];
    for (k, v) in h.iter().rev().take(4).enumerate() {
        out[k] = *v;
    }
    // the dropped tail is below half an ulp of out[3]; fold the ordering tidy
    let (a, b) = quick_two_sum(out[0], out[1]);
    let (b, c) = quick_two_sum(b, out[2]);
    let (c, d) = quick_two_sum(c, out[3]);
    [a, b, c, d]
}

impl Qd {
    /// Exact sum of arbitrary terms, rounded to quad-double.
    pub fn from_terms(terms: &[f64]) -> Qd {
        let mut e: Vec<f64> = Vec::with_capacity(terms.len());
        for &t in terms {
            if t != 0.0 {
                grow_expansion(&mut e, t);
            }
        }
        if e.iter().any(|v| !v.is_finite()) {
            let s: f64 = terms.iter().sum();
            return Qd([s, 0.0, 0.0, 0.0]);
        }
        Qd(compress_top4(&e))
    }

    fn mul_scalar(self, b: f64) -> Qd {
        let mut t = [0.0; 8];
        for i in 0..4 {
            let (p, e) = two_prod(self.0[i], b);
            t[2 * i] = p;
            t[2 * i + 1] = e;
        }
        Qd::from_terms(&t)
    }
}

impl PartialEq for Qd {
    fn eq(&self, o: &Self) -> bool {
        self.0 == o.0
    }
}

impl PartialOrd for Qd {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        for i in 0..4 {
            match self.0[i].partial_cmp(&o.0[i])? {
                Ordering::Equal => continue,
                ord => return Some(ord),
            }
        }
        Some(Ordering::Equal)
    }
}

impl Add for Qd {
    type Output = Qd;
    fn add(self, b: Qd) -> Qd {
        let a = self.0;
        let c = b.0;
        Qd::from_terms(&[a[3], c[3], a[2], c[2], a[1], c[1], a[0], c[0]])
    }
}

impl Neg for Qd {
    type Output = Qd;
    fn neg(self) -> Qd {
        Qd([-self.0[0], -self.0[1], -self.0[2], -self.0[3]])
    }
}

impl Sub for Qd {
    type Output = Qd;
    fn sub(self, b: Qd) -> Qd {
        self + (-b)
    }
}

impl Mul for Qd {
    type Output = Qd;
    fn mul(self, b: Qd) -> Qd {
        let a = self.0;
        let c = b.0;
        let mut t = Vec::with_capacity(24);
        for order in (0..=4).rev() {
            for i in 0..=order.min(3) {
                let j = order - i;
                if j > 3 {
                    continue;
                }
                if order == 4 {
                    t.push(a[i] * c[j]);
                } else {
                    let (p, e) = two_prod(a[i], c[j]);
                    t.push(e);
                    t.push(p);
                }
            }
        }
        Qd::from_terms(&t)
    }
}

impl Div for Qd {
    type Output = Qd;
    fn div(self, b: Qd) -> Qd {
        // long division, one f64 quotient digit per step
        let mut q = [0.0; 5];
        let mut r = self;
        for qi in q.iter_mut() {
            *qi = r.0[0] / b.0[0];
            r = r - b.mul_scalar(*qi);
        }
        Qd::from_terms(&q)
    }
}

assign_ops!(Qd);

#[allow(clippy::excessive_precision)]
impl Real for Qd {
    const MODE: PrecisionMode = PrecisionMode::QuadDouble;

    fn from_f64(x: f64) -> Self {
        Qd([x, 0.0, 0.0, 0.0])
    }
    fn to_f64(self) -> f64 {
        self.0[0] + self.0[1]
    }
    fn epsilon() -> f64 {
        2f64.powi(-209)
    }
    fn pi() -> Self {
        Qd([
            std::f64::consts::PI,
            1.224646799147353207e-16,
            -2.994769809718339666e-33,
            1.112454220863365282e-49,
        ])
    }
    fn ln2() -> Self {
        Qd([
            std::f64::consts::LN_2,
            2.319046813846299558e-17,
            5.707708438416212066e-34,
            -3.582432210601811423e-50,
        ])
    }
    fn abs(self) -> Self {
        if self.0[0] < 0.0 {
            -self
        } else {
            self
        }
    }
    fn sqrt(self) -> Self {
        let a = self.0[0];
        if a <= 0.0 {
            return if a == 0.0 { Qd::default() } else { Qd::from_f64(f64::NAN) };
        }
        // Newton on 1/sqrt, then one correction of the root itself.
        let mut x = Qd::from_f64(1.0 / a.sqrt());
        for _ in 0..3 {
            let h = Qd::one() - self * x * x;
            x += x * h.mul_f64(0.5);
        }
        let y = self * x;
        y + x * (self - y * y).mul_f64(0.5)
    }
    fn floor(self) -> Self {
        let mut out = [0.0; 4];
        for i in 0..4 {
            let f = self.0[i].floor();
            out[i] = f;
            if f != self.0[i] {
                break;
            }
        }
        Qd::from_terms(&out)
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

//! Real polynomials, Lagrange extrapolation and least-squares fitting.

use serde::{Deserialize, Serialize};

use super::real::Real;
use crate::error::{Error, Result};

/// Coefficient basis of a [`RealPolynomial`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "R: Real", deserialize = "R: Real"))]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Basis<R: Real> {
    Monomial,
    /// Chebyshev polynomials of the first kind mapped to `[lo, hi]`.
    Chebyshev { lo: R, hi: R },
}

impl<R: Real> Basis<R> {
    pub fn chebyshev(lo: R, hi: R) -> Self {
        Basis::Chebyshev { lo, hi }
    }

    /// Values of the first `n` basis functions at `x`.
    pub fn row(&self, x: R, n: usize) -> Vec<R> {
        let mut out = Vec::with_capacity(n);
        match *self {
            Basis::Monomial => {
                let mut p = R::one();
                for _ in 0..n {
                    out.push(p);
                    p *= x;
                }
            }
            Basis::Chebyshev { lo, hi } => {
                let t = map_to_unit(x, lo, hi);
                let (mut a, mut b) = (R::one(), t);
                for k in 0..n {
                    if k == 0 {
                        out.push(a);
                    } else {
                        out.push(b);
                        let next = (t * b).mul_f64(2.0) - a;
                        a = b;
                        b = next;
                    }
                }
            }
        }
        out
    }
}

fn map_to_unit<R: Real>(x: R, lo: R, hi: R) -> R {
    (x.mul_f64(2.0) - lo - hi) / (hi - lo)
}

/// `T_d(t)` by the three-term recurrence.
pub fn chebyshev_t<R: Real>(d: usize, t: R) -> R {
    let (mut a, mut b) = (R::one(), t);
    if d == 0 {
        return a;
    }
    for _ in 1..d {
        let next = (t * b).mul_f64(2.0) - a;
        a = b;
        b = next;
    }
    b
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "R: Real", deserialize = "R: Real"))]
pub struct RealPolynomial<R: Real> {
    pub basis: Basis<R>,
    pub coeffs: Vec<R>,
}

impl<R: Real> RealPolynomial<R> {
    pub fn new(basis: Basis<R>, coeffs: Vec<R>) -> Self {
        RealPolynomial { basis, coeffs }
    }

    /// Nominal degree (length of the coefficient vector minus one).
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: R) -> R {
        match self.basis {
            Basis::Monomial => {
                let mut acc = R::zero();
                for c in self.coeffs.iter().rev() {
                    acc = acc * x + *c;
                }
                acc
            }
            Basis::Chebyshev { lo, hi } => {
                // Clenshaw
                let t = map_to_unit(x, lo, hi);
                let (mut b1, mut b2) = (R::zero(), R::zero());
                for c in self.coeffs.iter().skip(1).rev() {
                    let b0 = (t * b1).mul_f64(2.0) - b2 + *c;
                    b2 = b1;
                    b1 = b0;
                }
                match self.coeffs.first() {
                    Some(c0) => t * b1 - b2 + *c0,
                    None => R::zero(),
                }
            }
        }
    }

    pub fn coefficient_l1(&self) -> R {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    pub fn to_monomial(&self) -> RealPolynomial<R> {
        match self.basis {
            Basis::Monomial => self.clone(),
            Basis::Chebyshev { lo, hi } => {
                let n = self.coeffs.len();
                let alpha = R::from_f64(2.0) / (hi - lo);
                let beta = -(hi + lo) / (hi - lo);
                let mut out = vec![R::zero(); n.max(1)];
                let mut prev: Vec<R> = vec![R::one()];
                let mut cur: Vec<R> = vec![beta, alpha];
                for (k, c) in self.coeffs.iter().enumerate() {
                    let tk = if k == 0 { &prev } else { &cur };
                    for (o, t) in out.iter_mut().zip(tk.iter()) {
                        *o += *c * *t;
                    }
                    if k >= 1 {
                        // T_{k+1} = 2 (alpha x + beta) T_k - T_{k-1}
                        let mut next = vec![R::zero(); cur.len() + 1];
                        for (i, t) in cur.iter().enumerate() {
                            next[i + 1] += (alpha * *t).mul_f64(2.0);
                            next[i] += (beta * *t).mul_f64(2.0);
                        }
                        for (i, t) in prev.iter().enumerate() {
                            next[i] -= *t;
                        }
                        prev = std::mem::replace(&mut cur, next);
                    }
                }
                RealPolynomial::new(Basis::Monomial, out)
            }
        }
    }

    pub fn to_chebyshev(&self, lo: R, hi: R) -> RealPolynomial<R> {
        let mono = self.to_monomial();
        let n = mono.coeffs.len().max(1);
        let gamma = (hi - lo).mul_f64(0.5);
        let delta = (hi + lo).mul_f64(0.5);
        // power holds x^k in the Chebyshev basis on [lo, hi]
        let mut power = vec![R::zero(); n + 1];
        power[0] = R::one();
        let mut out = vec![R::zero(); n];
        for (k, c) in mono.coeffs.iter().enumerate() {
            for j in 0..=k {
                out[j] += *c * power[j];
            }
            let mut next = vec![R::zero(); n + 1];
            for j in 0..=k.min(n - 1) {
                let p = power[j];
                if p == R::zero() {
                    continue;
                }
                next[j] += delta * p;
                if j == 0 {
                    next[1] += gamma * p;
                } else {
                    let h = (gamma * p).mul_f64(0.5);
                    next[j + 1] += h;
                    next[j - 1] += h;
                }
            }
            power = next;
        }
        RealPolynomial::new(Basis::chebyshev(lo, hi), out)
    }
}

/// Value at `target` of the unique polynomial of degree `< points.len()` through `points`.
///
/// Uses the first (modified Lagrange) barycentric form, which stays stable when
/// `target` lies outside the node interval.
pub fn lagrange_extrapolate<R: Real>(points: &[(R, R)], target: R) -> Result<R> {
    if points.is_empty() {
        return Err(Error::InvalidInput("no interpolation points".into()));
    }
    let n = points.len();
    let mut w = vec![R::one(); n];
    for j in 0..n {
        for k in 0..n {
            if j != k {
                let d = points[j].0 - points[k].0;
                if d == R::zero() {
                    return Err(Error::DuplicateNode { x: points[j].0.to_f64() });
                }
                w[j] *= d;
            }
        }
    }
    let mut ell = R::one();
    let mut sum = R::zero();
    for (j, &(x, y)) in points.iter().enumerate() {
        let d = target - x;
        if d == R::zero() {
            return Ok(y);
        }
        ell *= d;
        sum += y / (w[j] * d);
    }
    Ok(ell * sum)
}

/// Summary of a least-squares fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub max_residual: f64,
    pub rms_residual: f64,
    /// Condition estimate of the normal system, `(max|r_kk| / min|r_kk|)^2`.
    pub condition: f64,
    /// Whether every residual is at roundoff level relative to the data scale.
    pub exact: bool,
}

/// Least-squares polynomial fit of the given degree in the given basis.
pub fn poly_fit<R: Real>(points: &[(R, R)], degree: usize, basis: Basis<R>) -> Result<(RealPolynomial<R>, FitReport)> {
    let p = degree + 1;
    if points.len() < p {
        return Err(Error::InvalidInput(format!("{} points cannot determine degree {}", points.len(), degree)));
    }
    let xs: Vec<R> = points.iter().map(|q| q.0).collect();
    let ys: Vec<R> = points.iter().map(|q| q.1).collect();
    let ls = LeastSquares::new(&basis, &xs, p)?;
    if ls.condition > 1.0 / R::epsilon() {
        return Err(Error::IllConditioned { condition: ls.condition });
    }
    let coeffs = ls.solve(&ys);
    let poly = RealPolynomial::new(basis, coeffs);
    let res: Vec<f64> = points.iter().map(|&(x, y)| (poly.eval(x) - y).to_f64()).collect();
    let max_residual = res.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let rms_residual = (res.iter().map(|r| r * r).sum::<f64>() / res.len() as f64).sqrt();
    let scale = ys.iter().fold(0.0f64, |m, y| m.max(y.to_f64().abs())).max(f64::MIN_POSITIVE);
    let exact = max_residual <= 1e3 * R::epsilon() * ls.condition.sqrt().max(1.0) * scale * p as f64;
    Ok((poly, FitReport { max_residual, rms_residual, condition: ls.condition, exact }))
}

/// Householder QR factorisation of a polynomial design matrix, reusable for many right-hand sides.
pub(crate) struct LeastSquares<R: Real> {
    m: usize,
    p: usize,
    /// Column-major reflector storage; the upper triangle holds R (diagonal kept separately).
    cols: Vec<Vec<R>>,
    diag: Vec<R>,
    design: Vec<Vec<R>>,
    pub condition: f64,
}

impl<R: Real> LeastSquares<R> {
    pub fn new(basis: &Basis<R>, xs: &[R], p: usize) -> Result<Self> {
        let rows: Vec<Vec<R>> = xs.iter().map(|&x| basis.row(x, p)).collect();
        Self::from_rows(rows, p)
    }

    /// Factorises an explicit design matrix given row by row (each of length `p`).
    pub fn from_rows(rows: Vec<Vec<R>>, p: usize) -> Result<Self> {
        let m = rows.len();
        if m < p {
            return Err(Error::InvalidInput("fewer points than coefficients".into()));
        }
        let design: Vec<Vec<R>> = (0..p).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        let mut cols = design.clone();
        let mut diag = vec![R::zero(); p];
        for k in 0..p {
            let norm = cols[k][k..].iter().map(|v| v.sqr()).sum::<R>().sqrt();
            if norm == R::zero() {
                return Err(Error::IllConditioned { condition: f64::INFINITY });
            }
            let alpha = if cols[k][k] > R::zero() { -norm } else { norm };
            // v = x - alpha e1, stored in cols[k][k..]
            cols[k][k] -= alpha;
            let vnorm2: R = cols[k][k..].iter().map(|v| v.sqr()).sum();
            diag[k] = alpha;
            let (left, right) = cols.split_at_mut(k + 1);
            let v = &left[k][k..];
            for c in right.iter_mut() {
                let dot: R = v.iter().zip(&c[k..]).map(|(a, b)| *a * *b).sum();
                let f = dot.mul_f64(2.0) / vnorm2;
                for (ci, vi) in c[k..].iter_mut().zip(v) {
                    *ci -= f * *vi;
                }
            }
        }
        let amax = diag.iter().fold(0.0f64, |a, d| a.max(d.to_f64().abs()));
        let amin = diag.iter().fold(f64::INFINITY, |a, d| a.min(d.to_f64().abs()));
        let condition = (amax / amin).powi(2);
        Ok(LeastSquares { m, p, cols, diag, design, condition })
    }

    fn solve_once(&self, y: &[R]) -> Vec<R> {
        let mut b = y.to_vec();
        for k in 0..self.p {
            let v = &self.cols[k][k..];
            let vnorm2: R = v.iter().map(|a| a.sqr()).sum();
            let dot: R = v.iter().zip(&b[k..]).map(|(a, c)| *a * *c).sum();
            let f = dot.mul_f64(2.0) / vnorm2;
            for (bi, vi) in b[k..].iter_mut().zip(v) {
                *bi -= f * *vi;
            }
        }
        let mut c = vec![R::zero(); self.p];
        for k in (0..self.p).rev() {
            let mut s = b[k];
            for j in k + 1..self.p {
                s -= self.cols[j][k] * c[j];
            }
            c[k] = s / self.diag[k];
        }
        c
    }

    /// Solution with one step of iterative refinement.
    pub fn solve(&self, y: &[R]) -> Vec<R> {
        assert_eq!(y.len(), self.m);
        let mut c = self.solve_once(y);
        let r: Vec<R> = (0..self.m)
            .map(|i| {
                let mut s = y[i];
                for (j, cj) in c.iter().enumerate() {
                    s -= self.design[j][i] * *cj;
                }
                s
            })
            .collect();
        let dc = self.solve_once(&r);
        for (ci, d) in c.iter_mut().zip(dc) {
            *ci += d;
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::dd::Dd;
    use proptest::prelude::*;

    #[test]
    fn extrapolate_parabola() {
        let pts = [(0.0, 1.0), (0.5, 0.0), (1.0, 1.0)];
        assert!((lagrange_extrapolate(&pts, 2.0).unwrap() - 9.0).abs() < 1e-12);
        assert_eq!(lagrange_extrapolate(&pts, 0.5).unwrap(), 0.0);
        let dup = [(0.0, 1.0), (0.0, 2.0)];
        assert!(matches!(lagrange_extrapolate(&dup, 1.0), Err(Error::DuplicateNode { .. })));
    }

    #[test]
    fn chebyshev_values() {
        assert_eq!(chebyshev_t(3, 0.5f64), 4.0 * 0.125 - 1.5);
        assert!((chebyshev_t(16, 3.0f64) - (16.0 * 3f64.acosh()).cosh()).abs() < 1e-3 * chebyshev_t(16, 3.0));
    }

    #[test]
    fn basis_conversions_round_trip() {
        let p = RealPolynomial::new(Basis::chebyshev(0.0, 0.5), vec![0.3, -1.0, 0.25, 2.0, -0.5]);
        let m = p.to_monomial();
        let back = m.to_chebyshev(0.0, 0.5);
        for x in [0.0, 0.1, 0.37, 1.0] {
            assert!((p.eval(x) - m.eval(x)).abs() < 1e-9);
            assert!((p.eval(x) - back.eval(x)).abs() < 1e-9);
        }
        for (a, b) in p.coeffs.iter().zip(&back.coeffs) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn fit_recovers_degree_24_in_double_double() {
        let delta = Dd::from_f64(0.1);
        let truth = RealPolynomial::new(
            Basis::chebyshev(Dd::zero(), delta),
            (0..25).map(|k| Dd::from_f64(((k * 7919) % 13) as f64 / 13.0 - 0.5)).collect(),
        );
        let pts: Vec<(Dd, Dd)> = (0..200)
            .map(|i| {
                let x = delta * Dd::from_f64(i as f64) / Dd::from_f64(199.0);
                (x, truth.eval(x))
            })
            .collect();
        let (fit, rep) = poly_fit(&pts, 24, Basis::chebyshev(Dd::zero(), delta)).unwrap();
        assert!(rep.max_residual <= 1e-9);
        assert!(rep.exact);
        for (a, b) in fit.coeffs.iter().zip(&truth.coeffs) {
            assert!((*a - *b).abs().to_f64() < 1e-20);
        }
    }

    #[test]
    fn underfit_is_flagged() {
        let pts: Vec<(f64, f64)> = (0..20).map(|i| {
            let x = i as f64 / 19.0;
            (x, x * x * x)
        }).collect();
        let (_, rep) = poly_fit(&pts, 2, Basis::Monomial).unwrap();
        assert!(rep.max_residual > 1e-3);
        assert!(!rep.exact);
    }

    #[test]
    fn monomial_fit_on_short_interval_is_ill_conditioned() {
        let pts: Vec<(f64, f64)> = (0..100).map(|i| (i as f64 * 0.001, 1.0)).collect();
        assert!(matches!(poly_fit(&pts, 24, Basis::Monomial), Err(Error::IllConditioned { .. })));
    }

    proptest! {
        #[test]
        fn lagrange_reproduces_polynomials(c in proptest::collection::vec(-2.0f64..2.0, 1..8), t in -1.0f64..3.0) {
            let p = RealPolynomial::new(Basis::Monomial, c.clone());
            let pts: Vec<(f64, f64)> = (0..c.len()).map(|i| {
                let x = i as f64 / c.len() as f64;
                (x, p.eval(x))
            }).collect();
            let v = lagrange_extrapolate(&pts, t).unwrap();
            let scale = c.iter().map(|a| a.abs()).sum::<f64>() * 3f64.powi(c.len() as i32);
            prop_assert!((v - p.eval(t)).abs() <= 1e-9 * scale);
        }

        #[test]
        fn clenshaw_matches_monomial(c in proptest::collection::vec(-1.0f64..1.0, 1..12), x in 0.0f64..1.0) {
            let p = RealPolynomial::new(Basis::chebyshev(0.0, 1.0), c);
            prop_assert!((p.eval(x) - p.to_monomial().eval(x)).abs() < 1e-8);
        }
    }
}

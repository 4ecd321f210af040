//! Robust polynomial extrapolation from corrupted samples on `[0, Δ]`, and the
//! extrapolation bounds that go with it.
//!
//! The certificate search looks for a polynomial of degree `d` that agrees
//! within `δ` with a large fraction of the samples. It runs in stages: an
//! iteratively reweighted ℓ1 fit in `f64` ranks the points, trimmed
//! least-squares concentration steps in the working precision refine the
//! fit, and a randomized restart search over stratified `(d+1)`-subsets
//! takes over if that fails. Any certificate that verifies is accepted.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::poly::LeastSquares;
use crate::numerics::{chebyshev_t, Basis, Real, RealPolynomial, SeededRng};

/// Samples `y_i` at `x_i = i Δ/(N-1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "R: Real", deserialize = "R: Real"))]
pub struct DataSet<R: Real> {
    xs: Vec<R>,
    ys: Vec<R>,
    delta_end: R,
    /// Imprecision of honest points.
    pub delta: f64,
    /// Corruption budget as a fraction of the points.
    pub eta: f64,
    /// Ground-truth corruption flags, when the generator knows them.
    #[serde(default)]
    pub corrupted: Option<Vec<bool>>,
}

pub fn equispaced_grid<R: Real>(delta_end: R, count: usize) -> Vec<R> {
    let last = R::from_usize(count.saturating_sub(1).max(1));
    (0..count).map(|i| R::from_usize(i) * delta_end / last).collect()
}

impl<R: Real> DataSet<R> {
    pub fn new(delta_end: R, ys: Vec<R>, delta: f64, eta: f64) -> Result<Self> {
        if !(delta_end > R::zero() && delta_end <= R::one()) {
            return Err(Error::InvalidInput(format!("grid endpoint {} outside (0,1]", delta_end.to_f64())));
        }
        if ys.len() < 2 {
            return Err(Error::InvalidInput("need at least two samples".into()));
        }
        if !(0.0..0.25).contains(&eta) {
            return Err(Error::InvalidInput(format!("corruption fraction {eta} outside [0, 1/4)")));
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::InvalidInput(format!("imprecision {delta} must be finite and nonnegative")));
        }
        if let Some(i) = ys.iter().position(|y| !y.is_finite()) {
            return Err(Error::InvalidInput(format!("sample {i} is not finite")));
        }
        let xs = equispaced_grid(delta_end, ys.len());
        Ok(DataSet { xs, ys, delta_end, delta, eta, corrupted: None })
    }

    /// Samples `f` on the grid.
    pub fn from_fn(delta_end: R, count: usize, delta: f64, eta: f64, f: impl Fn(R) -> R) -> Result<Self> {
        let ys = equispaced_grid(delta_end, count).into_iter().map(f).collect();
        Self::new(delta_end, ys, delta, eta)
    }

    pub fn with_corruption_flags(mut self, flags: Vec<bool>) -> Result<Self> {
        if flags.len() != self.len() {
            return Err(Error::InvalidInput("corruption flags do not match the samples".into()));
        }
        self.corrupted = Some(flags);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }
    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }
    pub fn xs(&self) -> &[R] {
        &self.xs
    }
    pub fn ys(&self) -> &[R] {
        &self.ys
    }
    pub fn delta_end(&self) -> R {
        self.delta_end
    }

    /// `δ` widened by the rounding level of the data.
    pub fn effective_delta(&self) -> f64 {
        let ymax = self.ys.iter().fold(0.0f64, |m, y| m.max(y.to_f64().abs()));
        self.delta + 100.0 * R::epsilon() * ymax
    }

    /// Columns `x,y,corrupted`; the flag is empty when unknown.
    pub fn to_csv(&self) -> String {
        let digits = R::MODE.print_digits();
        let mut s = String::from("x,y,corrupted\n");
        for i in 0..self.len() {
            let flag = match &self.corrupted {
                Some(f) => u8::from(f[i]).to_string(),
                None => String::new(),
            };
            let _ = writeln!(s, "{},{},{}", self.xs[i].to_decimal(digits), self.ys[i].to_decimal(digits), flag);
        }
        s
    }

    /// Reads the CSV written by [`DataSet::to_csv`]. The x column must be the
    /// equispaced grid ending at its last value.
    pub fn from_csv(text: &str, delta: f64, eta: f64) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == "x,y,corrupted" || h.trim() == "x,y" => {}
            other => return Err(Error::Serialization(format!("unexpected CSV header {other:?}"))),
        }
        let parse = |s: &str| R::parse_decimal(s.trim()).ok_or_else(|| Error::Serialization(format!("bad number '{s}'")));
        let (mut xs, mut ys, mut flags) = (vec![], vec![], vec![]);
        for line in lines {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() < 2 || cols.len() > 3 {
                return Err(Error::Serialization(format!("bad CSV row '{line}'")));
            }
            xs.push(parse(cols[0])?);
            ys.push(parse(cols[1])?);
            flags.push(cols.get(2).map(|f| f.trim()).filter(|f| !f.is_empty()).map(|f| f == "1"));
        }
        let end = *xs.last().ok_or_else(|| Error::Serialization("no rows".into()))?;
        let ds = DataSet::new(end, ys, delta, eta)?;
        let tol = 1e3 * R::epsilon() * end.to_f64().max(1e-300);
        if ds.xs.iter().zip(&xs).any(|(a, b)| (*a - *b).abs().to_f64() > tol) {
            return Err(Error::InvalidInput("x column is not an equispaced grid starting at 0".into()));
        }
        if flags.iter().all(Option::is_some) {
            return ds.with_corruption_flags(flags.into_iter().map(Option::unwrap).collect());
        }
        Ok(ds)
    }
}

/// Tuning knobs for [`certificate_search`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Number of randomized restarts allowed after the trimmed fit fails.
    pub budget: usize,
    /// Constant `C` of the uniform bound `2δ e^{C d}` on `[0, Δ]`.
    pub growth_constant: f64,
    pub irls_iterations: usize,
    pub max_c_steps: usize,
    /// Extra fraction of points a certificate may leave out beyond `η + 3σ`.
    pub fraction_slack: f64,
    /// Restarts evaluated per parallel batch.
    pub batch: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { budget: 256, growth_constant: 12.0, irls_iterations: 40, max_c_steps: 50, fraction_slack: 0.01, batch: 16 }
    }
}

/// Minimum certificate size: all but `η + 3 sqrt(η(1-η)/N) + slack + 1/N` of the points.
pub fn required_certificate_size(n: usize, eta: f64, slack: f64) -> usize {
    let nf = n as f64;
    let budget = eta + 3.0 * (eta * (1.0 - eta) / nf).sqrt() + slack + 1.0 / nf;
    (((1.0 - budget) * nf).ceil() as usize).clamp(1, n)
}

/// A polynomial together with the points it matches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "R: Real", deserialize = "R: Real"))]
pub struct Certificate<R: Real> {
    pub indices: Vec<usize>,
    pub poly: RealPolynomial<R>,
    pub tolerance: f64,
    pub required: usize,
    pub max_residual: f64,
}

impl<R: Real> Certificate<R> {
    pub fn size(&self) -> usize {
        self.indices.len()
    }
}

/// Independent check of a certificate against the samples it was built from.
pub fn verify_certificate<R: Real>(xs: &[R], ys: &[R], cert: &Certificate<R>, degree: usize) -> bool {
    if cert.poly.degree() > degree || cert.indices.len() < cert.required || xs.len() != ys.len() {
        return false;
    }
    let mut seen = vec![false; xs.len()];
    for &i in &cert.indices {
        if i >= xs.len() || seen[i] {
            return false;
        }
        seen[i] = true;
        let r = (ys[i] - cert.poly.eval(xs[i])).abs().to_f64();
        if !(r <= cert.tolerance) {
            return false;
        }
    }
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "kebab-case")]
pub enum SearchStage {
    Trimmed,
    Restart { trial: usize },
}

/// Indices of the `h` smallest residuals, ascending by index.
fn smallest(res: &[f64], h: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..res.len()).collect();
    idx.sort_by(|&a, &b| res[a].total_cmp(&res[b]).then(a.cmp(&b)));
    idx.truncate(h);
    idx.sort_unstable();
    idx
}

fn residuals<R: Real>(xs: &[R], ys: &[R], poly: &RealPolynomial<R>) -> Vec<f64> {
    xs.iter().zip(ys).map(|(x, y)| (*y - poly.eval(*x)).abs().to_f64()).collect()
}

/// Iteratively reweighted least squares for the ℓ1 fit, in `f64`.
fn irls_l1(xs: &[f64], ys: &[f64], basis: &Basis<f64>, p: usize, iterations: usize) -> Vec<f64> {
    let rows: Vec<Vec<f64>> = xs.iter().map(|&x| basis.row(x, p)).collect();
    let scale = ys.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    let floor = (1e-13 * scale).max(f64::MIN_POSITIVE);
    let mut w = vec![1.0; xs.len()];
    let mut res = vec![f64::INFINITY; xs.len()];
    for _ in 0..iterations.max(1) {
        let sw: Vec<f64> = w.iter().map(|v: &f64| v.sqrt()).collect();
        let wrows = rows.iter().zip(&sw).map(|(r, s)| r.iter().map(|v| v * s).collect()).collect();
        let wy: Vec<f64> = ys.iter().zip(&sw).map(|(y, s)| y * s).collect();
        let Ok(ls) = LeastSquares::from_rows(wrows, p) else { break };
        let c = ls.solve(&wy);
        for (i, row) in rows.iter().enumerate() {
            let fit: f64 = row.iter().zip(&c).map(|(a, b)| a * b).sum();
            res[i] = (ys[i] - fit).abs();
            w[i] = 1.0 / res[i].max(floor);
        }
    }
    res
}

struct Problem<'a, R: Real> {
    xs: &'a [R],
    ys: &'a [R],
    basis: Basis<R>,
    p: usize,
    h: usize,
    tol: f64,
    cfg: &'a SearchConfig,
}

impl<R: Real> Problem<'_, R> {
    fn fit(&self, set: &[usize]) -> Result<RealPolynomial<R>> {
        let xs: Vec<R> = set.iter().map(|&i| self.xs[i]).collect();
        let ys: Vec<R> = set.iter().map(|&i| self.ys[i]).collect();
        let ls = LeastSquares::new(&self.basis, &xs, self.p)?;
        Ok(RealPolynomial::new(self.basis, ls.solve(&ys)))
    }

    /// Trimmed least-squares concentration steps from `set`, then verification.
    /// Stops at the first fit that verifies, or when the trimmed set is stable.
    fn concentrate(&self, mut set: Vec<usize>) -> Option<Certificate<R>> {
        for _ in 0..=self.cfg.max_c_steps {
            let poly = self.fit(&set).ok()?;
            let res = residuals(self.xs, self.ys, &poly);
            let indices: Vec<usize> = (0..res.len()).filter(|&i| res[i] <= self.tol).collect();
            if indices.len() >= self.h {
                let max_residual = indices.iter().fold(0.0f64, |m, &i| m.max(res[i]));
                return Some(Certificate { indices, poly, tolerance: self.tol, required: self.h, max_residual });
            }
            let next = smallest(&res, self.h);
            if next == set {
                return None;
            }
            set = next;
        }
        None
    }

    /// One restart: interpolate through one point per stratum, keep the `h` best.
    fn restart(&self, rng: &SeededRng) -> Option<Certificate<R>> {
        let n = self.xs.len();
        let mut r = rng.clone();
        let set: Vec<usize> = (0..self.p)
            .map(|k| {
                let lo = k * n / self.p;
                let hi = ((k + 1) * n / self.p).max(lo + 1);
                lo + r.below(hi - lo)
            })
            .collect();
        let poly = self.fit(&set).ok()?;
        let res = residuals(self.xs, self.ys, &poly);
        self.concentrate(smallest(&res, self.h))
    }
}

fn search<R: Real>(
    xs: &[R],
    ys: &[R],
    basis: Basis<R>,
    degree: usize,
    tol: f64,
    eta: f64,
    cfg: &SearchConfig,
    rng: &SeededRng,
) -> Result<(Certificate<R>, SearchStage)> {
    let n = xs.len();
    let p = degree + 1;
    if n < p + 1 {
        return Err(Error::InvalidInput(format!("{n} points cannot certify degree {degree}")));
    }
    let h = required_certificate_size(n, eta, cfg.fraction_slack).max(p + 1).min(n);
    let prob = Problem { xs, ys, basis, p, h, tol, cfg };

    let basis64 = match basis {
        Basis::Monomial => Basis::Monomial,
        Basis::Chebyshev { lo, hi } => Basis::Chebyshev { lo: lo.to_f64(), hi: hi.to_f64() },
    };
    let xs64: Vec<f64> = xs.iter().map(|x| x.to_f64()).collect();
    let ys64: Vec<f64> = ys.iter().map(|y| y.to_f64()).collect();
    let r64 = irls_l1(&xs64, &ys64, &basis64, p, cfg.irls_iterations);
    if let Some(c) = prob.concentrate(smallest(&r64, h)) {
        return Ok((c, SearchStage::Trimmed));
    }

    let batch = cfg.batch.max(1);
    let mut start = 0;
    while start < cfg.budget {
        let end = (start + batch).min(cfg.budget);
        let found = (start..end)
            .into_par_iter()
            .map(|t| prob.restart(&rng.derive(t as u64)).map(|c| (t, c)))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .next();
        if let Some((trial, c)) = found {
            return Ok((c, SearchStage::Restart { trial }));
        }
        start = end;
    }
    Err(Error::SearchExhausted { trials: cfg.budget, needed: h, total: n })
}

/// Finds a degree-`d` polynomial agreeing within the effective `δ` with enough samples.
pub fn certificate_search<R: Real>(ds: &DataSet<R>, d: usize, cfg: &SearchConfig, rng: &SeededRng) -> Result<Certificate<R>> {
    let basis = Basis::chebyshev(R::zero(), ds.delta_end);
    search(&ds.xs, &ds.ys, basis, d, ds.effective_delta(), ds.eta, cfg, rng).map(|r| r.0)
}

/// Extrapolated value with its certificate and bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "R: Real", deserialize = "R: Real"))]
pub struct ReductionResult<R: Real> {
    pub estimate: R,
    pub certificate: Certificate<R>,
    pub degree: usize,
    pub rescale: usize,
    pub target: f64,
    pub effective_delta: f64,
    /// Bound on the gap between any two certified polynomials over the fitting interval.
    pub uniform_bound: f64,
    pub a_priori_bound: f64,
    pub growth_constant: f64,
    /// Largest residual over the certified points.
    pub achieved_residual: f64,
    pub stage: SearchStage,
}

/// Certificate search followed by evaluation at `target`.
pub fn robust_extrapolate<R: Real>(
    ds: &DataSet<R>,
    d: usize,
    target: f64,
    cfg: &SearchConfig,
    rng: &SeededRng,
) -> Result<ReductionResult<R>> {
    let basis = Basis::chebyshev(R::zero(), ds.delta_end);
    let tol = ds.effective_delta();
    let (certificate, stage) = search(&ds.xs, &ds.ys, basis, d, tol, ds.eta, cfg, rng)?;
    let estimate = certificate.poly.eval(R::from_f64(target));
    let uniform_bound = 2.0 * tol * (cfg.growth_constant * d as f64).exp();
    let de = ds.delta_end.to_f64();
    let a_priori_bound =
        if target.abs() <= de { uniform_bound } else { long_distance_bound(uniform_bound, d, de / target.abs())? };
    Ok(ReductionResult {
        estimate,
        achieved_residual: certificate.max_residual,
        certificate,
        degree: d,
        rescale: 1,
        target,
        effective_delta: tol,
        uniform_bound,
        a_priori_bound,
        growth_constant: cfg.growth_constant,
        stage,
    })
}

/// Fits a degree `d k` polynomial in `x = θ^{1/k}` and extrapolates to `x = 1`.
/// `k = 1` is exactly [`robust_extrapolate`] at target 1.
pub fn rescaled_extrapolate<R: Real>(ds: &DataSet<R>, d: usize, k: usize, cfg: &SearchConfig, rng: &SeededRng) -> Result<ReductionResult<R>> {
    if k == 0 {
        return Err(Error::InvalidInput("rescaling power must be at least 1".into()));
    }
    if k == 1 {
        return robust_extrapolate(ds, d, 1.0, cfg, rng);
    }
    let xs: Vec<R> = ds.xs.iter().map(|x| if *x == R::zero() { *x } else { x.root(k as u32) }).collect();
    let end = ds.delta_end.root(k as u32);
    let dk = d * k;
    let tol = ds.effective_delta();
    let (certificate, stage) = search(&xs, &ds.ys, Basis::chebyshev(R::zero(), end), dk, tol, ds.eta, cfg, rng)?;
    let estimate = certificate.poly.eval(R::one());
    let uniform_bound = 2.0 * tol * (cfg.growth_constant * dk as f64).exp();
    let a_priori_bound = paturi_bound(uniform_bound, dk, end.to_f64())?;
    Ok(ReductionResult {
        estimate,
        achieved_residual: certificate.max_residual,
        certificate,
        degree: dk,
        rescale: k,
        target: 1.0,
        effective_delta: tol,
        uniform_bound,
        a_priori_bound,
        growth_constant: cfg.growth_constant,
        stage,
    })
}

fn check_delta_end(delta_end: f64) -> Result<()> {
    if !(delta_end > 0.0 && delta_end <= 1.0) {
        return Err(Error::InvalidInput(format!("interval endpoint {delta_end} outside (0,1]")));
    }
    Ok(())
}

/// `ε e^{4d/Δ}`: growth at 1 of a degree-`d` polynomial bounded by `ε` on `[0, Δ]`.
pub fn paturi_bound(eps: f64, d: usize, delta_end: f64) -> Result<f64> {
    check_delta_end(delta_end)?;
    if d == 0 {
        return Ok(eps);
    }
    Ok(eps * (4.0 * d as f64 / delta_end).exp())
}

/// `c / (1 - d²/N)`: uniform bound from a bound `c` at `N + 1` equispaced points.
pub fn markov_uniform_bound(c: f64, d: usize, n: usize) -> Result<f64> {
    if d == 0 {
        return Ok(c);
    }
    let ratio = (d * d) as f64 / n as f64;
    if ratio >= 1.0 {
        return Err(Error::InvalidRegime(format!("d^2 = {} is not below N = {n}", d * d)));
    }
    Ok(c / (1.0 - ratio))
}

/// `δ (8/Δ)^d`.
pub fn long_distance_bound(delta: f64, d: usize, delta_end: f64) -> Result<f64> {
    check_delta_end(delta_end)?;
    Ok(delta * (d as f64 * (8.0 / delta_end).ln()).exp())
}

/// `2 δ e^{C d} (8/Δ)^d`, the bound attached to [`robust_extrapolate`] at target 1.
pub fn a_priori_bound(delta: f64, d: usize, delta_end: f64, growth_constant: f64) -> Result<f64> {
    long_distance_bound(2.0 * delta * (growth_constant * d as f64).exp(), d, delta_end)
}

/// Minimum over `t > 0` of `8t(1.01 e^{2/t} + 2.01)`, returned as `(t, value)`.
pub fn rescaling_constant() -> (f64, f64) {
    let f = |t: f64| 8.0 * t * (1.01 * (2.0 / t).exp() + 2.01);
    let (mut a, mut b) = (0.05f64, 50.0f64);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    while b - a > 1e-12 {
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    let t = 0.5 * (a + b);
    (t, f(t))
}

/// `|T_d(2/Δ - 1)|`: the value at 1 of `T_d` rescaled to be bounded by one on `[0, Δ]`.
pub fn chebyshev_witness(d: usize, delta_end: f64) -> f64 {
    chebyshev_t(d, 2.0 / delta_end - 1.0).abs()
}

/// Largest value of `|T_d(2x-1)|` on a dense grid of `[0,1]` relative to its
/// largest value at the `N + 1` equispaced points.
pub fn markov_witness(d: usize, n: usize, dense: usize) -> f64 {
    let at = |x: f64| chebyshev_t(d, 2.0 * x - 1.0).abs();
    let coarse = (0..=n).map(|i| at(i as f64 / n as f64)).fold(0.0f64, f64::max);
    let fine = (0..=dense).map(|i| at(i as f64 / dense as f64)).fold(0.0f64, f64::max);
    fine / coarse
}

/// Sum of absolute monomial coefficients and sup norm on `[-1,1]` (dense grid) of a
/// polynomial given by Chebyshev coefficients.
pub fn coefficient_sum_check(cheb_coeffs: &[f64], dense: usize) -> (f64, f64) {
    let poly = RealPolynomial::new(Basis::chebyshev(-1.0, 1.0), cheb_coeffs.to_vec());
    let l1 = poly.to_monomial().coefficient_l1();
    let sup = (0..=dense).map(|i| poly.eval(-1.0 + 2.0 * i as f64 / dense as f64).abs()).fold(0.0f64, f64::max);
    (l1, sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Dd;

    #[test]
    fn bound_formulas() {
        assert!((paturi_bound(1.0, 1, 1.0).unwrap() - 4f64.exp()).abs() < 1e-12);
        assert_eq!(paturi_bound(0.3, 0, 0.2).unwrap(), 0.3);
        assert_eq!(markov_uniform_bound(1.0, 2, 8).unwrap(), 2.0);
        assert_eq!(markov_uniform_bound(1.5, 0, 8).unwrap(), 1.5);
        assert!(matches!(markov_uniform_bound(1.0, 3, 9), Err(Error::InvalidRegime(_))));
        assert!((long_distance_bound(1.0, 1, 0.5).unwrap() - 16.0).abs() < 1e-12);
        let (t, v) = rescaling_constant();
        assert!((v - 69.7).abs() < 0.1, "{t} {v}");
        let (l1, sup) = coefficient_sum_check(&[0.0, 0.0, 1.0], 1000);
        assert!((l1 - 3.0).abs() < 1e-12 && (sup - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bound_monotonicity() {
        let a = a_priori_bound(1e-30, 4, 0.5, 12.0).unwrap();
        assert!(a_priori_bound(1e-30, 5, 0.5, 12.0).unwrap() >= a);
        assert!(a_priori_bound(1e-30, 4, 0.25, 12.0).unwrap() >= a);
        assert!((a_priori_bound(2e-30, 4, 0.5, 12.0).unwrap() / a - 2.0).abs() < 1e-12);
    }

    #[test]
    fn clean_parabola() {
        let ds = DataSet::<f64>::from_fn(1.0, 200, 1e-12, 0.0, |x| x * x).unwrap();
        let cert = certificate_search(&ds, 2, &SearchConfig::default(), &SeededRng::new(0, 0)).unwrap();
        assert_eq!(cert.size(), 200);
        let mono = cert.poly.to_monomial();
        for (c, e) in mono.coeffs.iter().zip([0.0, 0.0, 1.0]) {
            assert!((c - e).abs() < 1e-12);
        }
        assert!(verify_certificate(ds.xs(), ds.ys(), &cert, 2));
    }

    #[test]
    fn constant_with_outlier() {
        let mut ys = vec![3.0f64; 100];
        ys[37] = 50.0;
        let ds = DataSet::new(0.5, ys, 1e-12, 0.01).unwrap();
        let cert = certificate_search(&ds, 0, &SearchConfig::default(), &SeededRng::new(0, 0)).unwrap();
        assert!(!cert.indices.contains(&37));
        assert!((cert.poly.eval(0.2) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn offsets_are_rejected() {
        let p = |x: f64| 1.0 - 3.0 * x + x * x * x;
        let mut rng = SeededRng::new(4, 0);
        let n = 900;
        let flags: Vec<bool> = (0..n).map(|_| rng.bernoulli(0.15)).collect();
        let grid = equispaced_grid(0.5f64, n);
        let ys = grid.iter().zip(&flags).map(|(x, f)| p(*x) + if *f { 10.0 } else { 0.0 }).collect();
        let ds = DataSet::new(0.5, ys, 1e-12, 0.15).unwrap().with_corruption_flags(flags.clone()).unwrap();
        let r = robust_extrapolate(&ds, 3, 1.0, &SearchConfig::default(), &SeededRng::new(1, 0)).unwrap();
        let honest_kept = r.certificate.indices.iter().filter(|&&i| !flags[i]).count();
        let honest = flags.iter().filter(|f| !**f).count();
        assert!(honest_kept as f64 >= 0.99 * honest as f64);
        assert!((r.estimate - p(1.0)).abs() < 1e-10);
        assert!((r.estimate - p(1.0)).abs() <= r.a_priori_bound);
    }

    #[test]
    fn restart_stage_recovers_from_adversarial_start() {
        // a rival polynomial on 20% of the points, clustered at the start of the grid
        let n = 400;
        let grid = equispaced_grid(Dd::from_f64(0.5), n);
        let ys: Vec<Dd> = grid
            .iter()
            .enumerate()
            .map(|(i, x)| if i < 80 { *x * Dd::from_f64(7.0) } else { *x * *x })
            .collect();
        let ds = DataSet::new(Dd::from_f64(0.5), ys, 1e-28, 0.2).unwrap();
        let r = robust_extrapolate(&ds, 2, 1.0, &SearchConfig::default(), &SeededRng::new(2, 0)).unwrap();
        assert!((r.estimate - Dd::one()).abs().to_f64() < 1e-20);
    }

    #[test]
    fn exhausted_search_reports() {
        let mut rng = SeededRng::new(5, 5);
        let ys: Vec<f64> = (0..60).map(|_| rng.uniform()).collect();
        let ds = DataSet::new(1.0, ys, 1e-12, 0.0).unwrap();
        let cfg = SearchConfig { budget: 4, ..Default::default() };
        assert!(matches!(certificate_search(&ds, 2, &cfg, &rng), Err(Error::SearchExhausted { .. })));
    }

    #[test]
    fn rescaling_identity_and_bound() {
        let ds = DataSet::<Dd>::from_fn(Dd::from_f64(0.5), 120, 1e-28, 0.0, |x| x * x * x - x).unwrap();
        let a = robust_extrapolate(&ds, 3, 1.0, &SearchConfig::default(), &SeededRng::new(0, 0)).unwrap();
        let b = rescaled_extrapolate(&ds, 3, 1, &SearchConfig::default(), &SeededRng::new(0, 0)).unwrap();
        assert_eq!(a.estimate, b.estimate);
        let c = rescaled_extrapolate(&ds, 3, 2, &SearchConfig::default(), &SeededRng::new(0, 0)).unwrap();
        assert!(c.estimate.abs().to_f64() < 1e-15);
        let r = paturi_bound(1.0, 24, 0.1f64.powf(1.0 / 3.0)).unwrap();
        assert!(r < paturi_bound(1.0, 8, 0.1).unwrap());
    }

    #[test]
    fn csv_round_trip() {
        let ds = DataSet::<Dd>::from_fn(Dd::from_f64(0.25), 17, 1e-30, 0.1, |x| x.exp())
            .unwrap()
            .with_corruption_flags(vec![false; 17])
            .unwrap();
        let back = DataSet::<Dd>::from_csv(&ds.to_csv(), 1e-30, 0.1).unwrap();
        assert_eq!(back.xs(), ds.xs());
        for (a, b) in back.ys().iter().zip(ds.ys()) {
            assert!((*a - *b).abs().to_f64() < 1e-30);
        }
        assert_eq!(back.corrupted, ds.corrupted);
    }

    #[test]
    fn witnesses_respect_bounds() {
        for d in 1..=20 {
            for k in 1..=9 {
                let de = k as f64 / 10.0;
                let w = chebyshev_witness(d, de);
                assert!(w <= paturi_bound(1.0, d, de).unwrap());
                assert!(w <= long_distance_bound(1.0, d, de).unwrap());
            }
            let n = 4 * d * d;
            assert!(markov_witness(d, n, 20_000) <= markov_uniform_bound(1.0, d, n).unwrap());
        }
        assert!(chebyshev_witness(12, 0.25) >= 12f64.exp());
    }
}

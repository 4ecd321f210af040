//! The shared denominator `Q(theta)` and the polynomial `P = Pr * Q`.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::{Circuit, PadSeed, PerturbedFamily};
use crate::error::{Error, Result};
use crate::numerics::{poly_fit, Basis, Real};

/// Pairwise product, keeping partial products of similar size.
fn tree_product<R: Real>(xs: &[R]) -> R {
    match xs.len() {
        0 => R::one(),
        1 => xs[0],
        n => tree_product(&xs[..n / 2]) * tree_product(&xs[n / 2..]),
    }
}

/// `prod (1 + (1-theta)^2 t^2)` over the half tangents `t = tan(phi/2)`.
pub fn denominator_q<R: Real>(half_tangents: &[R], theta: R) -> R {
    let a = R::one() - theta;
    let a2 = a * a;
    let factors: Vec<R> = half_tangents.iter().map(|t| R::one() + a2 * *t * *t).collect();
    tree_product(&factors)
}

/// The pad eigenphases (as half tangents) that define `Q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "R: Real", deserialize = "R: Real"))]
pub struct DenominatorSpec<R: Real> {
    half_tangents: Vec<R>,
}

impl<R: Real> DenominatorSpec<R> {
    pub fn from_seed(seed: &PadSeed<R>) -> Self {
        DenominatorSpec { half_tangents: seed.half_tangents() }
    }

    pub fn from_phases(phases: &[R]) -> Result<Self> {
        let pi = R::pi();
        let mut half_tangents = Vec::with_capacity(phases.len());
        for p in phases {
            if !(p.abs() < pi) {
                return Err(Error::SingularPhase { phase: p.to_f64() });
            }
            half_tangents.push((*p * R::from_f64(0.5)).tan());
        }
        Ok(DenominatorSpec { half_tangents })
    }

    pub fn half_tangents(&self) -> &[R] {
        &self.half_tangents
    }

    pub fn q(&self, theta: R) -> R {
        denominator_q(&self.half_tangents, theta)
    }

    /// `Q` is decreasing on `[0,1]`, so its maximum over `[lo, hi]` sits at `lo`.
    pub fn max_on(&self, lo: R) -> R {
        self.q(lo)
    }
}

/// Samples of `y = oracle(C(theta)) * Q(theta)` with a per-point validity flag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "R: Real", deserialize = "R: Real"))]
pub struct NumeratorSamples<R: Real> {
    pub thetas: Vec<R>,
    pub values: Vec<R>,
    pub q: Vec<R>,
    /// False where the oracle (or the family) failed; the value is then zero.
    pub ok: Vec<bool>,
    pub delta: f64,
    /// Cap on `Q` over the grid.
    pub k: R,
}

impl<R: Real> NumeratorSamples<R> {
    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    /// Columns `theta,y,Q,flag`.
    pub fn to_csv(&self) -> String {
        let digits = R::MODE.print_digits();
        let mut s = String::from("theta,y,Q,flag\n");
        for i in 0..self.len() {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                self.thetas[i].to_decimal(digits),
                self.values[i].to_decimal(digits),
                self.q[i].to_decimal(digits),
                u8::from(self.ok[i])
            );
        }
        s
    }

    pub fn from_csv(text: &str, delta: f64) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Serialization("empty CSV".into()))?;
        if header.trim() != "theta,y,Q,flag" {
            return Err(Error::Serialization(format!("unexpected CSV header '{header}'")));
        }
        let parse = |s: &str| R::parse_decimal(s.trim()).ok_or_else(|| Error::Serialization(format!("bad number '{s}'")));
        let (mut thetas, mut values, mut q, mut ok) = (vec![], vec![], vec![], vec![]);
        for line in lines {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return Err(Error::Serialization(format!("expected 4 columns in '{line}'")));
            }
            thetas.push(parse(cols[0])?);
            values.push(parse(cols[1])?);
            q.push(parse(cols[2])?);
            ok.push(match cols[3].trim() {
                "1" | "true" => true,
                "0" | "false" => false,
                other => return Err(Error::Serialization(format!("bad flag '{other}'"))),
            });
        }
        let k = q.iter().copied().fold(R::zero(), R::max);
        Ok(NumeratorSamples { thetas, values, q, ok, delta, k })
    }
}

fn check_grid<R: Real>(grid: &[R]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty grid".into()));
    }
    if grid[0] < R::zero() || grid[grid.len() - 1] > R::one() {
        return Err(Error::InvalidInput("grid must lie in [0,1]".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Evaluates `prob_fn(C(theta_i)) * Q(theta_i)` on the grid, in parallel.
/// Oracle failures are recorded as flags rather than returned.
pub fn numerator_samples<R, F>(family: &PerturbedFamily<R>, grid: &[R], prob_fn: F, delta: f64) -> Result<NumeratorSamples<R>>
where
    R: Real,
    F: Fn(&Circuit<R>) -> Result<R> + Sync,
{
    check_grid(grid)?;
    let evals: Vec<(R, R, bool)> = grid
        .par_iter()
        .map(|&theta| {
            let q = family.denominator(theta);
            match family.member(theta).and_then(|c| prob_fn(&c)) {
                Ok(p) if p.is_finite() => (p * q, q, true),
                _ => (R::zero(), q, false),
            }
        })
        .collect();
    let k = evals.iter().map(|e| e.1).fold(R::zero(), R::max);
    Ok(NumeratorSamples {
        thetas: grid.to_vec(),
        values: evals.iter().map(|e| e.0).collect(),
        q: evals.iter().map(|e| e.1).collect(),
        ok: evals.iter().map(|e| e.2).collect(),
        delta,
        k,
    })
}

/// Outcome of a held-out polynomial-degree check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeReport {
    pub degree: usize,
    pub fit_nodes: usize,
    pub heldout_nodes: usize,
    pub max_heldout_residual: f64,
    pub scale: f64,
    pub relative_residual: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Chebyshev points of the first kind mapped to `[lo, hi]`, increasing.
pub fn chebyshev_nodes<R: Real>(count: usize, lo: R, hi: R) -> Vec<R> {
    let half = (hi - lo).mul_f64(0.5);
    let mid = (hi + lo).mul_f64(0.5);
    (0..count)
        .rev()
        .map(|k| {
            let ang = R::pi() * R::from_usize(2 * k + 1) / R::from_usize(2 * count);
            mid + half * ang.cos()
        })
        .collect()
}

/// Interpolates `P` at `degree + 1` Chebyshev nodes on `[lo, hi]` and checks the
/// interpolant at interleaved held-out nodes. Passes iff the held-out residual
/// is at most `tol * max|P|`.
pub fn verify_rational_degree<R, F>(
    family: &PerturbedFamily<R>,
    prob_fn: F,
    degree: usize,
    tol: f64,
    interval: (f64, f64),
) -> Result<DegreeReport>
where
    R: Real,
    F: Fn(&Circuit<R>) -> Result<R> + Sync,
{
    let (lo, hi) = (R::from_f64(interval.0), R::from_f64(interval.1));
    if !(interval.0 >= 0.0 && interval.0 < interval.1 && interval.1 <= 1.0) {
        return Err(Error::InvalidInput(format!("bad interval {interval:?}")));
    }
    let fit_grid = chebyshev_nodes(degree + 1, lo, hi);
    let heldout_count = (degree / 2).max(4);
    let step = (hi - lo) / R::from_usize(heldout_count);
    let held_grid: Vec<R> = (0..heldout_count).map(|i| lo + step * (R::from_usize(i) + R::from_f64(0.37))).collect();

    let fit = numerator_samples(family, &fit_grid, &prob_fn, 0.0)?;
    let held = numerator_samples(family, &held_grid, &prob_fn, 0.0)?;
    if fit.ok.iter().chain(&held.ok).any(|ok| !ok) {
        return Err(Error::InvalidInput("probability function failed on the verification grid".into()));
    }
    let points: Vec<(R, R)> = fit.thetas.iter().copied().zip(fit.values.iter().copied()).collect();
    let (poly, _) = poly_fit(&points, degree, Basis::chebyshev(lo, hi))?;
    let mut max_res = 0.0f64;
    let mut scale = 0.0f64;
    for (t, y) in held.thetas.iter().zip(&held.values) {
        max_res = max_res.max((poly.eval(*t) - *y).abs().to_f64());
        scale = scale.max(y.abs().to_f64());
    }
    for y in &fit.values {
        scale = scale.max(y.abs().to_f64());
    }
    let relative = if scale > 0.0 { max_res / scale } else { max_res };
    Ok(DegreeReport {
        degree,
        fit_nodes: degree + 1,
        heldout_nodes: heldout_count,
        max_heldout_residual: max_res,
        scale,
        relative_residual: relative,
        tol,
        passed: relative <= tol,
    })
}

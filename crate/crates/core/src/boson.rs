//! Permanents, Gaussian ensembles and the permanent version of the reduction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::{equispaced_grid, robust_extrapolate, DataSet, ReductionResult, SearchConfig};
use crate::numerics::{CMatrix, Complex, Real, SeededRng};
use crate::pipelines::AverageCaseOracle;

pub const RYSER_LIMIT: usize = 14;
pub const NAIVE_LIMIT: usize = 8;
pub const BARRIER_LIMIT: usize = 8;

fn check_square<R: Real>(x: &CMatrix<R>, limit: usize) -> Result<usize> {
    if !x.is_square() {
        return Err(Error::InvalidInput(format!("matrix is {}x{}, not square", x.rows(), x.cols())));
    }
    if x.rows() > limit {
        return Err(Error::TooLarge { size: x.rows(), limit });
    }
    Ok(x.rows())
}

/// Ryser's formula with Gray-code subset updates.
pub fn permanent_ryser<R: Real>(x: &CMatrix<R>) -> Result<Complex<R>> {
    let n = check_square(x, RYSER_LIMIT)?;
    if n == 0 {
        return Ok(Complex::one());
    }
    let mut row_sums = vec![Complex::<R>::zero(); n];
    let mut in_set = vec![false; n];
    let mut total = Complex::zero();
    for k in 1usize..1 << n {
        let j = k.trailing_zeros() as usize;
        in_set[j] = !in_set[j];
        for (i, s) in row_sums.iter_mut().enumerate() {
            if in_set[j] {
                *s += x[(i, j)];
            } else {
                *s -= x[(i, j)];
            }
        }
        let prod = row_sums.iter().fold(Complex::one(), |a, b| a * *b);
        // sign (-1)^{|S|}; the Gray code size parity equals the parity of k's popcount
        if (k ^ (k >> 1)).count_ones() % 2 == 1 {
            total -= prod;
        } else {
            total += prod;
        }
    }
    Ok(if n % 2 == 1 { -total } else { total })
}

/// Sum over all permutations.
pub fn permanent_naive<R: Real>(x: &CMatrix<R>) -> Result<Complex<R>> {
    let n = check_square(x, NAIVE_LIMIT)?;
    fn rec<R: Real>(x: &CMatrix<R>, row: usize, used: &mut [bool], acc: Complex<R>, out: &mut Complex<R>) {
        let n = used.len();
        if row == n {
            *out += acc;
            return;
        }
        for c in 0..n {
            if !used[c] {
                used[c] = true;
                rec(x, row + 1, used, acc * x[(row, c)], out);
                used[c] = false;
            }
        }
    }
    let mut out = Complex::zero();
    rec(x, 0, &mut vec![false; n], Complex::one(), &mut out);
    Ok(out)
}

/// i.i.d. circularly symmetric complex Gaussian entries with the given variance.
pub fn gaussian_matrix<R: Real>(n: usize, variance: f64, rng: &mut SeededRng) -> CMatrix<R> {
    let s = (variance / 2.0).sqrt();
    CMatrix::from_fn(n, n, |_, _| Complex::from_f64(s * rng.normal(), s * rng.normal()))
}

pub fn all_ones<R: Real>(n: usize) -> CMatrix<R> {
    CMatrix::from_fn(n, n, |_, _| Complex::one())
}

/// `(1-θ) X1 + θ X0`.
pub fn path_matrix<R: Real>(x1: &CMatrix<R>, x0: &CMatrix<R>, theta: R) -> CMatrix<R> {
    x1.scale_real(R::one() - theta).add(&x0.scale_real(theta))
}

/// Photon and mode counts, `m = ceil(n^c)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BosonConfig {
    pub photons: usize,
    pub exponent: f64,
}

impl BosonConfig {
    pub fn new(photons: usize, exponent: f64) -> Result<Self> {
        if photons == 0 || !(exponent > 2.0) {
            return Err(Error::InvalidInput(format!("need n >= 1 and c > 2 (got {photons}, {exponent})")));
        }
        Ok(BosonConfig { photons, exponent })
    }

    pub fn modes(&self) -> usize {
        (self.photons as f64).powf(self.exponent).ceil() as usize
    }

    /// `|Per X|^2 / m^n`.
    pub fn output_probability(&self, per_abs2: f64) -> f64 {
        per_abs2 / (self.modes() as f64).powi(self.photons as i32)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PermanentReductionConfig {
    pub delta_end: f64,
    /// Defaults to `100 d^2` with `d = 2n`.
    pub grid_size: Option<usize>,
    pub search: SearchConfig,
}

impl Default for PermanentReductionConfig {
    fn default() -> Self {
        PermanentReductionConfig { delta_end: 0.3, grid_size: None, search: SearchConfig::default() }
    }
}

/// Grid values reported next to the reduction result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "R: Real", deserialize = "R: Real"))]
pub struct PermanentReduction<R: Real> {
    pub result: ReductionResult<R>,
    pub thetas: Vec<R>,
    pub values: Vec<R>,
    pub corrupted: Vec<bool>,
}

/// Recovers `|Per X0|^2` from oracle answers for `|Per X(θ)|^2` on `[0, Δ]`;
/// the squared permanent has degree `2n` in `θ`.
pub fn permanent_reduce<R: Real>(
    x0: &CMatrix<R>,
    x1: &CMatrix<R>,
    oracle: &AverageCaseOracle<CMatrix<R>, R>,
    cfg: &PermanentReductionConfig,
    rng: &SeededRng,
) -> Result<PermanentReduction<R>> {
    let n = check_square(x0, RYSER_LIMIT)?;
    if x1.rows() != n || x1.cols() != n {
        return Err(Error::InvalidInput("X1 and X0 differ in shape".into()));
    }
    if x0.data().iter().any(|z| z.im != R::zero() || (z.re != R::zero() && z.re != R::one())) {
        return Err(Error::InvalidInput("X0 must have 0/1 entries".into()));
    }
    let d = 2 * n;
    let count = cfg.grid_size.unwrap_or(100 * d * d);
    let grid = equispaced_grid(R::from_f64(cfg.delta_end), count);
    let answers: Vec<_> =
        grid.par_iter().enumerate().map(|(i, &t)| oracle.query(i, t, &path_matrix(x1, x0, t))).collect();
    let values: Vec<R> = answers.iter().map(|a| a.value).collect();
    let ds = DataSet::new(R::from_f64(cfg.delta_end), values.clone(), oracle.delta, oracle.eta)?;
    let result = robust_extrapolate(&ds, d, 1.0, &cfg.search, rng)?;
    Ok(PermanentReduction { result, thetas: grid, values, corrupted: answers.iter().map(|a| a.corrupted).collect() })
}

/// `|Per X(θ)|^2 + t |Per((1-θ) X1 + θ J)|^2` with `J` the all-ones matrix.
pub fn barrier_polynomial<R: Real>(x1: &CMatrix<R>, x0: &CMatrix<R>, t: R, theta: R) -> Result<R> {
    let n = check_square(x1, BARRIER_LIMIT)?;
    let main = permanent_ryser(&path_matrix(x1, x0, theta))?.norm_sqr();
    let shadow = permanent_ryser(&path_matrix(x1, &all_ones(n), theta))?.norm_sqr();
    Ok(main + t * shadow)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierRow {
    pub theta: f64,
    pub mean_deviation: f64,
    pub stderr: f64,
    pub max_deviation: f64,
}

/// Deviation `t |Per((1-θ) X1 + θ J)|^2` of the barrier polynomial from the true
/// squared permanent: exactly `t (n!)^2` at θ = 1, averaged over Gaussian `X1` elsewhere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierReport {
    pub n: usize,
    pub t: f64,
    pub samples: usize,
    pub worst_case_deviation: f64,
    pub rows: Vec<BarrierRow>,
}

pub fn barrier_report(n: usize, t: f64, thetas: &[f64], samples: usize, rng: &SeededRng) -> Result<BarrierReport> {
    if n == 0 || n > BARRIER_LIMIT {
        return Err(Error::TooLarge { size: n, limit: BARRIER_LIMIT });
    }
    if samples < 2 {
        return Err(Error::InvalidInput("need at least two samples".into()));
    }
    let ones = all_ones::<f64>(n);
    let worst_case_deviation = t * permanent_ryser(&ones)?.norm_sqr();
    let x1s: Vec<CMatrix<f64>> = (0..samples).map(|s| gaussian_matrix(n, 1.0, &mut rng.derive(s as u64))).collect();
    let rows = thetas
        .iter()
        .map(|&theta| {
            let devs = x1s
                .par_iter()
                .map(|x1| Ok(t * permanent_ryser(&path_matrix(x1, &ones, theta))?.norm_sqr()))
                .collect::<Result<Vec<f64>>>()?;
            let m = devs.len() as f64;
            let mean = devs.iter().sum::<f64>() / m;
            let var = devs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
            let max = devs.iter().fold(0.0f64, |a, b| a.max(*b));
            Ok(BarrierRow { theta, mean_deviation: mean, stderr: (var / m).sqrt(), max_deviation: max })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BarrierReport { n, t, samples, worst_case_deviation, rows })
}

/// Matrix JSON: row-major list of `[re, im]` rows.
pub fn matrix_to_json(x: &CMatrix<f64>) -> serde_json::Value {
    let rows: Vec<Vec<[f64; 2]>> =
        (0..x.rows()).map(|i| (0..x.cols()).map(|j| [x[(i, j)].re, x[(i, j)].im]).collect()).collect();
    serde_json::json!(rows)
}

pub fn matrix_from_json(v: &serde_json::Value) -> Result<CMatrix<f64>> {
    let rows: Vec<Vec<[f64; 2]>> = serde_json::from_value(v.clone())?;
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidInput("matrix rows must all have length n".into()));
    }
    let data = rows.into_iter().flatten().map(|[re, im]| Complex::new(re, im)).collect();
    CMatrix::from_vec(n, n, data)
}

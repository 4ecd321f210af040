//! End-to-end reductions: pad, perturb, query a corrupted oracle along the
//! family, multiply by `Q(θ)`, robustly extrapolate to `θ = 1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cayley::{EigenMargin, TransformKind};
use crate::circuits::{one_time_pad, Circuit, PerturbedFamily};
use crate::error::{Error, Result};
use crate::interp::{equispaced_grid, rescaled_extrapolate, robust_extrapolate, DataSet, ReductionResult, SearchConfig};
use crate::numerics::{chebyshev_t, PrecisionMode, Real, SeededRng};
use crate::simulator::{noisy_output_prob, output_prob, NoiseModel};

/// Child streams of the master seed.
pub const PAD_STREAM: u64 = 0;
pub const SEARCH_STREAM: u64 = 1;
pub const ORACLE_STREAM: u64 = 2;

/// What the oracle's honest answers are drawn from.
#[derive(Clone, Debug, PartialEq)]
pub enum TruthSource {
    ExactSimulator,
    NoisySimulator(NoiseModel),
    External,
}

/// How corrupted points are rewritten.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AdversaryKind {
    /// `truth + shift`.
    Offset { shift: f64 },
    /// Uniform in `[0, 1]`.
    RandomUnit,
    /// `truth + amplitude · T_degree(2θ/Δ - 1)`: a rival polynomial that stays
    /// within `amplitude` on the grid and separates fast beyond it.
    Chebyshev { amplitude: f64, degree: usize, delta_end: f64 },
}

/// Adversary as configured, before the degree and grid are known.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AdversarySpec {
    Offset { shift: f64 },
    RandomUnit,
    Chebyshev { amplitude: f64 },
}

impl AdversarySpec {
    pub fn resolve(self, degree: usize, delta_end: f64) -> AdversaryKind {
        match self {
            AdversarySpec::Offset { shift } => AdversaryKind::Offset { shift },
            AdversarySpec::RandomUnit => AdversaryKind::RandomUnit,
            AdversarySpec::Chebyshev { amplitude } => AdversaryKind::Chebyshev { amplitude, degree, delta_end },
        }
    }
}

impl std::str::FromStr for AdversarySpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "offset" => Ok(AdversarySpec::Offset { shift: 10.0 }),
            "random-unit" | "random" => Ok(AdversarySpec::RandomUnit),
            "chebyshev" => Ok(AdversarySpec::Chebyshev { amplitude: 1e-3 }),
            _ => Err(Error::InvalidInput(format!("unknown adversary '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleAnswer<R> {
    pub value: R,
    pub corrupted: bool,
    /// The underlying function failed; `value` is zero.
    pub failed: bool,
}

type TruthFn<I, R> = dyn Fn(&I) -> Result<R> + Send + Sync;

/// A truth function wrapped with seeded corruption and bounded additive noise.
/// Whether query `i` is corrupted, and its noise, depend only on `(seed, i)`.
pub struct AverageCaseOracle<I: ?Sized, R: Real> {
    truth: Box<TruthFn<I, R>>,
    source: TruthSource,
    pub eta: f64,
    pub delta: f64,
    pub kind: AdversaryKind,
    rng: SeededRng,
}

impl<I: ?Sized, R: Real> AverageCaseOracle<I, R> {
    pub fn source(&self) -> &TruthSource {
        &self.source
    }

    pub fn is_corrupted(&self, index: usize) -> bool {
        self.rng.derive(index as u64).uniform() < self.eta
    }

    pub fn query(&self, index: usize, theta: R, input: &I) -> OracleAnswer<R> {
        let mut r = self.rng.derive(index as u64);
        let corrupted = r.uniform() < self.eta;
        let u = r.uniform_in(-1.0, 1.0);
        let w = r.uniform();
        let truth = match (self.truth)(input) {
            Ok(t) if t.is_finite() => t,
            _ => return OracleAnswer { value: R::zero(), corrupted, failed: true },
        };
        let value = if !corrupted {
            truth + R::from_f64(self.delta * u)
        } else {
            match self.kind {
                AdversaryKind::Offset { shift } => truth + R::from_f64(shift),
                AdversaryKind::RandomUnit => R::from_f64(w),
                AdversaryKind::Chebyshev { amplitude, degree, delta_end } => {
                    let t = theta.mul_f64(2.0) / R::from_f64(delta_end) - R::one();
                    truth + R::from_f64(amplitude) * chebyshev_t(degree, t)
                }
            }
        };
        OracleAnswer { value, corrupted, failed: false }
    }
}

fn check_eta(eta: f64, delta: f64) -> Result<()> {
    if !(0.0..0.25).contains(&eta) {
        return Err(Error::InvalidInput(format!("corruption fraction {eta} outside [0, 1/4)")));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidInput(format!("oracle imprecision {delta} must be finite and nonnegative")));
    }
    Ok(())
}

pub fn make_adversarial_oracle<I: ?Sized, R: Real>(
    truth_fn: impl Fn(&I) -> Result<R> + Send + Sync + 'static,
    eta: f64,
    delta: f64,
    kind: AdversaryKind,
    rng: SeededRng,
) -> Result<AverageCaseOracle<I, R>> {
    check_eta(eta, delta)?;
    Ok(AverageCaseOracle { truth: Box::new(truth_fn), source: TruthSource::External, eta, delta, kind, rng })
}

/// Oracle over circuits backed by the statevector simulator.
pub fn exact_circuit_oracle<R: Real>(eta: f64, delta: f64, kind: AdversaryKind, rng: SeededRng) -> Result<AverageCaseOracle<Circuit<R>, R>> {
    let mut o = make_adversarial_oracle(|c: &Circuit<R>| output_prob(c), eta, delta, kind, rng)?;
    o.source = TruthSource::ExactSimulator;
    Ok(o)
}

/// Oracle over circuits backed by the density-matrix simulator with a fixed noise model.
pub fn noisy_circuit_oracle<R: Real>(
    noise: NoiseModel,
    eta: f64,
    delta: f64,
    kind: AdversaryKind,
    rng: SeededRng,
) -> Result<AverageCaseOracle<Circuit<R>, R>> {
    let n2 = noise.clone();
    let mut o = make_adversarial_oracle(move |c: &Circuit<R>| noisy_output_prob(c, &n2), eta, delta, kind, rng)?;
    o.source = TruthSource::NoisySimulator(noise);
    Ok(o)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReductionConfig {
    /// Grid endpoint `Δ`.
    pub delta_end: f64,
    /// Defaults to `100 d^2`.
    pub grid_size: Option<usize>,
    /// Oracle imprecision on honest points.
    pub delta: f64,
    pub eta: f64,
    pub adversary: AdversarySpec,
    pub margin: f64,
    pub precision: PrecisionMode,
    pub transform: TransformKind,
    /// Power `k` of the substitution `θ = x^k`; 1 disables it.
    pub rescale: usize,
    pub search: SearchConfig,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        ReductionConfig {
            delta_end: 0.5,
            grid_size: None,
            delta: 1e-30,
            eta: 0.01,
            adversary: AdversarySpec::Offset { shift: 10.0 },
            margin: 0.1,
            precision: PrecisionMode::DoubleDouble,
            transform: TransformKind::Cayley,
            rescale: 1,
            search: SearchConfig::default(),
        }
    }
}

impl ReductionConfig {
    pub fn grid_size(&self, degree: usize) -> usize {
        self.grid_size.unwrap_or(100 * degree.max(1) * degree.max(1))
    }

    pub fn validate(&self, degree: usize) -> Result<()> {
        if !(self.delta_end > 0.0 && self.delta_end < 1.0) {
            return Err(Error::InvalidInput(format!("grid endpoint {} outside (0,1)", self.delta_end)));
        }
        check_eta(self.eta, self.delta)?;
        if self.grid_size(degree) < degree + 2 {
            return Err(Error::InvalidInput(format!(
                "grid of {} points is too small for degree {degree}",
                self.grid_size(degree)
            )));
        }
        if self.rescale == 0 {
            return Err(Error::InvalidInput("rescale must be at least 1".into()));
        }
        EigenMargin::new(self.margin)?;
        self.transform.validate()
    }

    pub fn oracle_kind(&self, degree: usize) -> AdversaryKind {
        self.adversary.resolve(degree, self.delta_end)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "R: Real", deserialize = "R: Real"))]
pub struct GridRow<R: Real> {
    pub theta: R,
    pub oracle_value: R,
    pub q: R,
    pub y: R,
    pub corrupted: bool,
    pub failed: bool,
    /// Truncation estimate of the Taylor family at this point (zero for Cayley).
    pub truncation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "R: Real", deserialize = "R: Real"))]
pub struct PipelineOutcome<R: Real> {
    pub result: ReductionResult<R>,
    pub rows: Vec<GridRow<R>>,
    /// `max_grid Q(θ)`.
    pub k: R,
    pub degree: usize,
    pub transform: TransformKind,
    pub resamples: Vec<usize>,
}

impl<R: Real> PipelineOutcome<R> {
    pub fn estimate(&self) -> R {
        self.result.estimate
    }
    pub fn a_priori_bound(&self) -> f64 {
        self.result.a_priori_bound
    }
    pub fn denominators(&self) -> Vec<R> {
        self.rows.iter().map(|r| r.q).collect()
    }
}

fn run<R: Real>(
    c0: &Circuit<R>,
    oracle: &AverageCaseOracle<Circuit<R>, R>,
    cfg: &ReductionConfig,
    rng: &SeededRng,
) -> Result<PipelineOutcome<R>> {
    let margin = EigenMargin::new(cfg.margin)?;
    cfg.transform.validate()?;
    let pad = one_time_pad(c0, &rng.derive(PAD_STREAM), &margin)?;
    let resamples = pad.resamples.clone();
    let family = PerturbedFamily::new(c0.clone(), pad, cfg.transform)?;
    let degree = family.numerator_degree();
    cfg.validate(degree)?;
    let de = R::from_f64(cfg.delta_end);
    let grid = equispaced_grid(de, cfg.grid_size(degree));
    let rows: Vec<GridRow<R>> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &theta)| {
            let q = family.denominator(theta);
            let truncation = family.truncation_estimate(theta);
            let ans = match family.member(theta) {
                Ok(c) => oracle.query(i, theta, &c),
                Err(_) => OracleAnswer { value: R::zero(), corrupted: oracle.is_corrupted(i), failed: true },
            };
            let y = if ans.failed { R::zero() } else { ans.value * q };
            GridRow { theta, oracle_value: ans.value, q, y, corrupted: ans.corrupted, failed: ans.failed, truncation }
        })
        .collect();
    let k = rows.iter().map(|r| r.q).fold(R::zero(), R::max);
    let ds = DataSet::new(de, rows.iter().map(|r| r.y).collect(), oracle.delta * k.to_f64(), oracle.eta)?
        .with_corruption_flags(rows.iter().map(|r| r.corrupted || r.failed).collect())?;
    let srng = rng.derive(SEARCH_STREAM);
    let result = if cfg.rescale == 1 {
        robust_extrapolate(&ds, degree, 1.0, &cfg.search, &srng)?
    } else {
        rescaled_extrapolate(&ds, degree, cfg.rescale, &cfg.search, &srng)?
    };
    Ok(PipelineOutcome { result, rows, k, degree, transform: cfg.transform, resamples })
}

/// Estimates `Pr[0^n](C0)` from a noiseless average-case oracle.
pub fn reduce<R: Real>(
    c0: &Circuit<R>,
    oracle: &AverageCaseOracle<Circuit<R>, R>,
    cfg: &ReductionConfig,
    rng: &SeededRng,
) -> Result<PipelineOutcome<R>> {
    if let TruthSource::NoisySimulator(_) = oracle.source {
        return Err(Error::InvalidInput("noisy oracle passed to the noiseless reduction".into()));
    }
    run(c0, oracle, cfg, rng)
}

/// Estimates `Pr[0^n](C0, N)`; the oracle must simulate exactly the noise model `N`.
pub fn reduce_noisy<R: Real>(
    c0: &Circuit<R>,
    noise: &NoiseModel,
    oracle: &AverageCaseOracle<Circuit<R>, R>,
    cfg: &ReductionConfig,
    rng: &SeededRng,
) -> Result<PipelineOutcome<R>> {
    if !noise.fits(c0.arch()) {
        return Err(Error::InvalidInput("noise model does not fit the circuit architecture".into()));
    }
    match &oracle.source {
        TruthSource::NoisySimulator(m) if m == noise => {}
        TruthSource::External => {}
        _ => return Err(Error::InvalidInput("oracle does not simulate the given noise model".into())),
    }
    run(c0, oracle, cfg, rng)
}

/// Distance of the noisy target from the uniform value, next to the
/// reduction's error and bound when a reduction was run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformityGap {
    pub n: usize,
    pub probability: f64,
    pub uniform: f64,
    pub gap: f64,
    pub achieved_error: Option<f64>,
    pub a_priori_bound: Option<f64>,
}

pub fn uniformity_gap_report<R: Real>(
    c0: &Circuit<R>,
    noise: &NoiseModel,
    reduction: Option<&PipelineOutcome<R>>,
) -> Result<UniformityGap> {
    let n = c0.arch().n();
    let p = noisy_output_prob(c0, noise)?;
    let uniform = R::one() / R::from_usize(1 << n);
    Ok(UniformityGap {
        n,
        probability: p.to_f64(),
        uniform: uniform.to_f64(),
        gap: (p - uniform).abs().to_f64(),
        achieved_error: reduction.map(|o| (o.estimate() - p).abs().to_f64()),
        a_priori_bound: reduction.map(|o| o.a_priori_bound()),
    })
}

/// Threshold `2^{-2 n0 - 1}` separating `Pr = 0` from `Pr >= 2^{-2 n0}` for
/// Fourier-sampling targets.
pub fn fourier_threshold(n0: usize) -> f64 {
    2f64.powi(-2 * n0 as i32 - 1)
}

/// Decides `Pr[0^n] = 0` from an estimate; meaningful when the bound is below the threshold.
pub fn fourier_decide_zero(estimate: f64, n0: usize) -> bool {
    estimate.abs() < fourier_threshold(n0)
}

/// A real as JSON: a number in native mode, a decimal string otherwise.
pub fn real_json<R: Real>(x: R) -> Value {
    if R::MODE == PrecisionMode::Native && x.is_finite() {
        json!(x.to_f64())
    } else {
        json!(x.to_decimal(R::MODE.print_digits()))
    }
}

/// Report document `{config, seed, grid, estimate, truth, achieved_error, a_priori_bound, certificate_size, ...}`.
pub fn report_json<R: Real>(cfg: &ReductionConfig, seed: u64, outcome: &PipelineOutcome<R>, truth: Option<R>) -> Value {
    let grid: Vec<Value> = outcome
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![real_json(r.theta), real_json(r.oracle_value), real_json(r.q), real_json(r.y), json!(r.corrupted || r.failed)];
            if let TransformKind::TruncatedTaylor { .. } = outcome.transform {
                row.push(json!(r.truncation));
            }
            Value::Array(row)
        })
        .collect();
    let mut doc = json!({
        "config": cfg,
        "seed": seed,
        "degree": outcome.degree,
        "k": real_json(outcome.k),
        "grid": grid,
        "estimate": real_json(outcome.estimate()),
        "truth": truth.map(real_json),
        "achieved_error": truth.map(|t| (outcome.estimate() - t).abs().to_f64()),
        "a_priori_bound": outcome.a_priori_bound(),
        "uniform_bound": outcome.result.uniform_bound,
        "growth_constant": outcome.result.growth_constant,
        "certificate_size": outcome.result.certificate.size(),
        "certificate_required": outcome.result.certificate.required,
        "certificate_max_residual": outcome.result.achieved_residual,
        "search_stage": outcome.result.stage,
        "pad_resamples": outcome.resamples,
    });
    if let TransformKind::TruncatedTaylor { .. } = outcome.transform {
        doc["note"] = json!("truncated Taylor members are not unitary; grid rows carry the truncation estimate");
    }
    doc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::Architecture;
    use crate::numerics::Dd;
    use crate::simulator::{depolarizing_model, NoiseArity};

    #[test]
    fn oracle_is_consistent_and_corrupts_at_rate() {
        let o = make_adversarial_oracle(|x: &f64| Ok(*x), 0.2, 0.0, AdversaryKind::RandomUnit, SeededRng::new(1, 0)).unwrap();
        let a = o.query(17, 0.0, &0.5);
        let b = o.query(17, 0.0, &0.5);
        assert_eq!(a, b);
        let n = 10_000;
        let c = (0..n).filter(|&i| o.query(i, 0.0, &0.5).corrupted).count() as f64 / n as f64;
        assert!((c - 0.2).abs() < 3.0 * (0.2 * 0.8 / n as f64).sqrt());
        let clean = make_adversarial_oracle(|x: &f64| Ok(*x), 0.0, 1e-3, AdversaryKind::RandomUnit, SeededRng::new(1, 0)).unwrap();
        for i in 0..100 {
            assert!((clean.query(i, 0.0, &0.5).value - 0.5).abs() <= 1e-3);
        }
        assert!(make_adversarial_oracle(|x: &f64| Ok(*x), 0.3, 0.0, AdversaryKind::RandomUnit, SeededRng::new(1, 0)).is_err());
    }

    #[test]
    fn small_exact_reduction() {
        let arch = Architecture::brickwork(2, 1).unwrap();
        let c0 = Circuit::<Dd>::haar_random(arch, &SeededRng::new(3, 0));
        let cfg = ReductionConfig { eta: 0.0, grid_size: Some(400), ..Default::default() };
        let oracle = exact_circuit_oracle::<Dd>(0.0, 0.0, cfg.oracle_kind(8), SeededRng::new(3, 2)).unwrap();
        let out = reduce(&c0, &oracle, &cfg, &SeededRng::new(3, 1)).unwrap();
        let truth = output_prob(&c0).unwrap();
        assert!((out.estimate() - truth).abs().to_f64() < 1e-8);
        let doc = report_json(&cfg, 3, &out, Some(truth));
        assert_eq!(doc["grid"].as_array().unwrap().len(), 400);
    }

    #[test]
    fn noisy_reduction_checks_its_oracle() {
        let arch = Architecture::brickwork(2, 1).unwrap();
        let c0 = Circuit::<Dd>::haar_random(arch.clone(), &SeededRng::new(4, 0));
        let noise = depolarizing_model(&arch, 0.1, NoiseArity::SlotPauli).unwrap();
        let other = depolarizing_model(&arch, 0.2, NoiseArity::SlotPauli).unwrap();
        let cfg = ReductionConfig { eta: 0.0, grid_size: Some(300), ..Default::default() };
        let kind = cfg.oracle_kind(8);
        let wrong = noisy_circuit_oracle::<Dd>(other, 0.0, 0.0, kind, SeededRng::new(4, 2)).unwrap();
        assert!(reduce_noisy(&c0, &noise, &wrong, &cfg, &SeededRng::new(4, 1)).is_err());
        assert!(reduce(&c0, &wrong, &cfg, &SeededRng::new(4, 1)).is_err());
        let good = noisy_circuit_oracle::<Dd>(noise.clone(), 0.0, 0.0, kind, SeededRng::new(4, 2)).unwrap();
        let out = reduce_noisy(&c0, &noise, &good, &cfg, &SeededRng::new(4, 1)).unwrap();
        let gap = uniformity_gap_report(&c0, &noise, Some(&out)).unwrap();
        assert!(gap.achieved_error.unwrap() < 1e-8);
    }

    #[test]
    fn config_validation() {
        let cfg: ReductionConfig = serde_json::from_str(r#"{"eta": 0.1, "adversary": {"kind": "chebyshev", "amplitude": 0.001}}"#).unwrap();
        assert_eq!(cfg.oracle_kind(16), AdversaryKind::Chebyshev { amplitude: 0.001, degree: 16, delta_end: 0.5 });
        assert!(serde_json::from_str::<ReductionConfig>(r#"{"etta": 0.1}"#).is_err());
        let bad = ReductionConfig { grid_size: Some(10), ..Default::default() };
        assert!(bad.validate(16).is_err());
        assert!(ReductionConfig { delta_end: 1.0, ..Default::default() }.validate(4).is_err());
        assert!(fourier_decide_zero(1e-9, 2));
        assert!(!fourier_decide_zero(0.0625, 2));
    }
}

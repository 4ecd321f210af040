//! The Cayley deformation of a unitary towards the identity, its truncated
//! Taylor counterpart, and eigenphase diagnostics.
//!
//! For an eigenvalue `e^{i phi}` with `t = tan(phi/2)` the Cayley factor at
//! parameter `theta` is `(1 + i a t) / (1 - i a t)` with `a = 1 - theta`, whose
//! phase is `f_theta(phi) = 2 atan(a tan(phi/2))`. The factor is evaluated from
//! the eigenvalue itself via `t = sin(phi) / (1 + cos(phi))`, so no
//! transcendental function is needed.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    default_eigen_tolerance, haar_unitary, unitary_eigendecomposition, CMatrix, Complex, Real, SeededRng,
    SpectralDecomposition, UnitaryMatrix,
};

/// Phases closer than this to `±pi` are treated as singular.
pub const SINGULAR_PHASE_GUARD: f64 = 1e-9;

/// Default order of the truncated Taylor variant.
pub const DEFAULT_TAYLOR_ORDER: usize = 12;

/// Required distance of every eigenphase from `±pi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenMargin {
    pub margin: f64,
}

impl EigenMargin {
    pub fn new(margin: f64) -> Result<Self> {
        if !(margin > 0.0 && margin < std::f64::consts::PI) {
            return Err(Error::InvalidInput(format!("eigenphase margin {margin} outside (0, pi)")));
        }
        Ok(EigenMargin { margin })
    }

    /// Union-bound lower estimate `1 - N*margin/pi` of the probability that a
    /// Haar unitary of size `dim` meets the margin.
    pub fn good_probability_lower_bound(&self, dim: usize) -> f64 {
        1.0 - dim as f64 * self.margin / std::f64::consts::PI
    }
}

impl Default for EigenMargin {
    fn default() -> Self {
        EigenMargin { margin: 0.1 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TransformKind {
    #[default]
    Cayley,
    TruncatedTaylor { order: usize },
}

impl TransformKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TransformKind::TruncatedTaylor { order: 0 } => {
                Err(Error::InvalidInput("truncated Taylor order must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }
}


/// `f_theta(phi) = 2 atan((1 - theta) tan(phi / 2))`.
pub fn eigenphase_transform<R: Real>(phi: R, theta: R) -> Result<R> {
    if phi.abs().to_f64() >= std::f64::consts::PI {
        return Err(Error::SingularPhase { phase: phi.to_f64() });
    }
    let half = phi.mul_f64(0.5);
    let (s, c) = half.sin_cos();
    // cos(phi/2) > 0 on (-pi, pi), so atan2 stays on the principal branch
    Ok(((R::one() - theta) * s).atan2(c).mul_f64(2.0))
}

/// `tan(phi/2)` of a unit-modulus eigenvalue, computed as `sin / (1 + cos)`.
pub fn half_tangent<R: Real>(lambda: Complex<R>) -> R {
    lambda.im / (R::one() + lambda.re)
}

/// Cayley factor `(1 + i a t)/(1 - i a t)` for the eigenvalue `lambda`.
pub fn cayley_factor<R: Real>(lambda: Complex<R>, theta: R) -> Complex<R> {
    let at = (R::one() - theta) * half_tangent(lambda);
    let at2 = at * at;
    let den = R::one() + at2;
    Complex::new((R::one() - at2) / den, at.mul_f64(2.0) / den)
}

fn check_phases<R: Real>(spec: &SpectralDecomposition<R>) -> Result<()> {
    let limit = std::f64::consts::PI - SINGULAR_PHASE_GUARD;
    for p in &spec.phases {
        if p.abs().to_f64() > limit {
            return Err(Error::SingularPhase { phase: p.to_f64() });
        }
    }
    Ok(())
}

/// `H(theta)` from a precomputed spectrum of `H`.
pub fn cayley_from_spectrum<R: Real>(spec: &SpectralDecomposition<R>, theta: R) -> Result<UnitaryMatrix<R>> {
    check_phases(spec)?;
    if theta == R::one() {
        return Ok(UnitaryMatrix::identity(spec.dim()));
    }
    Ok(UnitaryMatrix::from_trusted(spec.apply(|_, l| cayley_factor(l, theta))))
}

pub fn cayley_transform<R: Real>(u: &UnitaryMatrix<R>, theta: R) -> Result<UnitaryMatrix<R>> {
    let spec = unitary_eigendecomposition(u, default_eigen_tolerance::<R>(u.dim()))?;
    cayley_from_spectrum(&spec, theta)
}

/// The resolvent form `(alpha I + (2 - alpha) H)((2 - alpha) I + alpha H)^{-1}`
/// with `alpha = theta`; kept as an independent cross-check of the spectral path.
pub fn cayley_resolvent<R: Real>(u: &UnitaryMatrix<R>, theta: R) -> Result<CMatrix<R>> {
    let n = u.dim();
    let h = u.matrix();
    let id = CMatrix::identity(n);
    let a = Complex::from_real(theta);
    let b = Complex::from_real(R::from_f64(2.0) - theta);
    let num = id.scale(a).add(&h.scale(b));
    let den = id.scale(b).add(&h.scale(a));
    // num and den commute, so right division equals den^{-1} num
    den.solve(&num)
}

/// Result of the truncated Taylor deformation (generally not unitary).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "R: Real", deserialize = "R: Real"))]
pub struct TaylorResult<R: Real> {
    pub matrix: CMatrix<R>,
    /// `(theta * max|phi|)^(K+1) / (K+1)!`.
    pub truncation_estimate: f64,
}

/// Per-eigenvalue factor `lambda * sum_{k<=K} (-i theta phi)^k / k!`.
pub fn taylor_factor<R: Real>(lambda: Complex<R>, phi: R, theta: R, order: usize) -> Complex<R> {
    let z = Complex::new(R::zero(), -(theta * phi));
    let mut term = Complex::one();
    let mut sum = Complex::one();
    for k in 1..=order {
        term = (term * z).scale(R::one() / R::from_usize(k));
        sum += term;
    }
    lambda * sum
}

pub fn taylor_truncation_estimate(theta: f64, max_phase: f64, order: usize) -> f64 {
    let x = theta.abs() * max_phase.abs();
    let mut v = 1.0;
    for k in 1..=order + 1 {
        v *= x / k as f64;
    }
    v
}

pub fn taylor_from_spectrum<R: Real>(spec: &SpectralDecomposition<R>, theta: R, order: usize) -> Result<TaylorResult<R>> {
    check_phases(spec)?;
    let matrix = spec.apply(|j, l| taylor_factor(l, spec.phases[j], theta, order));
    let max_phase = spec.phases.iter().fold(0.0f64, |m, p| m.max(p.to_f64().abs()));
    Ok(TaylorResult { matrix, truncation_estimate: taylor_truncation_estimate(theta.to_f64(), max_phase, order) })
}

pub fn truncated_taylor_transform<R: Real>(u: &UnitaryMatrix<R>, theta: R, order: usize) -> Result<TaylorResult<R>> {
    TransformKind::TruncatedTaylor { order }.validate()?;
    let spec = unitary_eigendecomposition(u, default_eigen_tolerance::<R>(u.dim()))?;
    taylor_from_spectrum(&spec, theta, order)
}

/// Whether every phase lies in `[-pi + margin, pi - margin]`.
pub fn margin_good<R: Real>(phases: &[R], margin: &EigenMargin) -> bool {
    let limit = std::f64::consts::PI - margin.margin;
    phases.iter().all(|p| p.to_f64().abs() <= limit)
}

/// Histogram estimate of the total-variation distance between the eigenphase
/// distributions of `H(theta)` and `H`, for Haar `H`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TvEstimate {
    pub estimate: f64,
    pub stderr: f64,
    /// True when cells index the joint (sorted) phase vector, false for the pooled marginal.
    pub joint: bool,
}

/// Largest number of joint histogram cells before falling back to the pooled marginal.
const MAX_JOINT_CELLS: f64 = 1_048_576.0;

/// Estimates TV between the eigenphase laws of `H(theta)` and `H` for Haar `H`.
///
/// Both histograms are filled from the same Haar samples (the deformed phases
/// are `f_theta` of the undeformed ones), so the estimate carries no
/// independent-sample noise floor; at `theta = 0` it is exactly zero. Binning
/// can only lower TV, so the value is a lower estimate of the binned-out
/// quantity. The standard error follows from writing the estimate as a sample
/// mean of per-sample contributions with the cell signs held fixed.
pub fn eigenphase_tv_estimate(theta: f64, dim: usize, samples: usize, bins: usize, rng: &SeededRng) -> Result<TvEstimate> {
    if samples == 0 || bins == 0 || dim == 0 {
        return Err(Error::InvalidInput("samples, bins and dim must be positive".into()));
    }
    let joint = (bins as f64).powi(dim as i32) <= MAX_JOINT_CELLS;
    let cell_of = |phases: &[f64]| -> Vec<u64> {
        let bin = |p: f64| -> u64 {
            let b = ((p + std::f64::consts::PI) / (2.0 * std::f64::consts::PI) * bins as f64).floor();
            b.clamp(0.0, (bins - 1) as f64) as u64
        };
        if joint {
            vec![phases.iter().fold(0u64, |acc, p| acc * bins as u64 + bin(*p))]
        } else {
            phases.iter().map(|p| bin(*p)).collect()
        }
    };

    const CHUNK: usize = 1000;
    let chunks = samples.div_ceil(CHUNK);
    let pairs: Vec<(Vec<u64>, Vec<u64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<Vec<(Vec<u64>, Vec<u64>)>> {
            let mut r = rng.derive(c as u64);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut out = Vec::with_capacity(count);
            while out.len() < count {
                let u: UnitaryMatrix<f64> = haar_unitary(dim, &mut r);
                let spec = unitary_eigendecomposition(&u, 1e-10)?;
                if spec.phases.iter().any(|p| p.abs() >= std::f64::consts::PI - SINGULAR_PHASE_GUARD) {
                    continue;
                }
                let moved: Vec<f64> =
                    spec.phases.iter().map(|p| eigenphase_transform(*p, theta)).collect::<Result<_>>()?;
                out.push((cell_of(&spec.phases), cell_of(&moved)));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let weight = 1.0 / (pairs.len() as f64 * if joint { 1.0 } else { dim as f64 });
    let mut diff: HashMap<u64, f64> = HashMap::new();
    for (a, b) in &pairs {
        for c in a {
            *diff.entry(*c).or_insert(0.0) += weight;
        }
        for c in b {
            *diff.entry(*c).or_insert(0.0) -= weight;
        }
    }
    let estimate = 0.5 * diff.values().map(|v| v.abs()).sum::<f64>();
    let sign = |c: &u64| -> f64 {
        let v = diff.get(c).copied().unwrap_or(0.0);
        if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            0.0
        }
    };
    let per_sample_scale = if joint { 1.0 } else { 1.0 / dim as f64 };
    let z: Vec<f64> = pairs
        .iter()
        .map(|(a, b)| {
            0.5 * per_sample_scale * (a.iter().map(sign).sum::<f64>() - b.iter().map(sign).sum::<f64>())
        })
        .collect();
    let n = z.len() as f64;
    let mean = z.iter().sum::<f64>() / n;
    let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok(TvEstimate { estimate, stderr: (var / n).sqrt(), joint })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{Dd, C64};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn eigenphase_map_examples() {
        assert!((eigenphase_transform(1.3f64, 0.0).unwrap() - 1.3).abs() < 1e-15);
        assert_eq!(eigenphase_transform(2.0f64, 1.0).unwrap(), 0.0);
        assert!((eigenphase_transform(PI / 2.0, 0.5).unwrap() - 0.927_295_218_001_612_2).abs() < 1e-12);
        assert!(matches!(eigenphase_transform(PI, 0.3), Err(Error::SingularPhase { .. })));
        assert_eq!(eigenphase_transform(0.0f64, 0.7).unwrap(), 0.0);
    }

    #[test]
    fn factor_at_quarter_turn() {
        let f = cayley_factor(C64::new(0.0, 1.0), 0.5);
        assert!((f - C64::new(0.6, 0.8)).abs() < 1e-15);
        assert!((f.abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn endpoints_and_resolvent_agree() {
        let mut rng = SeededRng::new(1, 0);
        for _ in 0..20 {
            let u: UnitaryMatrix<f64> = haar_unitary(4, &mut rng);
            let h0 = cayley_transform(&u, 0.0).unwrap();
            assert!(h0.matrix().max_abs_diff(u.matrix()) < 1e-11);
            let h1 = cayley_transform(&u, 1.0).unwrap();
            assert!(h1.matrix().max_abs_diff(&CMatrix::identity(4)) < 1e-11);
            let h = cayley_transform(&u, 0.3).unwrap();
            assert!(h.matrix().unitarity_defect() < 1e-12);
            let r = cayley_resolvent(&u, 0.3).unwrap();
            assert!(h.matrix().max_abs_diff(&r) < 1e-10);
        }
    }

    #[test]
    fn transformed_phases_follow_the_map() {
        let mut rng = SeededRng::new(2, 0);
        let u: UnitaryMatrix<Dd> = haar_unitary(4, &mut rng);
        let theta = Dd::from_f64(0.37);
        let spec = unitary_eigendecomposition(&u, 1e-28).unwrap();
        let h = cayley_from_spectrum(&spec, theta).unwrap();
        let spec2 = unitary_eigendecomposition(&h, 1e-28).unwrap();
        let mut expected: Vec<f64> =
            spec.phases.iter().map(|p| eigenphase_transform(*p, theta).unwrap().to_f64()).collect();
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in spec2.phases.iter().zip(&expected) {
            assert!((a.to_f64() - b).abs() < 1e-11);
        }
    }

    #[test]
    fn conjugation_commutes() {
        let mut rng = SeededRng::new(3, 0);
        let v: UnitaryMatrix<f64> = haar_unitary(3, &mut rng);
        let lam = CMatrix::diagonal(&[C64::cis(0.4), C64::cis(-2.0), C64::cis(1.1)]);
        let u = UnitaryMatrix::new(v.matrix().matmul(&lam).matmul(&v.matrix().adjoint())).unwrap();
        let lhs = cayley_transform(&u, 0.6).unwrap();
        let inner = cayley_transform(&UnitaryMatrix::new(lam).unwrap(), 0.6).unwrap();
        let rhs = v.matrix().matmul(inner.matrix()).matmul(&v.matrix().adjoint());
        assert!(lhs.matrix().max_abs_diff(&rhs) < 1e-11);
    }

    #[test]
    fn taylor_variant() {
        let u = UnitaryMatrix::new(CMatrix::diagonal(&[C64::one(), C64::i()])).unwrap();
        let t0 = truncated_taylor_transform(&u, 0.0, 5).unwrap();
        assert!(t0.matrix.max_abs_diff(u.matrix()) < 1e-15);
        // spectral-side oracle for phases {0, pi/2}
        let t = truncated_taylor_transform(&u, 0.5, 3).unwrap();
        let x = -PI / 4.0;
        let series = C64::new(1.0 - x * x / 2.0, x - x * x * x / 6.0);
        assert!((t.matrix[(1, 1)] - C64::i() * series).abs() < 1e-12);
        assert!((t.matrix[(0, 0)] - C64::one()).abs() < 1e-15);
        // large order at theta = 1 approaches the identity within the estimate
        let mut rng = SeededRng::new(4, 0);
        let h: UnitaryMatrix<f64> = haar_unitary(3, &mut rng);
        let t = truncated_taylor_transform(&h, 1.0, 40).unwrap();
        let err = t.matrix.max_abs_diff(&CMatrix::identity(3));
        assert!(err <= t.truncation_estimate.max(1e-13) * 3.0, "{err} vs {}", t.truncation_estimate);
        assert!(truncated_taylor_transform(&h, 0.5, 0).is_err());
    }

    #[test]
    fn margin_examples() {
        let m = EigenMargin::new(0.1).unwrap();
        assert!(margin_good(&[0.0, 0.5], &m));
        assert!(!margin_good(&[PI - 0.05], &m));
        assert!(EigenMargin::new(0.0).is_err());
        assert!((m.good_probability_lower_bound(4) - (1.0 - 0.4 / PI)).abs() < 1e-15);
    }

    #[test]
    fn tv_endpoints() {
        let rng = SeededRng::new(5, 0);
        let zero = eigenphase_tv_estimate(0.0, 2, 2000, 20, &rng).unwrap();
        assert_eq!(zero.estimate, 0.0);
        let one = eigenphase_tv_estimate(1.0, 2, 2000, 20, &rng).unwrap();
        assert!(one.estimate >= 0.9);
    }

    proptest! {
        #[test]
        fn map_is_strictly_increasing(theta in 0.0f64..0.999, a in -3.1f64..3.1, b in -3.1f64..3.1) {
            prop_assume!((a - b).abs() > 1e-9);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(eigenphase_transform(lo, theta).unwrap() < eigenphase_transform(hi, theta).unwrap());
        }

        #[test]
        fn factor_has_unit_modulus(phi in -3.1f64..3.1, theta in 0.0f64..1.0) {
            let f = cayley_factor(C64::cis(phi), theta);
            prop_assert!((f.abs() - 1.0).abs() < 1e-14);
            prop_assert!((f.arg() - eigenphase_transform(phi, theta).unwrap()).abs() < 1e-12);
        }
    }
}

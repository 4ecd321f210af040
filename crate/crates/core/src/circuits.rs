//! Architectures, circuits, the one-time pad and the perturbed family `C(theta)`.
//!
//! Qubit 0 is the most significant bit of a basis index. Within a slot the
//! listed qubits map to gate-index bits in the same order.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cayley::{cayley_from_spectrum, taylor_from_spectrum, EigenMargin, TransformKind};
use crate::error::{Error, Result};
use crate::numerics::{
    default_eigen_tolerance, haar_unitary, unitary_eigendecomposition, CMatrix, Complex, Real, SeededRng,
    SpectralDecomposition, UnitaryMatrix,
};

/// Default number of Haar draws per slot before the pad gives up.
pub const DEFAULT_RESAMPLE_BUDGET: usize = 1000;

/// Qubit count plus an ordered list of gate slots.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    n: usize,
    slots: Vec<Vec<usize>>,
}

impl Architecture {
    pub fn new(n: usize, slots: Vec<Vec<usize>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("architecture needs at least one qubit".into()));
        }
        if slots.is_empty() {
            return Err(Error::InvalidInput("architecture needs at least one slot".into()));
        }
        for (i, s) in slots.iter().enumerate() {
            if s.is_empty() {
                return Err(Error::InvalidInput(format!("slot {i} is empty")));
            }
            for (k, q) in s.iter().enumerate() {
                if *q >= n {
                    return Err(Error::InvalidInput(format!("slot {i} uses qubit {q} but n = {n}")));
                }
                if s[..k].contains(q) {
                    return Err(Error::InvalidInput(format!("slot {i} repeats qubit {q}")));
                }
            }
        }
        Ok(Architecture { n, slots })
    }

    /// Alternating nearest-neighbour layers: odd layers pair `(2k, 2k+1)`,
    /// even layers pair `(2k+1, 2k+2)`.
    pub fn brickwork(n: usize, depth: usize) -> Result<Self> {
        if n < 2 || depth < 1 {
            return Err(Error::InvalidInput(format!("brickwork needs n >= 2 and depth >= 1 (got {n}, {depth})")));
        }
        let mut slots = Vec::new();
        for layer in 1..=depth {
            let start = if layer % 2 == 1 { 0 } else { 1 };
            let mut q = start;
            while q + 1 < n {
                slots.push(vec![q, q + 1]);
                q += 2;
            }
        }
        Architecture::new(n, slots)
    }

    /// `depth` layers of one gate acting on all qubits.
    pub fn global_layers(n: usize, depth: usize) -> Result<Self> {
        Architecture::new(n, vec![(0..n).collect(); depth])
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn m(&self) -> usize {
        self.slots.len()
    }
    pub fn slots(&self) -> &[Vec<usize>] {
        &self.slots
    }
    pub fn slot_dim(&self, i: usize) -> usize {
        1 << self.slots[i].len()
    }
    /// Degree of `Pr * Q` in theta: two per eigenphase of every slot gate.
    pub fn numerator_degree(&self) -> usize {
        (0..self.m()).map(|i| 2 * self.slot_dim(i)).sum()
    }
}

/// A gate assignment for every slot of an architecture.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit<R: Real> {
    arch: Architecture,
    gates: Vec<CMatrix<R>>,
    unitary: bool,
}

impl<R: Real> Circuit<R> {
    pub fn new(arch: Architecture, gates: Vec<UnitaryMatrix<R>>) -> Result<Self> {
        Self::check_dims(&arch, gates.iter().map(|g| g.dim()))?;
        Ok(Circuit { arch, gates: gates.into_iter().map(|g| g.into_matrix()).collect(), unitary: true })
    }

    /// Circuit whose gates need not be unitary (truncated Taylor members).
    pub fn new_general(arch: Architecture, gates: Vec<CMatrix<R>>) -> Result<Self> {
        Self::check_dims(&arch, gates.iter().map(|g| if g.is_square() { g.rows() } else { 0 }))?;
        Ok(Circuit { arch, gates, unitary: false })
    }

    fn check_dims(arch: &Architecture, dims: impl ExactSizeIterator<Item = usize>) -> Result<()> {
        if dims.len() != arch.m() {
            return Err(Error::InvalidInput(format!("{} gates for {} slots", dims.len(), arch.m())));
        }
        for (i, d) in dims.enumerate() {
            if d != arch.slot_dim(i) {
                return Err(Error::InvalidInput(format!(
                    "gate {i} has dimension {d}, slot needs {}",
                    arch.slot_dim(i)
                )));
            }
        }
        Ok(())
    }

    pub fn identity(arch: Architecture) -> Self {
        let gates = (0..arch.m()).map(|i| CMatrix::identity(arch.slot_dim(i))).collect();
        Circuit { arch, gates, unitary: true }
    }

    pub fn haar_random(arch: Architecture, rng: &SeededRng) -> Self {
        let gates = (0..arch.m())
            .map(|i| haar_unitary::<R>(arch.slot_dim(i), &mut rng.derive(i as u64)).into_matrix())
            .collect();
        Circuit { arch, gates, unitary: true }
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }
    pub fn gates(&self) -> &[CMatrix<R>] {
        &self.gates
    }
    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn to_f64(&self) -> Circuit<f64> {
        Circuit { arch: self.arch.clone(), gates: self.gates.iter().map(|g| g.to_f64()).collect(), unitary: self.unitary }
    }

    pub fn lift(c: &Circuit<f64>) -> Self {
        Circuit { arch: c.arch.clone(), gates: c.gates.iter().map(CMatrix::lift).collect(), unitary: c.unitary }
    }

    /// JSON document `{n, slots, gates}` with each gate a row-major list of
    /// `[re, im]` pairs. Extended precision entries are written as decimal strings.
    pub fn to_json(&self) -> Value {
        let entry = |x: R| -> Value {
            if R::MODE == crate::numerics::PrecisionMode::Native {
                json!(x.to_f64())
            } else {
                json!(x.to_decimal(40))
            }
        };
        let gates: Vec<Value> = self
            .gates
            .iter()
            .map(|g| Value::Array(g.data().iter().map(|z| json!([entry(z.re), entry(z.im)])).collect()))
            .collect();
        json!({ "n": self.arch.n, "slots": self.arch.slots, "gates": gates })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Doc {
            n: usize,
            slots: Vec<Vec<usize>>,
            gates: Vec<Vec<[Value; 2]>>,
        }
        let doc: Doc = serde_json::from_value(v.clone())?;
        let arch = Architecture::new(doc.n, doc.slots)?;
        let parse = |x: &Value| -> Result<R> {
            match x {
                Value::Number(num) => num
                    .as_f64()
                    .map(R::from_f64)
                    .ok_or_else(|| Error::Serialization("non-finite matrix entry".into())),
                Value::String(s) => {
                    R::parse_decimal(s).ok_or_else(|| Error::Serialization(format!("bad decimal '{s}'")))
                }
                _ => Err(Error::Serialization("matrix entry must be a number or string".into())),
            }
        };
        let mut gates = Vec::with_capacity(doc.gates.len());
        for (i, g) in doc.gates.iter().enumerate() {
            if i >= arch.m() {
                break;
            }
            let d = arch.slot_dim(i);
            let data = g.iter().map(|p| Ok(Complex::new(parse(&p[0])?, parse(&p[1])?))).collect::<Result<Vec<_>>>()?;
            let m = CMatrix::from_vec(d, d, data)?;
            gates.push(UnitaryMatrix::try_from(m)?);
        }
        Circuit::new(arch, gates)
    }
}

/// Per-slot Haar pads with cached spectra.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "R: Real", deserialize = "R: Real"))]
pub struct PadSeed<R: Real> {
    pub gates: Vec<UnitaryMatrix<R>>,
    pub spectra: Vec<SpectralDecomposition<R>>,
    /// Number of rejected draws per slot.
    pub resamples: Vec<usize>,
}

impl<R: Real> PadSeed<R> {
    /// Seed with a fixed gate list (spectra computed here), margin not enforced.
    pub fn from_gates(gates: Vec<UnitaryMatrix<R>>) -> Result<Self> {
        let spectra = gates
            .iter()
            .map(|g| unitary_eigendecomposition(g, default_eigen_tolerance::<R>(g.dim())))
            .collect::<Result<Vec<_>>>()?;
        let resamples = vec![0; gates.len()];
        Ok(PadSeed { gates, spectra, resamples })
    }

    /// Every `tan(phi/2)` across all pad gates, computed from the eigenvalues.
    pub fn half_tangents(&self) -> Vec<R> {
        self.spectra
            .iter()
            .flat_map(|s| s.eigenvalues.iter().map(|l| crate::cayley::half_tangent(*l)))
            .collect()
    }
}

pub fn one_time_pad<R: Real>(c0: &Circuit<R>, rng: &SeededRng, margin: &EigenMargin) -> Result<PadSeed<R>> {
    one_time_pad_with_budget(c0, rng, margin, DEFAULT_RESAMPLE_BUDGET)
}

/// Draws a Haar pad for every slot, redrawing until its spectrum meets `margin`.
/// Slot `i` uses the child stream `i` of `rng`.
pub fn one_time_pad_with_budget<R: Real>(
    c0: &Circuit<R>,
    rng: &SeededRng,
    margin: &EigenMargin,
    budget: usize,
) -> Result<PadSeed<R>> {
    let arch = c0.arch();
    let mut gates = Vec::with_capacity(arch.m());
    let mut spectra = Vec::with_capacity(arch.m());
    let mut resamples = Vec::with_capacity(arch.m());
    for i in 0..arch.m() {
        let mut r = rng.derive(i as u64);
        let dim = arch.slot_dim(i);
        let mut attempts = 0;
        loop {
            if attempts >= budget {
                return Err(Error::ResampleBudgetExceeded { slot: i, attempts });
            }
            attempts += 1;
            let h: UnitaryMatrix<R> = haar_unitary(dim, &mut r);
            let spec = unitary_eigendecomposition(&h, default_eigen_tolerance::<R>(dim))?;
            if crate::cayley::margin_good(&spec.phases, margin) {
                gates.push(h);
                spectra.push(spec);
                resamples.push(attempts - 1);
                break;
            }
        }
    }
    Ok(PadSeed { gates, spectra, resamples })
}

/// The curve `theta -> C(theta)` with slot `i` holding `H_i(theta) G_i`.
#[derive(Clone, Debug)]
pub struct PerturbedFamily<R: Real> {
    base: Circuit<R>,
    seed: PadSeed<R>,
    transform: TransformKind,
}

impl<R: Real> PerturbedFamily<R> {
    pub fn new(base: Circuit<R>, seed: PadSeed<R>, transform: TransformKind) -> Result<Self> {
        transform.validate()?;
        if seed.gates.len() != base.arch().m() {
            return Err(Error::InvalidInput("pad seed does not match the architecture".into()));
        }
        for (i, g) in seed.gates.iter().enumerate() {
            if g.dim() != base.arch().slot_dim(i) {
                return Err(Error::InvalidInput(format!("pad gate {i} has the wrong dimension")));
            }
        }
        Ok(PerturbedFamily { base, seed, transform })
    }

    pub fn base(&self) -> &Circuit<R> {
        &self.base
    }
    pub fn seed(&self) -> &PadSeed<R> {
        &self.seed
    }
    pub fn transform(&self) -> TransformKind {
        self.transform
    }
    pub fn arch(&self) -> &Architecture {
        self.base.arch()
    }

    /// Degree of the polynomial `Pr[0^n](C(theta)) * Q(theta)`.
    pub fn numerator_degree(&self) -> usize {
        match self.transform {
            TransformKind::Cayley => self.arch().numerator_degree(),
            TransformKind::TruncatedTaylor { order } => 2 * order * self.arch().m(),
        }
    }

    /// Denominator `Q(theta)`; identically one for the Taylor variant.
    pub fn denominator(&self, theta: R) -> R {
        match self.transform {
            TransformKind::Cayley => crate::rational::denominator_q(&self.seed.half_tangents(), theta),
            TransformKind::TruncatedTaylor { .. } => R::one(),
        }
    }

    /// Sum over slots of the Taylor truncation estimates (zero for Cayley).
    pub fn truncation_estimate(&self, theta: R) -> f64 {
        match self.transform {
            TransformKind::Cayley => 0.0,
            TransformKind::TruncatedTaylor { order } => self
                .seed
                .spectra
                .iter()
                .map(|s| {
                    let maxp = s.phases.iter().fold(0.0f64, |m, p| m.max(p.to_f64().abs()));
                    crate::cayley::taylor_truncation_estimate(theta.to_f64(), maxp, order)
                })
                .sum(),
        }
    }

    pub fn member(&self, theta: R) -> Result<Circuit<R>> {
        match self.transform {
            TransformKind::Cayley => {
                if theta == R::one() {
                    return Ok(self.base.clone());
                }
                let gates = self
                    .seed
                    .spectra
                    .iter()
                    .zip(self.base.gates())
                    .map(|(s, g)| Ok(cayley_from_spectrum(s, theta)?.matrix().matmul(g)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Circuit { arch: self.base.arch.clone(), gates, unitary: self.base.unitary })
            }
            TransformKind::TruncatedTaylor { order } => {
                let gates = self
                    .seed
                    .spectra
                    .iter()
                    .zip(self.base.gates())
                    .map(|(s, g)| Ok(taylor_from_spectrum(s, theta, order)?.matrix.matmul(g)))
                    .collect::<Result<Vec<_>>>()?;
                Circuit::new_general(self.base.arch.clone(), gates)
            }
        }
    }
}

/// `H^{⊗n0}` with entries `±2^{-n0/2}`.
fn hadamard_power<R: Real>(n0: usize) -> CMatrix<R> {
    let dim = 1usize << n0;
    let scale = if n0.is_multiple_of(2) {
        R::from_f64(2f64.powi(-(n0 as i32) / 2))
    } else {
        R::one() / R::from_usize(dim).sqrt()
    };
    CMatrix::from_fn(dim, dim, |i, j| {
        let sign = if (i & j).count_ones() % 2 == 0 { scale } else { -scale };
        Complex::from_real(sign)
    })
}

fn check_truth_table(f: &[i32]) -> Result<usize> {
    let len = f.len();
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::InvalidInput(format!("truth table length {len} is not a power of two >= 2")));
    }
    let n0 = len.trailing_zeros() as usize;
    if n0 > 6 {
        return Err(Error::InvalidInput(format!("truth table on {n0} bits exceeds 6")));
    }
    if f.iter().any(|v| *v != 1 && *v != -1) {
        return Err(Error::InvalidInput("truth table entries must be +1 or -1".into()));
    }
    Ok(n0)
}

/// `H^{⊗n0} U_f H^{⊗n0}` as three full-width slots.
pub fn fourier_sampling_circuit<R: Real>(truth_table: &[i32]) -> Result<Circuit<R>> {
    let n0 = check_truth_table(truth_table)?;
    let arch = Architecture::global_layers(n0, 3)?;
    let h = hadamard_power::<R>(n0);
    let uf = CMatrix::diagonal(&truth_table.iter().map(|v| Complex::from_f64(*v as f64, 0.0)).collect::<Vec<_>>());
    Ok(Circuit { arch, gates: vec![h.clone(), uf, h], unitary: true })
}

/// Fourier-sampling target placed into `arch`: the whole unitary sits in the
/// first slot spanning every qubit (in order) and the other slots hold identities.
pub fn fourier_sampling_embedded<R: Real>(truth_table: &[i32], arch: &Architecture) -> Result<Circuit<R>> {
    let n0 = check_truth_table(truth_table)?;
    if arch.n() != n0 {
        return Err(Error::InvalidInput(format!("architecture has {} qubits, truth table {n0}", arch.n())));
    }
    let full: Vec<usize> = (0..n0).collect();
    let slot = arch
        .slots()
        .iter()
        .position(|s| *s == full)
        .ok_or_else(|| Error::InvalidInput("no slot spans all qubits in order".into()))?;
    let f = fourier_sampling_circuit::<R>(truth_table)?;
    let w = f.gates[2].matmul(&f.gates[1]).matmul(&f.gates[0]);
    let mut c = Circuit::identity(arch.clone());
    c.gates[slot] = w;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Dd;

    #[test]
    fn brickwork_layouts() {
        assert_eq!(Architecture::brickwork(2, 1).unwrap().slots(), &[vec![0, 1]]);
        let a = Architecture::brickwork(4, 2).unwrap();
        assert_eq!(a.slots(), &[vec![0, 1], vec![2, 3], vec![1, 2]]);
        assert_eq!(Architecture::brickwork(5, 2).unwrap().m(), 4);
        assert_eq!(Architecture::brickwork(3, 3).unwrap().m(), 3);
        assert!(Architecture::brickwork(1, 1).is_err());
        assert!(Architecture::new(2, vec![vec![0, 2]]).is_err());
        assert!(Architecture::new(2, vec![vec![1, 1]]).is_err());
        assert_eq!(a.numerator_degree(), 24);
    }

    #[test]
    fn member_endpoints() {
        let arch = Architecture::brickwork(3, 2).unwrap();
        let rng = SeededRng::new(10, 0);
        let c0 = Circuit::<f64>::haar_random(arch, &rng.derive(0));
        let seed = one_time_pad(&c0, &rng.derive(1), &EigenMargin::default()).unwrap();
        let fam = PerturbedFamily::new(c0.clone(), seed.clone(), TransformKind::Cayley).unwrap();
        assert_eq!(fam.member(1.0).unwrap(), c0);
        let m0 = fam.member(0.0).unwrap();
        for i in 0..2 {
            let expect = seed.gates[i].matrix().matmul(&c0.gates()[i]);
            assert!(m0.gates()[i].max_abs_diff(&expect) < 1e-13);
        }
        // continuity
        let a = fam.member(0.3).unwrap();
        let b = fam.member(0.3 + 1e-6).unwrap();
        for (x, y) in a.gates().iter().zip(b.gates()) {
            assert!(x.max_abs_diff(y) < 1e-4);
        }
    }

    #[test]
    fn pad_is_deterministic_and_margin_good() {
        let arch = Architecture::brickwork(4, 3).unwrap();
        let c0 = Circuit::<Dd>::identity(arch);
        let rng = SeededRng::new(42, 7);
        let margin = EigenMargin::new(0.3).unwrap();
        let a = one_time_pad(&c0, &rng, &margin).unwrap();
        let b = one_time_pad(&c0, &rng, &margin).unwrap();
        assert_eq!(a, b);
        for s in &a.spectra {
            assert!(crate::cayley::margin_good(&s.phases, &margin));
        }
        let tight = EigenMargin::new(3.1).unwrap();
        assert!(matches!(
            one_time_pad_with_budget(&c0, &rng, &tight, 5),
            Err(Error::ResampleBudgetExceeded { .. })
        ));
    }

    #[test]
    fn fourier_targets() {
        let c = fourier_sampling_circuit::<f64>(&[1, 1, 1, 1]).unwrap();
        assert_eq!(c.arch().m(), 3);
        assert!(fourier_sampling_circuit::<f64>(&[1, 1, 1]).is_err());
        assert!(fourier_sampling_circuit::<f64>(&[1, 0]).is_err());
        let arch = Architecture::new(2, vec![vec![0, 1], vec![0, 1]]).unwrap();
        let e = fourier_sampling_embedded::<f64>(&[1, -1, 1, 1], &arch).unwrap();
        assert_eq!(e.gates()[1], CMatrix::identity(4));
        assert!(UnitaryMatrix::new(e.gates()[0].clone()).is_ok());
    }

    #[test]
    fn json_round_trip() {
        let arch = Architecture::brickwork(3, 2).unwrap();
        let c = Circuit::<f64>::haar_random(arch.clone(), &SeededRng::new(1, 1));
        let text = serde_json::to_string(&c.to_json()).unwrap();
        let back = Circuit::<f64>::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, c);

        let d = Circuit::<Dd>::haar_random(arch, &SeededRng::new(1, 2));
        let text = serde_json::to_string(&d.to_json()).unwrap();
        let back = Circuit::<Dd>::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        for (x, y) in back.gates().iter().zip(d.gates()) {
            assert!(x.max_abs_diff(y) < 1e-31);
        }
        let bad = json!({"n": 2, "slots": [[0, 1]], "gates": [], "extra": 1});
        assert!(Circuit::<f64>::from_json(&bad).is_err());
    }
}

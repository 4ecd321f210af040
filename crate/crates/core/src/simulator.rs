//! Exact statevector and density-matrix simulation with Kraus noise.
//!
//! A density matrix on `n` qubits is stored as a vector on `2n` qubits:
//! row qubits first, column qubits after. A Kraus operator `K` acts as `K`
//! on the row qubits and `conj(K)` on the column qubits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::{Architecture, Circuit};
use crate::error::{Error, Result};
use crate::numerics::{CMatrix, Complex, Real};

pub const STATEVECTOR_QUBIT_LIMIT: usize = 12;
pub const DENSITY_QUBIT_LIMIT: usize = 8;
pub const TRAJECTORY_LIMIT: u128 = 1_000_000;
const KRAUS_TOLERANCE: f64 = 1e-12;

/// Applies a `2^k x 2^k` gate to `qubits` of a state on `total` qubits.
pub(crate) fn apply_gate<R: Real>(state: &mut [Complex<R>], total: usize, qubits: &[usize], gate: &CMatrix<R>) {
    let k = qubits.len();
    let dim = 1usize << k;
    let offsets: Vec<usize> = (0..dim)
        .map(|g| {
            (0..k)
                .filter(|j| (g >> (k - 1 - j)) & 1 == 1)
                .map(|j| 1usize << (total - 1 - qubits[j]))
                .sum()
        })
        .collect();
    let mask: usize = offsets[dim - 1];
    let mut buf = vec![Complex::<R>::zero(); dim];
    for base in 0..state.len() {
        if base & mask != 0 {
            continue;
        }
        for (b, off) in buf.iter_mut().zip(&offsets) {
            *b = state[base + off];
        }
        for (r, off) in offsets.iter().enumerate() {
            let mut acc = Complex::zero();
            for (c, b) in buf.iter().enumerate() {
                acc += gate[(r, c)] * *b;
            }
            state[base + off] = acc;
        }
    }
}

fn check_statevector(n: usize) -> Result<()> {
    if n > STATEVECTOR_QUBIT_LIMIT {
        return Err(Error::TooLarge { size: n, limit: STATEVECTOR_QUBIT_LIMIT });
    }
    Ok(())
}

fn basis_zero<R: Real>(qubits: usize) -> Vec<Complex<R>> {
    let mut v = vec![Complex::zero(); 1 << qubits];
    v[0] = Complex::one();
    v
}

/// `C|0^n>`.
pub fn statevector<R: Real>(c: &Circuit<R>) -> Result<Vec<Complex<R>>> {
    let n = c.arch().n();
    check_statevector(n)?;
    let mut psi = basis_zero(n);
    for (slot, g) in c.arch().slots().iter().zip(c.gates()) {
        apply_gate(&mut psi, n, slot, g);
    }
    Ok(psi)
}

pub fn amplitude<R: Real>(c: &Circuit<R>) -> Result<Complex<R>> {
    Ok(statevector(c)?[0])
}

/// `|<0^n|C|0^n>|^2`.
pub fn output_prob<R: Real>(c: &Circuit<R>) -> Result<R> {
    Ok(amplitude(c)?.norm_sqr())
}

pub fn output_distribution<R: Real>(c: &Circuit<R>) -> Result<Vec<R>> {
    Ok(statevector(c)?.into_iter().map(|a| a.norm_sqr()).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelKind {
    /// `{sqrt(1-3g/4) I, sqrt(g/4) X, sqrt(g/4) Y, sqrt(g/4) Z}`.
    Depolarizing1q,
    /// Pauli form on `k` qubits: identity with weight `1-g`, each of the
    /// `4^k - 1` nontrivial Paulis with weight `g/(4^k-1)`.
    DepolarizingPauli,
    Custom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseArity {
    /// A single-qubit depolarizing channel on every qubit of the slot.
    OneQubit,
    /// One Pauli-form channel across all qubits of the slot.
    SlotPauli,
}

impl std::str::FromStr for NoiseArity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1q" | "one-qubit" => Ok(NoiseArity::OneQubit),
            "2q" | "slot" | "slot-pauli" => Ok(NoiseArity::SlotPauli),
            _ => Err(Error::InvalidInput(format!("unknown noise arity '{s}'"))),
        }
    }
}

/// A channel applied right after slot `after_slot` on `qubits`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseChannel {
    pub after_slot: usize,
    pub qubits: Vec<usize>,
    pub gamma: f64,
    pub kind: ChannelKind,
    /// Only read for `Custom` channels; depolarizing sets are rebuilt in the
    /// working precision from `gamma`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub kraus: Vec<CMatrix<f64>>,
}

fn pauli<R: Real>(p: usize) -> CMatrix<R> {
    let (z, o) = (Complex::zero(), Complex::one());
    let d = match p {
        0 => [o, z, z, o],
        1 => [z, o, o, z],
        2 => [z, -Complex::i(), Complex::i(), z],
        _ => [o, z, z, -o],
    };
    CMatrix::from_vec(2, 2, d.to_vec()).expect("2x2")
}

/// Pauli string with base-4 digits of `index`, most significant digit first.
fn pauli_string<R: Real>(index: usize, k: usize) -> CMatrix<R> {
    let mut m = CMatrix::identity(1);
    for j in (0..k).rev() {
        m = m.kron(&pauli((index >> (2 * j)) & 3));
    }
    m
}

impl NoiseChannel {
    pub fn depolarizing_1q(after_slot: usize, qubit: usize, gamma: f64) -> Self {
        NoiseChannel { after_slot, qubits: vec![qubit], gamma, kind: ChannelKind::Depolarizing1q, kraus: vec![] }
    }

    pub fn depolarizing_pauli(after_slot: usize, qubits: Vec<usize>, gamma: f64) -> Self {
        NoiseChannel { after_slot, qubits, gamma, kind: ChannelKind::DepolarizingPauli, kraus: vec![] }
    }

    pub fn custom(after_slot: usize, qubits: Vec<usize>, kraus: Vec<CMatrix<f64>>) -> Self {
        NoiseChannel { after_slot, qubits, gamma: 0.0, kind: ChannelKind::Custom, kraus }
    }

    /// Kraus operators in the working precision, each written as
    /// `sqrt(weight) * V` with the weights summing to one.
    pub fn weighted_ops<R: Real>(&self) -> Vec<(R, CMatrix<R>)> {
        let k = self.qubits.len();
        let g = R::from_f64(self.gamma);
        match self.kind {
            ChannelKind::Depolarizing1q => {
                let w0 = R::one() - g.mul_f64(0.75);
                let w = g.mul_f64(0.25);
                (0..4).map(|p| (if p == 0 { w0 } else { w }, pauli(p))).collect()
            }
            ChannelKind::DepolarizingPauli => {
                let n = 1usize << (2 * k);
                let w = g / R::from_usize(n - 1);
                (0..n).map(|p| (if p == 0 { R::one() - g } else { w }, pauli_string(p, k))).collect()
            }
            ChannelKind::Custom => {
                let d = R::from_usize(1 << k);
                self.kraus
                    .iter()
                    .map(|km| {
                        let km = CMatrix::<R>::lift(km);
                        let w = km.data().iter().map(|z| z.norm_sqr()).sum::<R>() / d;
                        let v = if w > R::zero() { km.scale_real(R::one() / w.sqrt()) } else { km };
                        (w, v)
                    })
                    .collect()
            }
        }
    }

    pub fn kraus_ops<R: Real>(&self) -> Vec<CMatrix<R>> {
        self.weighted_ops::<R>().into_iter().map(|(w, v)| v.scale_real(w.sqrt())).collect()
    }

    /// Largest entry of `sum K^dag K - I`.
    pub fn completeness_defect(&self) -> f64 {
        let ops = self.kraus_ops::<f64>();
        let d = 1usize << self.qubits.len();
        let mut acc = CMatrix::<f64>::zeros(d, d);
        for k in &ops {
            acc = acc.add(&k.adjoint().matmul(k));
        }
        acc.max_abs_diff(&CMatrix::identity(d))
    }

    fn validate(&self, arch: &Architecture) -> Result<()> {
        if self.after_slot >= arch.m() {
            return Err(Error::InvalidInput(format!("channel placed after missing slot {}", self.after_slot)));
        }
        if self.qubits.is_empty() || self.qubits.iter().any(|q| *q >= arch.n()) {
            return Err(Error::InvalidInput("channel qubits out of range".into()));
        }
        for (i, q) in self.qubits.iter().enumerate() {
            if self.qubits[..i].contains(q) {
                return Err(Error::InvalidInput(format!("channel repeats qubit {q}")));
            }
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidInput(format!("noise rate {} outside [0,1]", self.gamma)));
        }
        match self.kind {
            ChannelKind::Depolarizing1q if self.qubits.len() != 1 => {
                return Err(Error::InvalidInput("single-qubit channel on several qubits".into()))
            }
            ChannelKind::Custom => {
                let d = 1usize << self.qubits.len();
                if self.kraus.is_empty() || self.kraus.iter().any(|k| k.rows() != d || k.cols() != d) {
                    return Err(Error::InvalidInput("Kraus operators do not match the channel width".into()));
                }
            }
            _ => {}
        }
        let defect = self.completeness_defect();
        if defect > KRAUS_TOLERANCE {
            return Err(Error::InvalidInput(format!("Kraus set is not trace preserving (defect {defect:e})")));
        }
        Ok(())
    }
}

/// Local stochastic noise attached to an architecture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    n: usize,
    m: usize,
    channels: Vec<NoiseChannel>,
}

impl NoiseModel {
    pub fn new(arch: &Architecture, channels: Vec<NoiseChannel>) -> Result<Self> {
        for ch in &channels {
            ch.validate(arch)?;
        }
        let mut channels = channels;
        // stable: keeps the given order within a slot
        channels.sort_by_key(|c| c.after_slot);
        Ok(NoiseModel { n: arch.n(), m: arch.m(), channels })
    }

    pub fn noiseless(arch: &Architecture) -> Self {
        NoiseModel { n: arch.n(), m: arch.m(), channels: vec![] }
    }

    pub fn channels(&self) -> &[NoiseChannel] {
        &self.channels
    }

    pub fn fits(&self, arch: &Architecture) -> bool {
        self.n == arch.n() && self.m == arch.m()
    }

    fn check(&self, arch: &Architecture) -> Result<()> {
        if !self.fits(arch) {
            return Err(Error::InvalidInput("noise model was built for a different architecture".into()));
        }
        Ok(())
    }

    /// Number of Kraus trajectories.
    pub fn trajectory_count(&self) -> u128 {
        self.channels.iter().fold(1u128, |acc, ch| {
            let k = match ch.kind {
                ChannelKind::Depolarizing1q => 4,
                ChannelKind::DepolarizingPauli => 1u128 << (2 * ch.qubits.len()),
                ChannelKind::Custom => ch.kraus.len() as u128,
            };
            acc.saturating_mul(k)
        })
    }
}

/// One channel after every slot.
pub fn depolarizing_model(arch: &Architecture, gamma: f64, arity: NoiseArity) -> Result<NoiseModel> {
    let mut channels = Vec::new();
    for (i, slot) in arch.slots().iter().enumerate() {
        match arity {
            NoiseArity::OneQubit => channels.extend(slot.iter().map(|q| NoiseChannel::depolarizing_1q(i, *q, gamma))),
            NoiseArity::SlotPauli => channels.push(NoiseChannel::depolarizing_pauli(i, slot.clone(), gamma)),
        }
    }
    NoiseModel::new(arch, channels)
}

fn check_density(n: usize) -> Result<()> {
    if n > DENSITY_QUBIT_LIMIT {
        return Err(Error::TooLarge { size: n, limit: DENSITY_QUBIT_LIMIT });
    }
    Ok(())
}

fn apply_two_sided<R: Real>(rho: &mut [Complex<R>], n: usize, qubits: &[usize], k: &CMatrix<R>, kc: &CMatrix<R>) {
    apply_gate(rho, 2 * n, qubits, k);
    let cols: Vec<usize> = qubits.iter().map(|q| q + n).collect();
    apply_gate(rho, 2 * n, &cols, kc);
}

fn apply_channel<R: Real>(rho: &mut Vec<Complex<R>>, n: usize, ch: &NoiseChannel) {
    let mut out = vec![Complex::zero(); rho.len()];
    for k in ch.kraus_ops::<R>() {
        let mut tmp = rho.clone();
        apply_two_sided(&mut tmp, n, &ch.qubits, &k, &k.conj());
        for (o, t) in out.iter_mut().zip(&tmp) {
            *o += *t;
        }
    }
    *rho = out;
}

/// Final density matrix (row-major, `2^n x 2^n`) of `C` under `noise`.
pub fn noisy_density_matrix<R: Real>(c: &Circuit<R>, noise: &NoiseModel) -> Result<Vec<Complex<R>>> {
    let n = c.arch().n();
    check_density(n)?;
    noise.check(c.arch())?;
    let mut rho = basis_zero::<R>(2 * n);
    let mut next = 0;
    for (i, (slot, g)) in c.arch().slots().iter().zip(c.gates()).enumerate() {
        apply_two_sided(&mut rho, n, slot, g, &g.conj());
        while next < noise.channels.len() && noise.channels[next].after_slot == i {
            apply_channel(&mut rho, n, &noise.channels[next]);
            next += 1;
        }
    }
    Ok(rho)
}

/// `Tr[|0^n><0^n| C_N(|0^n><0^n|)]`, unclamped.
pub fn noisy_output_prob<R: Real>(c: &Circuit<R>, noise: &NoiseModel) -> Result<R> {
    Ok(noisy_density_matrix(c, noise)?[0].re)
}

pub fn noisy_output_distribution<R: Real>(c: &Circuit<R>, noise: &NoiseModel) -> Result<Vec<R>> {
    let d = 1usize << c.arch().n();
    let rho = noisy_density_matrix(c, noise)?;
    Ok((0..d).map(|i| rho[i * d + i].re).collect())
}

/// One Kraus index per channel plus the trajectory probability.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub indices: Vec<usize>,
    pub weight: f64,
}

pub fn enumerate_trajectories(noise: &NoiseModel) -> Result<Vec<Trajectory>> {
    let count = noise.trajectory_count();
    if count > TRAJECTORY_LIMIT {
        return Err(Error::TooManyTrajectories { count, limit: TRAJECTORY_LIMIT });
    }
    let weights: Vec<Vec<f64>> =
        noise.channels.iter().map(|ch| ch.weighted_ops::<f64>().into_iter().map(|(w, _)| w).collect()).collect();
    let mut out = Vec::with_capacity(count as usize);
    let mut idx = vec![0usize; weights.len()];
    loop {
        let weight = idx.iter().zip(&weights).map(|(i, w)| w[*i]).product();
        out.push(Trajectory { indices: idx.clone(), weight });
        // odometer, last channel fastest
        let mut j = weights.len();
        loop {
            if j == 0 {
                return Ok(out);
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < weights[j].len() {
                break;
            }
            idx[j] = 0;
        }
    }
}

/// `sum_xi w(xi) |<0^n|C_xi|0^n>|^2` over every Kraus trajectory.
pub fn trajectory_average<R: Real>(c: &Circuit<R>, noise: &NoiseModel) -> Result<R> {
    let n = c.arch().n();
    check_statevector(n)?;
    noise.check(c.arch())?;
    let trajectories = enumerate_trajectories(noise)?;
    let ops: Vec<Vec<(R, CMatrix<R>)>> = noise.channels.iter().map(|ch| ch.weighted_ops::<R>()).collect();
    let terms: Vec<R> = trajectories
        .par_iter()
        .map(|t| {
            let mut psi = basis_zero::<R>(n);
            let mut weight = R::one();
            let mut next = 0;
            for (i, (slot, g)) in c.arch().slots().iter().zip(c.gates()).enumerate() {
                apply_gate(&mut psi, n, slot, g);
                while next < noise.channels.len() && noise.channels[next].after_slot == i {
                    let (w, v) = &ops[next][t.indices[next]];
                    weight *= *w;
                    apply_gate(&mut psi, n, &noise.channels[next].qubits, v);
                    next += 1;
                }
            }
            weight * psi[0].norm_sqr()
        })
        .collect();
    Ok(terms.into_iter().sum())
}

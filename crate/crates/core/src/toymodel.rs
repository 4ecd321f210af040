//! Collision probability of layered global Haar circuits with single-qubit
//! depolarizing noise after every layer: closed form and Monte Carlo.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::{Architecture, Circuit};
use crate::error::{Error, Result};
use crate::numerics::SeededRng;
use crate::simulator::{depolarizing_model, noisy_output_distribution, NoiseArity};

pub const MONTE_CARLO_QUBIT_LIMIT: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyParams {
    pub n: usize,
    pub depth: usize,
    pub gamma: f64,
    pub trials: usize,
}

impl ToyParams {
    pub fn new(n: usize, depth: usize, gamma: f64, trials: usize) -> Result<Self> {
        let p = ToyParams { n, depth, gamma, trials };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.depth == 0 {
            return Err(Error::InvalidInput("need n >= 1 and depth >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidInput(format!("noise rate {} outside [0,1]", self.gamma)));
        }
        Ok(())
    }
}

/// `β = ((1 + 3(1-γ)^2)^n - 1) / (4^n - 1)`.
pub fn decay_coefficient(n: usize, gamma: f64) -> f64 {
    let s = (1.0 - gamma).powi(2);
    ((1.0 + 3.0 * s).powi(n as i32) - 1.0) / (4f64.powi(n as i32) - 1.0)
}

/// `CP = ((1 + (1-γ)^2)^n - 1) / (2^n + 1) · β^{d-1}`.
pub fn cp_closed_form(p: &ToyParams) -> Result<f64> {
    p.validate()?;
    let s = (1.0 - p.gamma).powi(2);
    let first = ((1.0 + s).powi(p.n as i32) - 1.0) / (2f64.powi(p.n as i32) + 1.0);
    Ok(first * decay_coefficient(p.n, p.gamma).powi(p.depth as i32 - 1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CpEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub trials: usize,
    /// Largest `TV(p, uniform) - ½ sqrt(2^n Σp² - 1)` over the trials; never positive.
    pub worst_tv_slack: f64,
}

/// Mean of `2^n Σ_x p(x)^2 - 1` over random circuits, each simulated exactly.
pub fn cp_monte_carlo(p: &ToyParams, rng: &SeededRng) -> Result<CpEstimate> {
    p.validate()?;
    if p.n > MONTE_CARLO_QUBIT_LIMIT {
        return Err(Error::TooLarge { size: p.n, limit: MONTE_CARLO_QUBIT_LIMIT });
    }
    if p.trials < 2 {
        return Err(Error::InvalidInput("need at least two trials".into()));
    }
    let arch = Architecture::global_layers(p.n, p.depth)?;
    let noise = depolarizing_model(&arch, p.gamma, NoiseArity::OneQubit)?;
    let dim = (1usize << p.n) as f64;
    let per_trial = (0..p.trials)
        .into_par_iter()
        .map(|t| {
            let c = Circuit::<f64>::haar_random(arch.clone(), &rng.derive(t as u64));
            let probs = noisy_output_distribution(&c, &noise)?;
            let cp = dim * probs.iter().map(|q| q * q).sum::<f64>() - 1.0;
            let tv = 0.5 * probs.iter().map(|q| (q - 1.0 / dim).abs()).sum::<f64>();
            Ok((cp, tv - 0.5 * cp.max(0.0).sqrt()))
        })
        .collect::<Result<Vec<_>>>()?;
    let m = p.trials as f64;
    let estimate = per_trial.iter().map(|v| v.0).sum::<f64>() / m;
    let var = per_trial.iter().map(|v| (v.0 - estimate).powi(2)).sum::<f64>() / (m - 1.0);
    let worst_tv_slack = per_trial.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(CpEstimate { estimate, stderr: (var / m).sqrt(), trials: p.trials, worst_tv_slack })
}

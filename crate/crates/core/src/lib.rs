//! Worst-to-average-case reductions for random-circuit output probabilities:
//! Cayley-path families, exact simulators, robust polynomial extrapolation,
//! permanents and a noisy toy model.

pub mod boson;
pub mod cayley;
pub mod circuits;
pub mod error;
pub mod interp;
pub mod numerics;
pub mod pipelines;
pub mod rational;
pub mod simulator;
pub mod toymodel;

pub use error::{Error, Result};

//! Scalars, complex matrices, random streams and polynomial tools.

pub mod complex;
pub mod dd;
pub mod eigen;
pub mod haar;
pub mod matrix;
pub mod poly;
pub mod qd;
pub mod real;
pub mod rng;

pub use complex::{Complex, C64};
pub use dd::Dd;
pub use eigen::{default_eigen_tolerance, unitary_eigendecomposition, SpectralDecomposition};
pub use haar::haar_unitary;
pub use matrix::{CMatrix, UnitaryMatrix};
pub use poly::{chebyshev_t, lagrange_extrapolate, poly_fit, Basis, FitReport, RealPolynomial};
pub use qd::Qd;
pub use real::{PrecisionMode, Real};
pub use rng::SeededRng;

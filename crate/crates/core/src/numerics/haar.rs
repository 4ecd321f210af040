use super::complex::Complex;
use super::matrix::{CMatrix, UnitaryMatrix};
use super::real::Real;
use super::rng::SeededRng;

/// Haar-random unitary of size `dim`.
///
/// Gaussian columns are orthonormalised by modified Gram-Schmidt with one
/// reorthogonalisation pass. This equals QR with a positive diagonal in R,
/// which is the phase convention that makes the result exactly Haar.
pub fn haar_unitary<R: Real>(dim: usize, rng: &mut SeededRng) -> UnitaryMatrix<R> {
    assert!(dim >= 1, "dimension must be positive");
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = CMatrix::from_fn(dim, dim, |_, _| Complex::from_f64(rng.normal() * s, rng.normal() * s));
    orthonormalize_columns(&mut m);
    UnitaryMatrix::from_trusted(m)
}

/// Orthonormalises the columns of `m` in place, left to right (modified Gram-Schmidt, two passes).
pub(crate) fn orthonormalize_columns<R: Real>(m: &mut CMatrix<R>) {
    let n = m.cols();
    let mut cols: Vec<Vec<Complex<R>>> = (0..n).map(|j| m.column(j)).collect();
    for j in 0..n {
        for _pass in 0..2 {
            for k in 0..j {
                let (done, rest) = cols.split_at_mut(j);
                let mut dot = Complex::zero();
                for (qi, vi) in done[k].iter().zip(rest[0].iter()) {
                    dot += qi.conj() * *vi;
                }
                for (qi, vi) in done[k].iter().zip(rest[0].iter_mut()) {
                    *vi -= *qi * dot;
                }
            }
        }
        let norm: R = cols[j].iter().map(|z| z.norm_sqr()).sum::<R>().sqrt();
        let inv = R::one() / norm;
        for z in cols[j].iter_mut() {
            *z = z.scale(inv);
        }
    }
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
}

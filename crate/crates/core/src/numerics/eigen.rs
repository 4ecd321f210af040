//! Eigendecomposition of unitary matrices.
//!
//! Householder reduction to Hessenberg form followed by single-shift complex QR
//! with Wilkinson shifts. For a normal matrix the converged Schur factor is
//! diagonal, so the accumulated unitary holds the eigenvectors.

use serde::{Deserialize, Serialize};

use super::complex::Complex;
use super::haar::orthonormalize_columns;
use super::matrix::{CMatrix, UnitaryMatrix};
use super::real::Real;
use crate::error::{Error, Result};

/// `U = V diag(e^{i phi}) V^†` with phases sorted ascending in (-pi, pi].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "R: Real", deserialize = "R: Real"))]
pub struct SpectralDecomposition<R: Real> {
    pub phases: Vec<R>,
    pub eigenvalues: Vec<Complex<R>>,
    pub vectors: CMatrix<R>,
}

impl<R: Real> SpectralDecomposition<R> {
    pub fn dim(&self) -> usize {
        self.phases.len()
    }

    /// `V diag(f(lambda_j)) V^†`.
    pub fn apply(&self, mut f: impl FnMut(usize, Complex<R>) -> Complex<R>) -> CMatrix<R> {
        let n = self.dim();
        let v = &self.vectors;
        let d: Vec<Complex<R>> = (0..n).map(|j| f(j, self.eigenvalues[j])).collect();
        CMatrix::from_fn(n, n, |i, k| {
            let mut s = Complex::zero();
            for j in 0..n {
                s += v[(i, j)] * d[j] * v[(k, j)].conj();
            }
            s
        })
    }

    pub fn reconstruct(&self) -> CMatrix<R> {
        self.apply(|_, l| l)
    }
}

/// Default reconstruction tolerance for a matrix of the given size.
pub fn default_eigen_tolerance<R: Real>(dim: usize) -> f64 {
    1000.0 * dim as f64 * R::epsilon()
}

pub fn unitary_eigendecomposition<R: Real>(u: &UnitaryMatrix<R>, tol: f64) -> Result<SpectralDecomposition<R>> {
    let a = u.matrix();
    let n = a.rows();
    let defect = a.unitarity_defect();
    if !(defect <= tol) {
        return Err(Error::NonNormalInput { defect });
    }
    let (mut h, mut q) = hessenberg(a);
    schur_qr(&mut h, &mut q)?;
    orthonormalize_columns(&mut q);

    let mut pairs: Vec<(R, Complex<R>, Vec<Complex<R>>)> = (0..n)
        .map(|j| {
            let v = q.column(j);
            let av = a.mul_vec(&v);
            let mut lam = Complex::zero();
            for (x, y) in v.iter().zip(&av) {
                lam += x.conj() * *y;
            }
            let lam = lam.scale(R::one() / lam.abs());
            (lam.arg(), lam, v)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));

    let mut vectors = CMatrix::zeros(n, n);
    for (j, p) in pairs.iter().enumerate() {
        vectors.set_column(j, &p.2);
    }
    let dec = SpectralDecomposition {
        phases: pairs.iter().map(|p| p.0).collect(),
        eigenvalues: pairs.iter().map(|p| p.1).collect(),
        vectors,
    };
    let err = dec.reconstruct().max_abs_diff(a);
    if !(err <= tol) {
        return Err(Error::ConvergenceFailure { iterations: 0 });
    }
    Ok(dec)
}

fn hessenberg<R: Real>(a: &CMatrix<R>) -> (CMatrix<R>, CMatrix<R>) {
    let n = a.rows();
    let mut h = a.clone();
    let mut q = CMatrix::identity(n);
    for k in 0..n.saturating_sub(2) {
        let x: Vec<Complex<R>> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xnorm = x.iter().map(|z| z.norm_sqr()).sum::<R>().sqrt();
        if xnorm == R::zero() {
            continue;
        }
        let x0abs = x[0].abs();
        let phase = if x0abs == R::zero() { Complex::one() } else { x[0].scale(R::one() / x0abs) };
        // v = x + phase*|x| e1 avoids cancellation
        let mut v = x.clone();
        v[0] += phase.scale(xnorm);
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<R>().sqrt();
        for z in v.iter_mut() {
            *z = z.scale(R::one() / vnorm);
        }
        let two = R::from_f64(2.0);
        // H <- P H with P = I - 2 v v^† on rows k+1..n
        for j in 0..n {
            let mut s = Complex::zero();
            for (t, vi) in v.iter().enumerate() {
                s += vi.conj() * h[(k + 1 + t, j)];
            }
            let s = s.scale(two);
            for (t, vi) in v.iter().enumerate() {
                h[(k + 1 + t, j)] -= *vi * s;
            }
        }
        // H <- H P, Q <- Q P on columns k+1..n
        for m in [&mut h, &mut q] {
            for i in 0..n {
                let mut s = Complex::zero();
                for (t, vi) in v.iter().enumerate() {
                    s += m[(i, k + 1 + t)] * *vi;
                }
                let s = s.scale(two);
                for (t, vi) in v.iter().enumerate() {
                    m[(i, k + 1 + t)] -= s * vi.conj();
                }
            }
        }
        for i in k + 2..n {
            h[(i, k)] = Complex::zero();
        }
    }
    (h, q)
}

/// Rotation `[[c, s], [-conj(s), c]]` mapping `(a, b)` to `(r, 0)`.
fn givens<R: Real>(a: Complex<R>, b: Complex<R>) -> (R, Complex<R>) {
    let aa = a.abs();
    let bb = b.abs();
    if bb == R::zero() {
        return (R::one(), Complex::zero());
    }
    if aa == R::zero() {
        return (R::zero(), b.conj().scale(R::one() / bb));
    }
    let r = (a.norm_sqr() + b.norm_sqr()).sqrt();
    let c = aa / r;
    let s = a.scale(R::one() / aa) * b.conj().scale(R::one() / r);
    (c, s)
}

fn schur_qr<R: Real>(h: &mut CMatrix<R>, q: &mut CMatrix<R>) -> Result<()> {
    let n = h.rows();
    if n < 2 {
        return Ok(());
    }
    let eps = R::from_f64(R::epsilon());
    let max_iter = 60 * n;
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    while hi > 0 {
        // locate the start of the unreduced block ending at hi
        let mut l = hi;
        while l > 0 {
            let off = h[(l, l - 1)].abs();
            let scale = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
            if off <= eps * scale {
                h[(l, l - 1)] = Complex::zero();
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if iter > max_iter {
            return Err(Error::ConvergenceFailure { iterations: total });
        }
        let mu = if iter % 11 == 0 {
            h[(hi, hi)] + Complex::from_real(h[(hi, hi - 1)].abs().mul_f64(0.75))
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        for i in l..=hi {
            h[(i, i)] -= mu;
        }
        let mut rots = Vec::with_capacity(hi - l);
        for k in l..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            let cc = Complex::from_real(c);
            for j in k..n {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = cc * x + s * y;
                h[(k + 1, j)] = cc * y - s.conj() * x;
            }
            h[(k + 1, k)] = Complex::zero();
            rots.push((c, s));
        }
        for (t, &(c, s)) in rots.iter().enumerate() {
            let k = l + t;
            let cc = Complex::from_real(c);
            let last = (k + 2).min(hi);
            for i in 0..=last {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = x * cc + y * s.conj();
                h[(i, k + 1)] = y * cc - x * s;
            }
            for i in 0..n {
                let x = q[(i, k)];
                let y = q[(i, k + 1)];
                q[(i, k)] = x * cc + y * s.conj();
                q[(i, k + 1)] = y * cc - x * s;
            }
        }
        for i in l..=hi {
            h[(i, i)] += mu;
        }
    }
    Ok(())
}

fn wilkinson_shift<R: Real>(a: Complex<R>, b: Complex<R>, c: Complex<R>, d: Complex<R>) -> Complex<R> {
    let half = R::from_f64(0.5);
    let m = (a + d).scale(half);
    let diff = (a - d).scale(half);
    let disc = (diff * diff + b * c).sqrt();
    let mu1 = m + disc;
    let mu2 = m - disc;
    if (mu1 - d).abs() <= (mu2 - d).abs() {
        mu1
    } else {
        mu2
    }
}

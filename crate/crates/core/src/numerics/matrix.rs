//! Dense row-major complex matrices.

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use super::complex::Complex;
use super::real::Real;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CMatrix<R> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<R>>,
}

impl<R: Real> CMatrix<R> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, data: vec![Complex::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<R>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex<R>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "matrix data has {} entries, expected {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn diagonal(d: &[Complex<R>]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
    pub fn data(&self) -> &[Complex<R>] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [Complex<R>] {
        &mut self.data
    }

    pub fn column(&self, j: usize) -> Vec<Complex<R>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[Complex<R>]) {
        for (i, x) in v.iter().enumerate() {
            self[(i, j)] = *x;
        }
    }

    pub fn matmul(&self, b: &CMatrix<R>) -> CMatrix<R> {
        assert_eq!(self.cols, b.rows, "matmul dimension mismatch");
        let mut out = CMatrix::zeros(self.rows, b.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex::zero() {
                    continue;
                }
                let brow = &b.data[k * b.cols..(k + 1) * b.cols];
                let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
                for (o, x) in orow.iter_mut().zip(brow) {
                    *o += a * *x;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex<R>]) -> Vec<Complex<R>> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut s = Complex::zero();
                for j in 0..self.cols {
                    s += self[(i, j)] * v[j];
                }
                s
            })
            .collect()
    }

    pub fn adjoint(&self) -> CMatrix<R> {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn conj(&self) -> CMatrix<R> {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn add(&self, b: &CMatrix<R>) -> CMatrix<R> {
        assert_eq!((self.rows, self.cols), (b.rows, b.cols));
        let data = self.data.iter().zip(&b.data).map(|(x, y)| *x + *y).collect();
        CMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, b: &CMatrix<R>) -> CMatrix<R> {
        assert_eq!((self.rows, self.cols), (b.rows, b.cols));
        let data = self.data.iter().zip(&b.data).map(|(x, y)| *x - *y).collect();
        CMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, k: Complex<R>) -> CMatrix<R> {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| *x * k).collect() }
    }

    pub fn scale_real(&self, k: R) -> CMatrix<R> {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x.scale(k)).collect() }
    }

    /// Kronecker product `self ⊗ b`.
    pub fn kron(&self, b: &CMatrix<R>) -> CMatrix<R> {
        CMatrix::from_fn(self.rows * b.rows, self.cols * b.cols, |i, j| {
            self[(i / b.rows, j / b.cols)] * b[(i % b.rows, j % b.cols)]
        })
    }

    pub fn trace(&self) -> Complex<R> {
        (0..self.rows.min(self.cols)).fold(Complex::zero(), |s, i| s + self[(i, i)])
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.abs_f64()).fold(0.0, f64::max)
    }

    /// Largest entrywise difference magnitude.
    pub fn max_abs_diff(&self, b: &CMatrix<R>) -> f64 {
        assert_eq!((self.rows, self.cols), (b.rows, b.cols));
        self.data.iter().zip(&b.data).map(|(x, y)| (*x - *y).abs_f64()).fold(0.0, f64::max)
    }

    pub fn to_f64(&self) -> CMatrix<f64> {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.to_c64()).collect() }
    }

    pub fn lift(m: &CMatrix<f64>) -> CMatrix<R> {
        CMatrix { rows: m.rows, cols: m.cols, data: m.data.iter().map(|z| Complex::lift(*z)).collect() }
    }

    /// Solves `self * X = b` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, b: &CMatrix<R>) -> Result<CMatrix<R>> {
        if !self.is_square() || b.rows != self.rows {
            return Err(Error::InvalidInput("solve needs a square system".into()));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut x = b.clone();
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[(i, k)].abs_f64().partial_cmp(&a[(j, k)].abs_f64()).unwrap())
                .unwrap();
            if a[(p, k)].abs_f64() <= scale * R::epsilon() {
                return Err(Error::IllConditioned { condition: f64::INFINITY });
            }
            if p != k {
                a.swap_rows(p, k);
                x.swap_rows(p, k);
            }
            let pivot = a[(k, k)];
            for i in k + 1..n {
                let f = a[(i, k)] / pivot;
                if f == Complex::zero() {
                    continue;
                }
                for j in k..n {
                    let v = a[(k, j)];
                    a[(i, j)] -= f * v;
                }
                for j in 0..x.cols {
                    let v = x[(k, j)];
                    x[(i, j)] -= f * v;
                }
            }
        }
        for k in (0..n).rev() {
            for j in 0..x.cols {
                let mut s = x[(k, j)];
                for l in k + 1..n {
                    s -= a[(k, l)] * x[(l, j)];
                }
                x[(k, j)] = s / a[(k, k)];
            }
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<CMatrix<R>> {
        self.solve(&CMatrix::identity(self.rows))
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// `max |(A^† A - I)_{ij}|`.
    pub fn unitarity_defect(&self) -> f64 {
        let g = self.adjoint().matmul(self);
        g.max_abs_diff(&CMatrix::identity(self.cols))
    }
}

impl<R> Index<(usize, usize)> for CMatrix<R> {
    type Output = Complex<R>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<R> {
        &self.data[i * self.cols + j]
    }
}

impl<R> IndexMut<(usize, usize)> for CMatrix<R> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<R> {
        &mut self.data[i * self.cols + j]
    }
}

/// A square matrix known to be unitary within `100 * dim * epsilon`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CMatrix<R>", into = "CMatrix<R>")]
#[serde(bound(serialize = "R: Real", deserialize = "R: Real"))]
pub struct UnitaryMatrix<R: Real>(CMatrix<R>);

impl<R: Real> UnitaryMatrix<R> {
    pub fn default_tolerance(dim: usize) -> f64 {
        100.0 * dim as f64 * R::epsilon()
    }

    pub fn new(m: CMatrix<R>) -> Result<Self> {
        let tol = Self::default_tolerance(m.rows());
        Self::with_tolerance(m, tol)
    }

    pub fn with_tolerance(m: CMatrix<R>, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidInput(format!("unitary must be square, got {}x{}", m.rows(), m.cols())));
        }
        let defect = m.unitarity_defect();
        if !(defect <= tol) {
            return Err(Error::NonNormalInput { defect });
        }
        Ok(UnitaryMatrix(m))
    }

    /// Wraps a matrix whose unitarity is guaranteed by construction.
    pub(crate) fn from_trusted(m: CMatrix<R>) -> Self {
        debug_assert!(m.is_square());
        UnitaryMatrix(m)
    }

    pub fn identity(dim: usize) -> Self {
        UnitaryMatrix(CMatrix::identity(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }
    pub fn matrix(&self) -> &CMatrix<R> {
        &self.0
    }
    pub fn into_matrix(self) -> CMatrix<R> {
        self.0
    }
    pub fn adjoint(&self) -> Self {
        UnitaryMatrix(self.0.adjoint())
    }
    pub fn mul(&self, b: &UnitaryMatrix<R>) -> Self {
        UnitaryMatrix(self.0.matmul(&b.0))
    }
    pub fn kron(&self, b: &UnitaryMatrix<R>) -> Self {
        UnitaryMatrix(self.0.kron(&b.0))
    }
    pub fn to_f64(&self) -> UnitaryMatrix<f64> {
        UnitaryMatrix(self.0.to_f64())
    }
    pub fn lift(u: &UnitaryMatrix<f64>) -> Self {
        UnitaryMatrix(CMatrix::lift(&u.0))
    }
}

impl<R: Real> TryFrom<CMatrix<R>> for UnitaryMatrix<R> {
    type Error = Error;
    fn try_from(m: CMatrix<R>) -> Result<Self> {
        // deserialized data may have been rounded through decimal text
        let tol = Self::default_tolerance(m.rows()).max(1e-12);
        Self::with_tolerance(m, tol)
    }
}

impl<R: Real> From<UnitaryMatrix<R>> for CMatrix<R> {
    fn from(u: UnitaryMatrix<R>) -> Self {
        u.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::complex::C64;
    use crate::numerics::dd::Dd;

    fn hadamard() -> CMatrix<f64> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        CMatrix::from_vec(2, 2, vec![C64::new(h, 0.0), C64::new(h, 0.0), C64::new(h, 0.0), C64::new(-h, 0.0)])
            .unwrap()
    }

    #[test]
    fn kron_and_matmul() {
        let h = hadamard();
        let hh = h.kron(&h);
        assert_eq!(hh.rows(), 4);
        assert!((hh[(3, 3)].re - 0.5).abs() < 1e-15);
        let id = hh.matmul(&hh);
        assert!(id.max_abs_diff(&CMatrix::identity(4)) < 1e-15);
    }

    #[test]
    fn unitary_check() {
        assert!(UnitaryMatrix::new(hadamard()).is_ok());
        let bad = hadamard().scale_real(1.01);
        assert!(matches!(UnitaryMatrix::new(bad), Err(Error::NonNormalInput { .. })));
        assert!(UnitaryMatrix::new(CMatrix::<f64>::zeros(2, 3)).is_err());
    }

    #[test]
    fn solve_recovers_inverse() {
        let a = CMatrix::<Dd>::from_fn(3, 3, |i, j| {
            Complex::from_f64((i + 2 * j) as f64 + if i == j { 5.0 } else { 0.0 }, (i as f64) - (j as f64))
        });
        let inv = a.inverse().unwrap();
        let prod = a.matmul(&inv);
        assert!(prod.max_abs_diff(&CMatrix::identity(3)) < 1e-30);
        let singular = CMatrix::<f64>::from_fn(2, 2, |_, _| C64::new(1.0, 0.0));
        assert!(singular.inverse().is_err());
    }

    #[test]
    fn serde_round_trip_rejects_non_unitary() {
        let u = UnitaryMatrix::new(hadamard()).unwrap();
        let j = serde_json::to_string(&u).unwrap();
        let back: UnitaryMatrix<f64> = serde_json::from_str(&j).unwrap();
        assert_eq!(back, u);
        let bad = serde_json::to_string(&hadamard().scale_real(2.0)).unwrap();
        assert!(serde_json::from_str::<UnitaryMatrix<f64>>(&bad).is_err());
    }
}

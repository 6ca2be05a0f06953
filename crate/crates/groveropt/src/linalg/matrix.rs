//! Dense complex matrices and vectors, row-major, double precision.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix with row-major storage.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        CMatrix { rows, cols, data: vec![Complex64::ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyDimension);
        }
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch { r1: rows, c1: cols, r2: data.len(), c2: 1 });
        }
        if !data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFiniteEntries);
        }
        Ok(CMatrix { rows, cols, data })
    }

    /// Row-major construction from real (re, im) pairs.
    pub fn from_re_im(rows: usize, cols: usize, pairs: &[(f64, f64)]) -> Result<Self> {
        Self::from_vec(rows, cols, pairs.iter().map(|&(re, im)| Complex64::new(re, im)).collect())
    }

    pub fn diag(entries: &[Complex64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    /// Rank-one matrix |u><v|.
    pub fn outer(u: &CVector, v: &CVector) -> Self {
        let mut m = Self::zeros(u.dim(), v.dim());
        for r in 0..u.dim() {
            for c in 0..v.dim() {
                m[(r, c)] = u[r] * v[c].conj();
            }
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

    pub fn same_shape(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn trace(&self) -> Complex64 {
        debug_assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, z: Complex64) -> Self {
        let mut out = self.clone();
        for e in &mut out.data {
            *e *= z;
        }
        out
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    pub fn matvec(&self, v: &CVector) -> CVector {
        assert_eq!(self.cols, v.dim(), "matvec dimension mismatch");
        let mut out = CVector::zeros(self.rows);
        for r in 0..self.rows {
            let mut acc = Complex64::ZERO;
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            for (a, b) in row.iter().zip(v.entries()) {
                acc += a * b;
            }
            out[r] = acc;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest |entry| of self - other; shapes must match.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert!(self.same_shape(other));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows.min(8) {
            write!(f, "  ")?;
            for c in 0..self.cols.min(8) {
                let z = self[(r, c)];
                write!(f, "{:.4}{:+.4}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert!(self.same_shape(rhs), "matrix addition shape mismatch");
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
        out
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert!(self.same_shape(rhs), "matrix subtraction shape mismatch");
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
        out
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale_re(-1.0)
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        // ikj order keeps the inner loop contiguous in both operands.
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::ZERO {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

/// Dense complex column vector.
#[derive(Clone, PartialEq)]
pub struct CVector {
    data: Vec<Complex64>,
}

impl CVector {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "vector dimension must be positive");
        CVector { data: vec![Complex64::ZERO; dim] }
    }

    pub fn from_vec(data: Vec<Complex64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyDimension);
        }
        if !data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFiniteEntries);
        }
        Ok(CVector { data })
    }

    pub fn from_re_im(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::from_vec(pairs.iter().map(|&(re, im)| Complex64::new(re, im)).collect())
    }

    /// Computational basis state |index>.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim);
        let mut v = Self::zeros(dim);
        v[index] = Complex64::ONE;
        v
    }

    /// Uniform superposition over all dim entries.
    pub fn uniform(dim: usize) -> Self {
        let amp = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        CVector { data: vec![amp; dim] }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    /// <self|other>, conjugate-linear in self.
    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!(self.dim(), other.dim(), "inner product dimension mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, z: Complex64) -> Self {
        CVector { data: self.data.iter().map(|e| e * z).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim());
        CVector { data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim());
        CVector { data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Index<usize> for CVector {
    type Output = Complex64;
    #[inline]
    fn index(&self, i: usize) -> &Complex64 {
        &self.data[i]
    }
}

impl IndexMut<usize> for CVector {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut Complex64 {
        &mut self.data[i]
    }
}

impl fmt::Debug for CVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CVector dim {} [", self.dim())?;
        for z in self.data.iter().take(8) {
            write!(f, "{:.4}{:+.4}i ", z.re, z.im)?;
        }
        write!(f, "]")
    }
}

/// Re Tr(A^H B): the real inner product inducing the Frobenius norm.
pub fn frobenius_inner(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::ShapeMismatch { r1: a.rows(), c1: a.cols(), r2: b.rows(), c2: b.cols() });
    }
    Ok(a.entries()
        .iter()
        .zip(b.entries())
        .map(|(x, y)| (x.conj() * y).re)
        .sum())
}

pub fn frobenius_norm(a: &CMatrix) -> f64 {
    a.entries().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// AB - BA for square matrices of equal dimension.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() || !b.is_square() || a.rows() != b.rows() {
        return Err(Error::ShapeMismatch { r1: a.rows(), c1: a.cols(), r2: b.rows(), c2: b.cols() });
    }
    Ok(&(a * b) - &(b * a))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn frobenius_inner_identity() {
        let i2 = CMatrix::identity(2);
        assert_eq!(frobenius_inner(&i2, &i2).unwrap(), 2.0);
    }

    #[test]
    fn frobenius_inner_zero() {
        let a = CMatrix::from_fn(3, 3, |r, _| c(r as f64, 1.0));
        let z = CMatrix::zeros(3, 3);
        assert_eq!(frobenius_inner(&a, &z).unwrap(), 0.0);
    }

    #[test]
    fn frobenius_inner_shape_mismatch() {
        let a = CMatrix::zeros(2, 2);
        let b = CMatrix::zeros(3, 3);
        assert!(matches!(frobenius_inner(&a, &b), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn frobenius_inner_symmetric() {
        let a = CMatrix::from_fn(2, 2, |r, cc| c((r + cc) as f64, r as f64 - 1.0));
        let b = CMatrix::from_fn(2, 2, |r, cc| c(1.0 - cc as f64, (r * cc) as f64));
        let ab = frobenius_inner(&a, &b).unwrap();
        let ba = frobenius_inner(&b, &a).unwrap();
        assert!((ab - ba).abs() < 1e-15);
        let aa = frobenius_inner(&a, &a).unwrap();
        assert!((aa.sqrt() - frobenius_norm(&a)).abs() < 1e-15);
    }

    #[test]
    fn commutator_identity_commutes() {
        let b = CMatrix::from_fn(3, 3, |r, cc| c(r as f64 - cc as f64, (r * cc) as f64));
        let comm = commutator(&CMatrix::identity(3), &b).unwrap();
        assert!(comm.max_abs() < 1e-15);
    }

    #[test]
    fn commutator_2x2_example() {
        // [diag(1,0), sigma_x] = [[0,1],[-1,0]]
        let a = CMatrix::diag(&[c(1.0, 0.0), c(0.0, 0.0)]);
        let b = CMatrix::from_re_im(2, 2, &[(0.0, 0.0), (1.0, 0.0), (1.0, 0.0), (0.0, 0.0)]).unwrap();
        let comm = commutator(&a, &b).unwrap();
        let want =
            CMatrix::from_re_im(2, 2, &[(0.0, 0.0), (1.0, 0.0), (-1.0, 0.0), (0.0, 0.0)]).unwrap();
        assert!(comm.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn matvec_and_outer() {
        let u = CVector::from_re_im(&[(1.0, 0.0), (0.0, 1.0)]).unwrap();
        let v = CVector::basis(2, 0);
        let m = CMatrix::outer(&u, &v);
        let w = m.matvec(&v);
        assert!((w[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((w[1] - c(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn from_vec_rejects_bad_input() {
        assert!(CMatrix::from_vec(2, 2, vec![Complex64::ZERO; 3]).is_err());
        assert!(CMatrix::from_vec(2, 2, vec![c(f64::NAN, 0.0); 4]).is_err());
        assert!(CVector::from_vec(vec![]).is_err());
    }

    #[test]
    fn adjoint_of_product() {
        let a = CMatrix::from_fn(2, 3, |r, cc| c(r as f64, cc as f64));
        let b = CMatrix::from_fn(3, 2, |r, cc| c(cc as f64 - r as f64, 1.0));
        let lhs = (&a * &b).adjoint();
        let rhs = &b.adjoint() * &a.adjoint();
        assert!(lhs.max_abs_diff(&rhs) < 1e-15);
    }
}

use core::ops::{Add, Deref, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense square complex matrix with finite entries.
///
/// Storage is a column-major `nalgebra` matrix; indexing is `(row, col)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<Complex64>);

impl ComplexMatrix {
    pub fn from_dmatrix(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() == 0 {
            return Err(Error::invalid("matrix", "dimension must be at least 1"));
        }
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(ComplexMatrix(m))
    }

    /// Build from a row-major list of `dim * dim` entries.
    pub fn from_row_major(dim: usize, entries: &[Complex64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Self::from_dmatrix(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        Self::from_dmatrix(DMatrix::from_fn(dim, dim, f))
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be at least 1");
        ComplexMatrix(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be at least 1");
        ComplexMatrix(DMatrix::identity(dim, dim))
    }

    pub fn from_diagonal(d: &[Complex64]) -> Result<Self> {
        let n = d.len();
        Self::from_fn(n, |i, j| if i == j { d[i] } else { Complex64::new(0.0, 0.0) })
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_dmatrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        ComplexMatrix(self.0.adjoint())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        ComplexMatrix(&self.0 * s)
    }

    /// Re M = (M + M*)/2.
    pub fn real_part(&self) -> Self {
        let a = self.0.adjoint();
        ComplexMatrix((&self.0 + a) * Complex64::new(0.5, 0.0))
    }

    /// Im M = (M - M*)/(2i).
    pub fn imag_part(&self) -> Self {
        let a = self.0.adjoint();
        ComplexMatrix((&self.0 - a) * Complex64::new(0.0, -0.5))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn frobenius(&self) -> f64 {
        libm::sqrt(self.0.iter().map(|v| v.norm_sqr()).sum::<f64>())
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        self.0
            .column_iter()
            .map(|c| c.iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        let n = self.dim();
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for j in 0..n {
            for i in 0..=j {
                if (self.0[(i, j)] - self.0[(j, i)].conj()).norm() > rel_tol * scale {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_real(&self) -> bool {
        self.0.iter().all(|v| v.im == 0.0)
    }

    /// Entrywise maximum of |self - other|.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    /// Principal submatrix on the index range `lo..hi`.
    pub fn submatrix(&self, lo: usize, hi: usize) -> Self {
        assert!(lo < hi && hi <= self.dim());
        ComplexMatrix(self.0.view((lo, lo), (hi - lo, hi - lo)).into_owned())
    }

    pub fn matvec(&self, x: &[Complex64]) -> alloc::vec::Vec<Complex64> {
        assert_eq!(x.len(), self.dim());
        let n = self.dim();
        let mut y = alloc::vec![Complex64::new(0.0, 0.0); n];
        for (j, xj) in x.iter().enumerate() {
            if *xj == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (yi, a) in y.iter_mut().zip(self.0.column(j).iter()) {
                *yi += a * xj;
            }
        }
        y
    }
}

impl Deref for ComplexMatrix {
    type Target = DMatrix<Complex64>;
    fn deref(&self) -> &DMatrix<Complex64> {
        &self.0
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        ComplexMatrix(super::matmul(&self.0, &rhs.0))
    }
}

use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// LU factorization with partial pivoting, `P M = L U`.
///
/// Factors are packed column-major; `L` has a unit diagonal.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    a: Vec<Complex64>,
    perm: Vec<usize>,
    swaps: usize,
}

impl Lu {
    pub fn new(m: &DMatrix<Complex64>) -> Result<Self> {
        let n = m.nrows();
        if n != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: m.ncols(),
            });
        }
        let mut a = m.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        for k in 0..n {
            let col = &a[k * n..(k + 1) * n];
            let mut p = k;
            let mut best = col[k].norm_sqr();
            for (i, v) in col.iter().enumerate().skip(k + 1) {
                let s = v.norm_sqr();
                if s > best {
                    best = s;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(Error::Singular { column: k });
            }
            if p != k {
                for j in 0..n {
                    a.swap(j * n + k, j * n + p);
                }
                perm.swap(k, p);
                swaps += 1;
            }
            let inv = Complex64::new(1.0, 0.0) / a[k * n + k];
            for v in &mut a[k * n + k + 1..(k + 1) * n] {
                *v *= inv;
            }
            let (left, right) = a.split_at_mut((k + 1) * n);
            let lcol = &left[k * n + k + 1..(k + 1) * n];
            for j in 0..n - k - 1 {
                let cj = &mut right[j * n..(j + 1) * n];
                let u = cj[k];
                if u == ZERO {
                    continue;
                }
                for (x, l) in cj[k + 1..].iter_mut().zip(lcol) {
                    *x -= u * l;
                }
            }
        }
        Ok(Lu { n, a, perm, swaps })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Diagonal of `U`.
    pub fn pivots(&self) -> impl Iterator<Item = Complex64> + '_ {
        (0..self.n).map(move |k| self.a[k * self.n + k])
    }

    pub fn min_abs_pivot(&self) -> f64 {
        self.pivots().map(|p| p.norm()).fold(f64::INFINITY, f64::min)
    }

    /// `(ln|det M|, arg det M)`; the argument is not reduced modulo 2π.
    pub fn log_det(&self) -> (f64, f64) {
        let mut ln = 0.0;
        let mut arg = if self.swaps % 2 == 1 { core::f64::consts::PI } else { 0.0 };
        for p in self.pivots() {
            ln += libm::log(p.norm());
            arg += p.arg();
        }
        (ln, arg)
    }

    pub fn det(&self) -> Complex64 {
        let mut d = if self.swaps % 2 == 1 {
            Complex64::new(-1.0, 0.0)
        } else {
            Complex64::new(1.0, 0.0)
        };
        for p in self.pivots() {
            d *= p;
        }
        d
    }

    /// Overwrite `b` with `M^{-1} b`.
    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for j in 0..n {
            let xj = x[j];
            if xj == ZERO {
                continue;
            }
            let col = &self.a[j * n + j + 1..(j + 1) * n];
            for (xi, l) in x[j + 1..].iter_mut().zip(col) {
                *xi -= xj * l;
            }
        }
        for j in (0..n).rev() {
            x[j] /= self.a[j * n + j];
            let xj = x[j];
            if xj == ZERO {
                continue;
            }
            let col = &self.a[j * n..j * n + j];
            for (xi, u) in x[..j].iter_mut().zip(col) {
                *xi -= xj * u;
            }
        }
        b.copy_from_slice(&x);
    }

    /// Overwrite `b` with `M^{-*} b`.
    pub fn solve_adjoint_in_place(&self, b: &mut [Complex64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        // M* = U* L* P, so solve U* y = b, L* w = y, then x = P^T w.
        let mut y = b.to_vec();
        for j in 0..n {
            let col = &self.a[j * n..j * n + j];
            let mut s = y[j];
            for (yi, u) in y[..j].iter().zip(col) {
                s -= u.conj() * yi;
            }
            y[j] = s / self.a[j * n + j].conj();
        }
        for j in (0..n).rev() {
            let col = &self.a[j * n + j + 1..(j + 1) * n];
            let mut s = y[j];
            for (yi, l) in y[j + 1..].iter().zip(col) {
                s -= l.conj() * yi;
            }
            y[j] = s;
        }
        for (k, &p) in self.perm.iter().enumerate() {
            b[p] = y[k];
        }
    }

    /// `M^{-1} B` for a block of right-hand sides.
    pub fn solve_matrix(&self, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        assert_eq!(b.nrows(), self.n);
        let mut out = b.clone();
        for mut col in out.column_iter_mut() {
            self.solve_in_place(col.as_mut_slice());
        }
        out
    }

    pub fn inverse(&self) -> DMatrix<Complex64> {
        self.solve_matrix(&DMatrix::identity(self.n, self.n))
    }

    /// Estimate of the smallest singular value by inverse iteration on `(M M*)^{-1}`.
    pub fn min_singular_estimate(&self, iterations: usize) -> f64 {
        let n = self.n;
        let mut x: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(1.0 + 0.37 * libm::sin(1.3 * i as f64), 0.21 * libm::cos(0.7 * i as f64)))
            .collect();
        let mut sigma = f64::INFINITY;
        for _ in 0..iterations.max(1) {
            let nx = norm(&x);
            if nx == 0.0 || !nx.is_finite() {
                return 0.0;
            }
            x.iter_mut().for_each(|v| *v /= nx);
            self.solve_adjoint_in_place(&mut x);
            self.solve_in_place(&mut x);
            let g = norm(&x);
            if !g.is_finite() || g == 0.0 {
                return 0.0;
            }
            let s = 1.0 / libm::sqrt(g);
            if (sigma - s).abs() <= 1e-6 * s {
                return s;
            }
            sigma = s;
        }
        sigma
    }
}

pub(crate) fn norm(x: &[Complex64]) -> f64 {
    libm::sqrt(x.iter().map(|v| v.norm_sqr()).sum::<f64>())
}

/// Solve `M x = b`.
pub fn solve(m: &DMatrix<Complex64>, b: &[Complex64]) -> Result<Vec<Complex64>> {
    let lu = Lu::new(m)?;
    let mut x = b.to_vec();
    lu.solve_in_place(&mut x);
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_matrix(n: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(n, n, |i, j| {
            let t = (i * 7 + j * 13) as f64;
            Complex64::new(libm::sin(t) + if i == j { 3.0 } else { 0.0 }, libm::cos(1.7 * t))
        })
    }

    #[test]
    fn solve_and_adjoint_solve_match_products() {
        let m = test_matrix(9);
        let lu = Lu::new(&m).unwrap();
        let b: Vec<Complex64> = (0..9).map(|i| Complex64::new(i as f64, 1.0 - i as f64)).collect();
        let mut x = b.clone();
        lu.solve_in_place(&mut x);
        let r = &m * DMatrix::from_column_slice(9, 1, &x);
        for i in 0..9 {
            assert!((r[i] - b[i]).norm() < 1e-12);
        }
        let mut y = b.clone();
        lu.solve_adjoint_in_place(&mut y);
        let r = m.adjoint() * DMatrix::from_column_slice(9, 1, &y);
        for i in 0..9 {
            assert!((r[i] - b[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn determinant_of_permutation_and_diagonal() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[ZERO, Complex64::new(2.0, 0.0), Complex64::new(3.0, 0.0), ZERO],
        );
        let lu = Lu::new(&m).unwrap();
        assert!((lu.det() - Complex64::new(-6.0, 0.0)).norm() < 1e-14);
        let (ln, arg) = lu.log_det();
        assert!((ln - libm::log(6.0)).abs() < 1e-14);
        assert!((libm::cos(arg) + 1.0).abs() < 1e-14);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let m = DMatrix::from_element(3, 3, Complex64::new(1.0, 0.0));
        let lu = Lu::new(&m);
        assert!(matches!(lu, Err(Error::Singular { .. })) || lu.unwrap().min_abs_pivot() < 1e-15);
    }

    #[test]
    fn min_singular_estimate_on_diagonal() {
        let d = [5.0, 0.5, 2.0, 1e-6];
        let m = DMatrix::from_fn(4, 4, |i, j| if i == j { Complex64::new(d[i], 0.0) } else { ZERO });
        let s = Lu::new(&m).unwrap().min_singular_estimate(20);
        assert!((s - 1e-6).abs() < 1e-12);
    }
}

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::lu::{norm, Lu};
use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-14;
const RESIDUAL_TOL: f64 = 1e-10;

/// Spectrum of a Hermitian matrix: ascending eigenvalues, orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

/// One eigenvalue with a unit right eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: Complex64,
    pub vector: Vec<Complex64>,
}

fn max_iterations(n: usize) -> usize {
    1000 * n.max(10)
}

/// Hermitian eigendecomposition. The input is symmetrized before solving.
pub fn eigh(m: &ComplexMatrix) -> Result<HermitianEigen> {
    let n = m.dim();
    let (values, vectors) = if m.is_real() {
        let a = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)].re + m[(j, i)].re));
        let e = SymmetricEigen::try_new(a, f64::EPSILON, max_iterations(n)).ok_or_else(|| {
            Error::NonConvergence {
                routine: "symmetric QL",
                iterations: max_iterations(n),
                detail: format!("real symmetric input of dimension {n}"),
            }
        })?;
        let v = e.eigenvectors.map(|x| Complex64::new(x, 0.0));
        (e.eigenvalues.iter().copied().collect::<Vec<_>>(), v)
    } else {
        let a = m.real_part().into_dmatrix();
        let e = SymmetricEigen::try_new(a, f64::EPSILON, max_iterations(n)).ok_or_else(|| {
            Error::NonConvergence {
                routine: "Hermitian QL",
                iterations: max_iterations(n),
                detail: format!("complex Hermitian input of dimension {n}"),
            }
        })?;
        (e.eigenvalues.iter().copied().collect::<Vec<_>>(), e.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted = order.iter().map(|&i| values[i]).collect();
    let vecs = DMatrix::from_fn(n, n, |i, j| vectors[(i, order[j])]);
    Ok(HermitianEigen {
        values: sorted,
        vectors: vecs,
    })
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let n = m.dim();
    let mut values: Vec<f64> = if m.is_real() {
        let a = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)].re + m[(j, i)].re));
        SymmetricEigen::try_new(a, f64::EPSILON, max_iterations(n))
            .ok_or(Error::NonConvergence {
                routine: "symmetric QL",
                iterations: max_iterations(n),
                detail: format!("real symmetric input of dimension {n}"),
            })?
            .eigenvalues
            .iter()
            .copied()
            .collect()
    } else {
        SymmetricEigen::try_new(m.real_part().into_dmatrix(), f64::EPSILON, max_iterations(n))
            .ok_or(Error::NonConvergence {
                routine: "Hermitian QL",
                iterations: max_iterations(n),
                detail: format!("complex Hermitian input of dimension {n}"),
            })?
            .eigenvalues
            .iter()
            .copied()
            .collect()
    };
    values.sort_by(f64::total_cmp);
    Ok(values)
}

fn schur(m: &ComplexMatrix) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    let n = m.dim();
    let s = nalgebra::Schur::try_new(m.as_dmatrix().clone(), f64::EPSILON, max_iterations(n))
        .ok_or_else(|| Error::NonConvergence {
            routine: "complex Schur QR",
            iterations: max_iterations(n),
            detail: format!("dimension {n}, Frobenius norm {:e}", m.frobenius()),
        })?;
    Ok(s.unpack())
}

fn sort_complex(v: &mut [Complex64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Eigenvalues of a general matrix, sorted by real then imaginary part.
///
/// Hermitian inputs use the Hermitian path and return real values.
pub fn eigvals_dense(m: &ComplexMatrix) -> Result<Vec<Complex64>> {
    if m.is_hermitian(HERMITIAN_TOL) {
        return Ok(eigvalsh(m)?.into_iter().map(|x| Complex64::new(x, 0.0)).collect());
    }
    let (_, t) = schur(m)?;
    let mut v: Vec<Complex64> = (0..m.dim()).map(|i| t[(i, i)]).collect();
    sort_complex(&mut v);
    Ok(v)
}

/// Eigenpairs of a general matrix.
///
/// Hermitian inputs dispatch to [`eigh`] (real eigenvalues, ascending, orthonormal vectors).
/// Otherwise eigenvectors come from back substitution on the Schur form and every pair is
/// checked against `||Mv - λv|| <= 1e-10 ||M||_F`.
pub fn eig_dense(m: &ComplexMatrix) -> Result<Vec<EigenPair>> {
    let n = m.dim();
    if m.is_hermitian(HERMITIAN_TOL) {
        let e = eigh(m)?;
        return Ok((0..n)
            .map(|j| EigenPair {
                value: Complex64::new(e.values[j], 0.0),
                vector: e.vectors.column(j).iter().copied().collect(),
            })
            .collect());
    }
    let (q, t) = schur(m)?;
    let tnorm = libm::sqrt(t.iter().map(|v| v.norm_sqr()).sum::<f64>()).max(f64::MIN_POSITIVE);
    let small = f64::EPSILON * tnorm;
    let mnorm = m.frobenius();
    let mut pairs = Vec::with_capacity(n);
    let mut x = alloc::vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        let lambda = t[(k, k)];
        x.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        x[k] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut s = t[(i, k)];
            for j in i + 1..k {
                s += t[(i, j)] * x[j];
            }
            let mut d = t[(i, i)] - lambda;
            if d.norm() < small {
                d = Complex64::new(small, 0.0);
            }
            x[i] = -s / d;
            let big = x[i].norm();
            if big > 1e100 {
                for v in x[i..=k].iter_mut() {
                    *v /= big;
                }
            }
        }
        let mut v: Vec<Complex64> = (0..n)
            .map(|r| (0..=k).map(|j| q[(r, j)] * x[j]).sum())
            .collect();
        let nv = norm(&v);
        v.iter_mut().for_each(|e| *e /= nv);
        let v = refine_if_needed(m, lambda, v, mnorm)?;
        pairs.push(EigenPair { value: lambda, vector: v });
    }
    pairs.sort_by(|a, b| a.value.re.total_cmp(&b.value.re).then(a.value.im.total_cmp(&b.value.im)));
    Ok(pairs)
}

pub(crate) fn residual(m: &ComplexMatrix, lambda: Complex64, v: &[Complex64]) -> f64 {
    let mv = m.matvec(v);
    libm::sqrt(mv.iter().zip(v).map(|(a, b)| (a - lambda * b).norm_sqr()).sum::<f64>())
}

fn refine_if_needed(
    m: &ComplexMatrix,
    lambda: Complex64,
    mut v: Vec<Complex64>,
    mnorm: f64,
) -> Result<Vec<Complex64>> {
    let tol = RESIDUAL_TOL * mnorm.max(f64::MIN_POSITIVE);
    let mut r = residual(m, lambda, &v);
    if r <= tol {
        return Ok(v);
    }
    // Inverse iteration with a slightly perturbed shift.
    let n = m.dim();
    let shift = lambda + Complex64::new(1e-13 * mnorm.max(1.0), 1e-13 * mnorm.max(1.0));
    let mut a = m.as_dmatrix().clone();
    for i in 0..n {
        a[(i, i)] -= shift;
    }
    let lu = Lu::new(&a)?;
    for _ in 0..3 {
        lu.solve_in_place(&mut v);
        let nv = norm(&v);
        if !nv.is_finite() || nv == 0.0 {
            break;
        }
        v.iter_mut().for_each(|e| *e /= nv);
        r = residual(m, lambda, &v);
        if r <= tol {
            return Ok(v);
        }
    }
    Err(Error::NonConvergence {
        routine: "eigenvector back substitution",
        iterations: 3,
        detail: format!("eigenvalue {lambda}: residual {r:e} exceeds {tol:e}"),
    })
}

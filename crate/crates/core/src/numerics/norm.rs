use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::lu::norm;

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Largest singular value of the operator given by `apply` and `apply_adjoint`.
///
/// Golub-Kahan-Lanczos bidiagonalization with full reorthogonalization; stops once the top Ritz
/// value changes by less than `rel_tol` relative or after `max_steps` steps.
pub fn operator_norm<A, B>(
    n: usize,
    mut apply: A,
    mut apply_adjoint: B,
    max_steps: usize,
    rel_tol: f64,
) -> f64
where
    A: FnMut(&[Complex64]) -> Vec<Complex64>,
    B: FnMut(&[Complex64]) -> Vec<Complex64>,
{
    let steps = max_steps.min(n).max(1);
    let mut v0: Vec<Complex64> = (0..n)
        .map(|i| {
            let t = i as f64;
            Complex64::new(1.0 + 0.5 * libm::sin(0.91 * t + 0.3), 0.5 * libm::cos(1.37 * t))
        })
        .collect();
    let nv = norm(&v0);
    v0.iter_mut().for_each(|x| *x /= nv);
    let mut vs: Vec<Vec<Complex64>> = vec![v0];
    let mut us: Vec<Vec<Complex64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut last = 0.0;
    for k in 0..steps {
        let mut u = apply(&vs[k]);
        if k > 0 {
            let b = betas[k - 1];
            for (x, y) in u.iter_mut().zip(&us[k - 1]) {
                *x -= b * y;
            }
        }
        reorthogonalize(&mut u, &us);
        let a = norm(&u);
        if a == 0.0 || !a.is_finite() {
            alphas.push(if a.is_finite() { 0.0 } else { f64::INFINITY });
            break;
        }
        u.iter_mut().for_each(|x| *x /= a);
        alphas.push(a);
        us.push(u);
        let est = top_singular(&alphas, &betas);
        if k > 0 && (est - last).abs() <= rel_tol * est {
            return est;
        }
        last = est;
        let mut v = apply_adjoint(&us[k]);
        for (x, y) in v.iter_mut().zip(&vs[k]) {
            *x -= a * y;
        }
        reorthogonalize(&mut v, &vs);
        let b = norm(&v);
        if b <= 1e-14 * a || !b.is_finite() {
            break;
        }
        v.iter_mut().for_each(|x| *x /= b);
        betas.push(b);
        vs.push(v);
    }
    top_singular(&alphas, &betas)
}

fn reorthogonalize(x: &mut [Complex64], basis: &[Vec<Complex64>]) {
    for _ in 0..2 {
        for q in basis {
            let p: Complex64 = q.iter().zip(x.iter()).map(|(a, b)| a.conj() * b).sum();
            for (xi, qi) in x.iter_mut().zip(q) {
                *xi -= p * qi;
            }
        }
    }
}

fn top_singular(alphas: &[f64], betas: &[f64]) -> f64 {
    let k = alphas.len();
    if k == 0 {
        return 0.0;
    }
    if alphas.iter().any(|a| !a.is_finite()) {
        return f64::INFINITY;
    }
    let b = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alphas[i]
        } else if j == i + 1 && i < betas.len() {
            betas[i]
        } else {
            0.0
        }
    });
    b.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Operator 2-norm of a dense matrix.
pub fn norm2(m: &DMatrix<Complex64>) -> f64 {
    if m.nrows().max(m.ncols()) <= 200 {
        return singular_values(m).first().copied().unwrap_or(0.0);
    }
    let n = m.ncols();
    operator_norm(
        n,
        |x| (m * DMatrix::from_column_slice(n, 1, x)).iter().copied().collect(),
        |x| (m.adjoint() * DMatrix::from_column_slice(m.nrows(), 1, x)).iter().copied().collect(),
        120,
        1e-12,
    )
}

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on Pₙ.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = alloc::vec![0.0; n];
    let mut w = alloc::vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut t = libm::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
            let step = p1 / dp;
            t -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -t;
        x[n - 1 - i] = t;
        let wi = 2.0 / ((1.0 - t * t) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Adaptive Gauss-Legendre integral of f along the segment from a to b.
///
/// A panel is accepted when the rule on it and on its two halves differ by at most `tol`;
/// otherwise the halves are refined with tol/2 each, to at most `max_depth` levels.
pub fn segment_integral<F>(
    f: &mut F,
    a: Complex64,
    b: Complex64,
    tol: f64,
    rule: &(Vec<f64>, Vec<f64>),
    max_depth: usize,
) -> Result<Complex64>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let whole = panel(f, a, b, rule)?;
    refine(f, a, b, whole, tol, rule, max_depth)
}

fn panel<F>(f: &mut F, a: Complex64, b: Complex64, rule: &(Vec<f64>, Vec<f64>)) -> Result<Complex64>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, w) in rule.0.iter().zip(&rule.1) {
        let v = f(mid + half * *x)?;
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::Domain(format!("non-finite integrand at {}", mid + half * *x)));
        }
        acc += v * *w;
    }
    Ok(acc * half)
}

fn refine<F>(
    f: &mut F,
    a: Complex64,
    b: Complex64,
    whole: Complex64,
    tol: f64,
    rule: &(Vec<f64>, Vec<f64>),
    depth: usize,
) -> Result<Complex64>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let m = 0.5 * (a + b);
    let left = panel(f, a, m, rule)?;
    let right = panel(f, m, b, rule)?;
    let split = left + right;
    if (split - whole).norm() <= tol {
        return Ok(split);
    }
    if depth == 0 {
        return Err(Error::NonConvergence {
            routine: "segment_integral",
            iterations: 0,
            detail: format!("panel [{a}, {b}] still differs by {:e}", (split - whole).norm()),
        });
    }
    Ok(refine(f, a, m, left, 0.5 * tol, rule, depth - 1)? + refine(f, m, b, right, 0.5 * tol, rule, depth - 1)?)
}

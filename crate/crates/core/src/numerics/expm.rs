use alloc::format;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::lu::Lu;
use super::matmul;
use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

const THETA_13: f64 = 5.371920351148152;
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Above this 1-norm the exponential can overflow double precision.
pub const EXP_NORM_LIMIT: f64 = 700.0;

/// Matrix exponential by degree-13 Padé approximation with scaling and squaring.
pub fn mat_exp(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = m.dim();
    let norm1 = m.norm_one();
    if norm1 > EXP_NORM_LIMIT {
        return Err(Error::Overflow(format!(
            "||M||_1 = {norm1:.3e} exceeds {EXP_NORM_LIMIT}; reduce theta or the window"
        )));
    }
    let s = if norm1 > THETA_13 {
        libm::ceil(libm::log2(norm1 / THETA_13)) as i32
    } else {
        0
    };
    let a = m.as_dmatrix() * Complex64::new(libm::ldexp(1.0, -s), 0.0);
    let id = DMatrix::<Complex64>::identity(n, n);
    let a2 = matmul(&a, &a);
    let a4 = matmul(&a2, &a2);
    let a6 = matmul(&a4, &a2);
    let b = |k: usize| Complex64::new(PADE_13[k], 0.0);
    let u_inner = matmul(&a6, &(&a6 * b(13) + &a4 * b(11) + &a2 * b(9)))
        + &a6 * b(7)
        + &a4 * b(5)
        + &a2 * b(3)
        + &id * b(1);
    let u = matmul(&a, &u_inner);
    let v = matmul(&a6, &(&a6 * b(12) + &a4 * b(10) + &a2 * b(8)))
        + &a6 * b(6)
        + &a4 * b(4)
        + &a2 * b(2)
        + &id * b(0);
    let lu = Lu::new(&(&v - &u))?;
    let mut r = lu.solve_matrix(&(&v + &u));
    for _ in 0..s {
        r = matmul(&r, &r);
    }
    ComplexMatrix::from_dmatrix(r).map_err(|_| {
        Error::Overflow(format!(
            "exponential overflowed (||M||_1 = {norm1:.3e}); reduce theta or the window"
        ))
    })
}

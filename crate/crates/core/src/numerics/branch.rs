use num_complex::Complex64;

/// Square root with values in the closed upper half-plane.
///
/// The cut lies along [0, ∞): on the positive axis the limit from above (the positive root) is
/// returned, and the negative axis maps continuously onto the positive imaginary axis.
pub fn principal_sqrt(z: Complex64) -> Complex64 {
    let s = z.sqrt();
    if s.im < 0.0 || (s.im == 0.0 && s.re < 0.0) {
        -s
    } else {
        s
    }
}

/// Square root with nonnegative real part (cut along (-∞, 0]).
pub fn sqrt_re(z: Complex64) -> Complex64 {
    z.sqrt()
}

/// arcsin(w) = -i log(iw + sqrt(1 - w²)) with the principal logarithm.
///
/// The logarithm is evaluated as log1p of the small quantity `iw - w²/(1 + sqrt(1 - w²))`, which
/// keeps full relative accuracy as w → 0.
pub fn arcsin_principal(w: Complex64) -> Complex64 {
    if w.norm() > 0.99 {
        log::warn!("arcsin_principal: |w| = {} is close to the branch points ±1", w.norm());
    }
    let root = sqrt_re(Complex64::new(1.0, 0.0) - w * w);
    let u = Complex64::new(-w.im, w.re) - w * w / (Complex64::new(1.0, 0.0) + root);
    let l = log1p(u);
    Complex64::new(l.im, -l.re)
}

/// log(1 + u) with the principal branch, accurate for small |u|.
pub fn log1p(u: Complex64) -> Complex64 {
    let re = 0.5 * libm::log1p(2.0 * u.re + u.norm_sqr());
    let im = libm::atan2(u.im, 1.0 + u.re);
    Complex64::new(re, im)
}

/// Distance from z to the segment [0, 4].
pub fn cut_distance(z: Complex64) -> f64 {
    let x = z.re.clamp(0.0, 4.0);
    libm::hypot(z.re - x, z.im)
}

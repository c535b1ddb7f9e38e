//! Complex dilation of H₀ and V by the flow generated by A₀, and classification of the
//! scaled spectrum.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{build_a0, Perturbation, PerturbationKind, Window};
use crate::numerics::{eigvals_dense, log1p, mat_exp, ComplexMatrix, Lu};
use crate::symbol::{affine_t, homography_f, spectrum_curve, ScaledSpectrumCurve};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Default tolerances of [`classify_spectrum`].
pub const DEFAULT_TOL_CURVE: f64 = 1e-2;
pub const DEFAULT_TOL_STAB: f64 = 1e-6;

fn catan(x: Complex64) -> Complex64 {
    0.5 * I * (log1p(-I * x) - log1p(I * x))
}

fn check_theta(theta: Complex64) -> Result<()> {
    if !(theta.norm() < PI / 8.0) {
        return Err(Error::invalid("theta", format!("|theta| = {} must be below pi/8", theta.norm())));
    }
    Ok(())
}

/// The dilation flow φ_θ on the circle, with cos φ_θ(ϑ) = F_θ(cos ϑ).
///
/// Uses tan(φ_θ(ϑ)/2) = e^{2θ} tan(ϑ/2); ϑ is reduced to (-π, π].
pub fn flow_phi(theta: Complex64, angle: f64) -> Result<Complex64> {
    check_theta(theta)?;
    if !angle.is_finite() {
        return Err(Error::invalid("angle", "must be finite"));
    }
    let mut a = libm::remainder(angle, 2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    }
    let u = (2.0 * theta).exp();
    if a.abs() <= 0.5 * PI {
        return Ok(2.0 * catan(u * libm::tan(0.5 * a)));
    }
    let cot = 1.0 / libm::tan(0.5 * a);
    let side = if a > 0.0 { PI } else { -PI };
    Ok(side - 2.0 * catan(cot / u))
}

/// Ĥ₀(θ): Toeplitz matrix of the Fourier coefficients of T(F_θ(cos ϑ)).
///
/// Coefficients come from the trapezoidal rule on `fourier_nodes` angles; the band
/// [3M/8, M/2] of the coefficient sequence must be below 1e-12, otherwise the nodes alias.
pub fn scaled_h0_matrix(theta: Complex64, w: &Window, fourier_nodes: usize) -> Result<ComplexMatrix> {
    let coeffs = scaled_symbol_coefficients(theta, w.dim(), fourier_nodes)?;
    ComplexMatrix::from_fn(w.dim(), |i, j| coeffs[i.abs_diff(j)])
}

/// Fourier coefficients c_0..c_{len-1} of the even symbol T(F_θ(cos ϑ)).
pub fn scaled_symbol_coefficients(theta: Complex64, len: usize, fourier_nodes: usize) -> Result<Vec<Complex64>> {
    check_theta(theta)?;
    let m = fourier_nodes;
    if m < 8 * len {
        return Err(Error::invalid(
            "fourier_nodes",
            format!("{m} is below 8 x {len}; increase the node count"),
        ));
    }
    let cos_table: Vec<f64> = (0..m).map(|j| libm::cos(2.0 * PI * j as f64 / m as f64)).collect();
    let samples = cos_table
        .iter()
        .map(|&c| Ok(affine_t(homography_f(theta, Complex64::new(c, 0.0))?)))
        .collect::<Result<Vec<_>>>()?;
    let coefficient = |d: usize| {
        let mut acc = ZERO;
        let mut idx = 0usize;
        for s in &samples {
            acc += s * cos_table[idx];
            idx += d;
            if idx >= m {
                idx -= m;
            }
        }
        acc / m as f64
    };
    let tail = (3 * m / 8..=m / 2).map(|d| coefficient(d).norm()).fold(0.0, f64::max);
    if tail > 1e-12 {
        return Err(Error::invalid(
            "fourier_nodes",
            format!("coefficient tail {tail:e} exceeds 1e-12 (aliasing); increase the node count"),
        ));
    }
    Ok((0..len).map(coefficient).collect())
}

/// Exponential decay rate of the coefficients of T(F_θ(cos ϑ)): |Im ϑ*| for the pole
/// cos ϑ* = 1/tanh 2θ, or infinity at θ = 0.
pub fn symbol_decay_rate(theta: Complex64) -> f64 {
    let t = (2.0 * theta).tanh();
    if t.norm() == 0.0 {
        return f64::INFINITY;
    }
    let w = 1.0 / t;
    // arccos(w) = -i log(w + i√(1-w²)); the imaginary part's modulus does not depend on the branch.
    let r = (w + I * (1.0 - w * w).sqrt()).ln();
    r.re.abs()
}

fn default_margin(v: &Perturbation) -> usize {
    match v.decay {
        Some(d) => libm::ceil(6.0 / d.delta) as usize + 20,
        None => 30,
    }
}

fn check_probe_radius(theta: Complex64, v: &Perturbation) {
    let limit = v.decay.map_or(0.1, |d| (d.delta / 10.0).min(0.1));
    if theta.norm() > limit {
        log::warn!("|theta| = {} exceeds the probe radius {limit} for this perturbation", theta.norm());
    }
}

/// Conjugation data e^{±iθA₀} on an inflated window.
struct Dilation {
    outer: Window,
    margin: usize,
    forward: ComplexMatrix,
    backward: ComplexMatrix,
}

impl Dilation {
    fn new(theta: Complex64, w: &Window, margin: usize) -> Result<Self> {
        let outer = w.inflate(margin);
        let a = build_a0(&outer);
        Ok(Dilation {
            outer,
            margin,
            forward: mat_exp(&a.scale(I * theta))?,
            backward: mat_exp(&a.scale(-I * theta))?,
        })
    }

    fn conjugate(&self, v: &Perturbation, inner: &Window) -> Result<ComplexMatrix> {
        let vd = v.dense_on(&self.outer);
        let n = inner.dim();
        let big = self.outer.dim();
        let lo = self.margin;
        let rows: Vec<usize> = (0..big).filter(|&i| (0..big).any(|j| vd[(i, j)] != ZERO)).collect();
        // P = V E⁻¹[:, inner] on the nonzero rows of V, then E[inner, rows] P.
        let mut p = DMatrix::from_element(rows.len(), n, ZERO);
        for (r, &i) in rows.iter().enumerate() {
            for c in 0..n {
                let mut acc = ZERO;
                for l in 0..big {
                    let x = vd[(i, l)];
                    if x != ZERO {
                        acc += x * self.backward[(l, lo + c)];
                    }
                }
                p[(r, c)] = acc;
            }
        }
        let mut out = DMatrix::from_element(n, n, ZERO);
        for c in 0..n {
            for (r, &i) in rows.iter().enumerate() {
                let x = p[(r, c)];
                if x == ZERO {
                    continue;
                }
                for a in 0..n {
                    out[(a, c)] += self.forward[(lo + a, i)] * x;
                }
            }
        }
        ComplexMatrix::from_dmatrix(out)
    }
}

/// V(θ) = e^{iθA₀} V e^{-iθA₀} on the window.
///
/// The exponentials are taken on the window inflated by `margin` sites (default
/// ceil(6/δ) + 20), and the computation is repeated with 10 more sites; a change above
/// 1e-8 in the restricted block is reported as pollution.
pub fn scaled_perturbation(
    theta: Complex64,
    v: &Perturbation,
    w: &Window,
    margin: Option<usize>,
) -> Result<ComplexMatrix> {
    check_theta(theta)?;
    v.validate()?;
    check_probe_radius(theta, v);
    if theta == ZERO {
        return Ok(v.dense_on(w));
    }
    let margin = margin.unwrap_or_else(|| default_margin(v));
    let base = Dilation::new(theta, w, margin)?.conjugate(v, w)?;
    let wider = Dilation::new(theta, w, margin + 10)?.conjugate(v, w)?;
    let change = base.max_abs_diff(&wider);
    if change > 1e-8 {
        return Err(Error::Pollution(format!(
            "V(theta) changes by {change:e} when the margin grows from {margin} to {}; increase margin",
            margin + 10
        )));
    }
    Ok(base)
}

/// Ĥ_V(θ) = Ĥ₀(θ) + V(θ) on the window.
pub fn scaled_hv(theta: Complex64, v: &Perturbation, w: &Window) -> Result<ComplexMatrix> {
    let h0 = scaled_h0_matrix(theta, w, 8 * w.dim())?;
    if is_zero(v) {
        return Ok(h0);
    }
    Ok(&h0 + &scaled_perturbation(theta, v, w, None)?)
}

fn is_zero(v: &Perturbation) -> bool {
    match &v.kind {
        PerturbationKind::Diagonal { values, .. } => values.iter().all(|x| *x == ZERO),
        PerturbationKind::Dense { entries, .. } => entries.iter().flatten().all(|x| *x == ZERO),
        PerturbationKind::LowRank { terms } => terms.iter().all(|t| t.coefficient == ZERO),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteCandidate {
    pub z: Complex64,
    pub curve_distance: f64,
    pub window_stability: f64,
}

/// Eigenvalues of Ĥ_V(θ) split into window-stable points off the curve and the rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumClassification {
    pub theta: Complex64,
    pub discrete_candidates: Vec<DiscreteCandidate>,
    pub curve_attached: Vec<Complex64>,
    pub curve: ScaledSpectrumCurve,
}

/// Eigenvalues of Ĥ_V(θ) on one window.
pub fn scaled_eigenvalues(theta: Complex64, v: &Perturbation, w: &Window) -> Result<Vec<Complex64>> {
    eigvals_dense(&scaled_hv(theta, v, w)?)
}

/// Classifies the eigenvalues of Ĥ_V(θ) on the largest window using the two largest windows.
pub fn classify_spectrum(
    theta: Complex64,
    v: &Perturbation,
    windows: &[Window],
    tol_curve: f64,
    tol_stab: f64,
) -> Result<SpectrumClassification> {
    let spectra = windows
        .iter()
        .map(|w| scaled_eigenvalues(theta, v, w))
        .collect::<Result<Vec<_>>>()?;
    classify_from_spectra(theta, windows, &spectra, tol_curve, tol_stab)
}

/// Classification step of [`classify_spectrum`] for precomputed spectra (one per window).
pub fn classify_from_spectra(
    theta: Complex64,
    windows: &[Window],
    spectra: &[Vec<Complex64>],
    tol_curve: f64,
    tol_stab: f64,
) -> Result<SpectrumClassification> {
    if windows.len() < 2 || spectra.len() != windows.len() {
        return Err(Error::invalid("windows", "at least two windows, one spectrum each, are required"));
    }
    if !(tol_curve > 0.0 && tol_stab > 0.0) {
        return Err(Error::invalid("tol_curve", "tolerances must be positive"));
    }
    if theta.im == 0.0 {
        log::warn!("Im theta = 0: the essential spectrum stays on [0, 4] and nothing is exposed");
    }
    let mut order: Vec<usize> = (0..windows.len()).collect();
    order.sort_by_key(|&i| windows[i].half_width());
    let largest = &spectra[order[order.len() - 1]];
    let second = &spectra[order[order.len() - 2]];
    let curve = spectrum_curve(theta)?;
    let mut discrete = Vec::new();
    let mut attached = Vec::new();
    for &z in largest {
        let d = curve.distance(z);
        let stab = second.iter().map(|y| (y - z).norm()).fold(f64::INFINITY, f64::min);
        if d > tol_curve && stab < tol_stab {
            if d < 2.0 * tol_curve {
                log::warn!("candidate {z} lies within 2 tol_curve of the curve (distance {d:e})");
            }
            discrete.push(DiscreteCandidate {
                z,
                curve_distance: d,
                window_stability: stab,
            });
        } else {
            attached.push(z);
        }
    }
    Ok(SpectrumClassification {
        theta,
        discrete_candidates: discrete,
        curve_attached: attached,
        curve,
    })
}

/// ⟨e_ψ(θ̄), (Ĥ_V(θ) - z)⁻¹ e_φ(θ)⟩ with e(θ) = e^{iθA₀}e, i.e. the ψ-row of e^{-iθA₀}
/// against (Ĥ_V(θ) - z)⁻¹ e^{iθA₀} e_φ.
pub fn analytic_vector_resolvent(
    theta: Complex64,
    v: &Perturbation,
    w: &Window,
    phi_site: i64,
    psi_site: i64,
    z_grid: &[Complex64],
) -> Result<Vec<(Complex64, Complex64)>> {
    check_theta(theta)?;
    if w.index(phi_site).is_none() || w.index(psi_site).is_none() {
        return Err(Error::invalid("phi_index", "basis sites must lie in the window"));
    }
    let h = scaled_hv(theta, v, w)?;
    let eig = eigvals_dense(&h)?;
    let margin = default_margin(v);
    let (right, left) = if theta == ZERO {
        let mut r = alloc::vec![ZERO; w.dim()];
        r[w.index(phi_site).unwrap()] = Complex64::new(1.0, 0.0);
        let mut l = alloc::vec![ZERO; w.dim()];
        l[w.index(psi_site).unwrap()] = Complex64::new(1.0, 0.0);
        (r, l)
    } else {
        let dil = Dilation::new(theta, w, margin)?;
        let pc = dil.outer.index(phi_site).unwrap();
        let pr = dil.outer.index(psi_site).unwrap();
        let r = (0..w.dim()).map(|i| dil.forward[(margin + i, pc)]).collect();
        let l = (0..w.dim()).map(|j| dil.backward[(pr, margin + j)]).collect();
        (r, l)
    };
    let mut out = Vec::with_capacity(z_grid.len());
    for &z in z_grid {
        let gap = eig.iter().map(|e| (e - z).norm()).fold(f64::INFINITY, f64::min);
        if gap < 1e-8 {
            return Err(Error::Domain(format!(
                "z = {z} is within {gap:e} of an eigenvalue of the scaled matrix"
            )));
        }
        let shifted = h.as_dmatrix() - DMatrix::identity(w.dim(), w.dim()) * z;
        let lu = Lu::new(&shifted)?;
        let mut x = right.clone();
        lu.solve_in_place(&mut x);
        let value = left.iter().zip(&x).map(|(a, b)| a * b).sum();
        out.push((z, value));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{assemble_hv, build_h0, SiteMatrix};
    use crate::numerics::{eigvals_dense, singular_values};
    use crate::resolvent::r0_kernel;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn flow_examples() {
        for a in [-3.0, -1.0, 0.0, 0.4, 2.0, PI] {
            assert!((flow_phi(c(0.0, 0.0), a).unwrap() - c(a, 0.0)).norm() < 1e-15);
        }
        let lhs = flow_phi(c(0.03, 0.0), flow_phi(c(0.04, 0.0), 1.0).unwrap().re).unwrap();
        assert!((lhs - flow_phi(c(0.07, 0.0), 1.0).unwrap()).norm() < 1e-12);
        let p = flow_phi(c(0.0, 0.05), 1.2).unwrap();
        let f = homography_f(c(0.0, 0.05), c(libm::cos(1.2), 0.0)).unwrap();
        assert!((p.cos() - f).norm() < 1e-13);
    }

    #[test]
    fn flow_is_regular_at_zero_and_pi() {
        let theta = c(0.02, 0.07);
        assert_eq!(flow_phi(theta, 0.0).unwrap(), c(0.0, 0.0));
        assert!((flow_phi(theta, PI).unwrap() - c(PI, 0.0)).norm() < 1e-15);
        assert!((flow_phi(theta, -PI).unwrap() - c(PI, 0.0)).norm() < 1e-15);
        let near = flow_phi(theta, PI - 1e-9).unwrap();
        assert!((near - c(PI, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn scaled_h0_at_zero_is_h0() {
        let w = Window::new(20).unwrap();
        let m = scaled_h0_matrix(c(0.0, 0.0), &w, 8 * w.dim()).unwrap();
        assert!(m.max_abs_diff(&build_h0(&w)) < 1e-12);
        assert!(scaled_h0_matrix(c(0.0, 0.1), &w, 8 * w.dim() - 1).is_err());
    }

    #[test]
    fn toeplitz_matches_exponential_conjugation_of_h0() {
        let w = Window::new(15).unwrap();
        for theta in [c(0.05, 0.0), c(0.0, 0.06), c(0.03, 0.04)] {
            let outer = w.inflate(40);
            let a = build_a0(&outer);
            let e = mat_exp(&a.scale(I * theta)).unwrap();
            let ei = mat_exp(&a.scale(-I * theta)).unwrap();
            let conj = &(&e * &build_h0(&outer)) * &ei;
            let inner = w.restrict(&outer, &conj);
            let t = scaled_h0_matrix(theta, &w, 8 * w.dim()).unwrap();
            assert!(inner.max_abs_diff(&t) < 1e-10, "theta {theta}");
        }
    }

    #[test]
    fn real_shift_is_unitary_equivalence_in_the_interior() {
        let w = Window::new(12).unwrap();
        let outer = w.inflate(40);
        let theta = c(0.0, 0.1);
        let r = 0.05;
        let a = build_a0(&outer);
        let u = mat_exp(&a.scale(c(0.0, r))).unwrap();
        let ut = u.adjoint();
        let t = scaled_h0_matrix(theta, &outer, 8 * outer.dim()).unwrap();
        let moved = w.restrict(&outer, &(&(&u * &t) * &ut));
        let direct = scaled_h0_matrix(theta + r, &w, 8 * w.dim()).unwrap();
        assert!(moved.max_abs_diff(&direct) < 1e-10);
    }

    #[test]
    fn coefficients_decay_at_the_analytic_rate() {
        for theta in [c(0.0, 0.1), c(0.0, 0.2), c(0.05, 0.15)] {
            let co = scaled_symbol_coefficients(theta, 40, 8 * 40).unwrap();
            let rate = symbol_decay_rate(theta);
            let (d1, d2) = (3usize, 8usize);
            let measured = libm::log(co[d1].norm() / co[d2].norm()) / (d2 - d1) as f64;
            assert!(measured >= 0.9 * rate, "theta {theta}: measured {measured} rate {rate}");
        }
    }

    #[test]
    fn scaled_spectrum_lies_near_the_arc() {
        let w = Window::new(80).unwrap();
        let theta = c(0.0, 0.1);
        let ev = eigvals_dense(&scaled_h0_matrix(theta, &w, 8 * w.dim()).unwrap()).unwrap();
        let curve = spectrum_curve(theta).unwrap();
        assert!(ev.iter().all(|z| curve.distance(*z) < 5e-3));
    }

    fn rank_one() -> Perturbation {
        Perturbation::site_projection(0, c(-1.0, 0.0)).with_decay(1.0, 10.0)
    }

    #[test]
    fn scaled_perturbation_basics() {
        let w = Window::new(10).unwrap();
        let v = Perturbation::dense(SiteMatrix::from_fn(&Window::new(2).unwrap(), |n, m| {
            c(0.3, 0.1 * (n - m) as f64) * libm::exp(-((n.abs() + m.abs()) as f64))
        }))
        .with_decay(1.0, 1.0);
        let zero = scaled_perturbation(c(0.0, 0.0), &v, &w, None).unwrap();
        assert_eq!(zero.max_abs_diff(&v.dense_on(&w)), 0.0);
        // A real θ is a unitary conjugation; with the margin the block captures all of V(θ).
        let big = Window::new(40).unwrap();
        let real = scaled_perturbation(c(0.07, 0.0), &v, &big, None).unwrap();
        let s1 = singular_values(real.as_dmatrix());
        let s0 = singular_values(v.dense_on(&big).as_dmatrix());
        for (a, b) in s1.iter().zip(&s0) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn scaled_perturbation_is_holomorphic_in_theta() {
        let w = Window::new(10).unwrap();
        let v = rank_one();
        let t0 = c(0.0, 0.05);
        let center = scaled_perturbation(t0, &v, &w, None).unwrap();
        let mut avg = ComplexMatrix::zeros(w.dim());
        for j in 0..32 {
            let t = t0 + Complex64::from_polar(1e-3, 2.0 * PI * j as f64 / 32.0);
            avg = &avg + &scaled_perturbation(t, &v, &w, None).unwrap().scale(c(1.0 / 32.0, 0.0));
        }
        assert!(avg.max_abs_diff(&center) < 1e-9);
    }

    #[test]
    fn pollution_is_detected() {
        let w = Window::new(10).unwrap();
        // A slowly decaying perturbation with a tiny margin leaks through the boundary.
        let v = Perturbation::diagonal(-30, (-30..=30).map(|n: i64| c(libm::exp(-0.05 * (2 * n.abs()) as f64), 0.0)).collect());
        let r = scaled_perturbation(c(0.0, 0.1), &v, &w, Some(1));
        assert!(matches!(r, Err(Error::Pollution(_))), "{r:?}");
    }

    #[test]
    fn free_operator_has_no_candidates() {
        let ws = [Window::new(30).unwrap(), Window::new(45).unwrap()];
        let cls = classify_spectrum(c(0.0, 0.08), &Perturbation::zero(), &ws, DEFAULT_TOL_CURVE, DEFAULT_TOL_STAB).unwrap();
        assert!(cls.discrete_candidates.is_empty());
        assert_eq!(cls.curve_attached.len(), ws[1].dim());
    }

    #[test]
    fn rank_one_bound_state_is_exposed() {
        let ws = [Window::new(30).unwrap(), Window::new(45).unwrap()];
        let z0 = 2.0 - libm::sqrt(5.0);
        let unscaled = eigvals_dense(&assemble_hv(&ws[1], &rank_one()).unwrap()).unwrap();
        let off: Vec<_> = unscaled.iter().filter(|z| z.re < 0.0 || z.re > 4.0).collect();
        assert_eq!(off.len(), 1);
        for theta in [c(0.0, 0.04), c(0.0, 0.08)] {
            let cls = classify_spectrum(theta, &rank_one(), &ws, DEFAULT_TOL_CURVE, DEFAULT_TOL_STAB).unwrap();
            assert_eq!(cls.discrete_candidates.len(), 1, "theta {theta}: {:?}", cls.discrete_candidates);
            let z = cls.discrete_candidates[0].z;
            assert!((z - z0).norm() < 1e-7);
            assert!((z - off[0]).norm() < 1e-7);
        }
    }

    #[test]
    fn resolvent_element_examples() {
        // z sits 0.1 above the rotated arc for θ = 0.05i, so the scaled resolvent decays slowly
        // and needs the larger window.
        let z = c(2.0, 0.3);
        for (theta, n) in [(c(0.0, 0.0), 100), (c(0.0, 0.05), 260)] {
            let w = Window::new(n).unwrap();
            let v = analytic_vector_resolvent(theta, &Perturbation::zero(), &w, 0, 0, &[z]).unwrap();
            assert!((v[0].1 - r0_kernel(z, 0).unwrap()).norm() < 1e-10, "theta {theta}: {} vs {}", v[0].1, r0_kernel(z, 0).unwrap());
        }
        let w = Window::new(100).unwrap();
        let v = rank_one();
        let zp = c(2.0, -0.5);
        let hv = assemble_hv(&w, &v).unwrap();
        let mut e = alloc::vec![ZERO; w.dim()];
        e[w.index(0).unwrap()] = c(1.0, 0.0);
        let shifted = hv.as_dmatrix() - DMatrix::identity(w.dim(), w.dim()) * zp;
        let x = crate::numerics::solve(&shifted, &e).unwrap();
        let direct = x[w.index(0).unwrap()];
        for theta in [c(0.0, 0.0), c(0.0, 0.05)] {
            let got = analytic_vector_resolvent(theta, &v, &w, 0, 0, &[zp]).unwrap()[0].1;
            assert!((got - direct).norm() < 1e-8, "theta {theta}");
        }
    }

    #[test]
    fn continuation_stays_bounded_at_the_axis() {
        let w = Window::new(60).unwrap();
        let v = rank_one();
        let mut sup = Vec::new();
        for eta in [1e-1, 1e-2, 1e-3, 1e-4] {
            let grid: Vec<_> = (0..11).map(|j| c(1.5 + 0.1 * j as f64, -eta)).collect();
            let vals = analytic_vector_resolvent(c(0.0, 0.05), &v, &w, 0, 1, &grid).unwrap();
            sup.push(vals.iter().map(|(_, x)| x.norm()).fold(0.0, f64::max));
        }
        assert!(sup.iter().all(|s| s.is_finite()));
        assert!((sup[3] - sup[2]).abs() < 1e-2 * sup[2]);
    }

    proptest! {
        #[test]
        fn flow_group_law(a in -3.1f64..3.1, r1 in -0.05f64..0.05, r2 in -0.05f64..0.05) {
            let inner = flow_phi(c(r2, 0.0), a).unwrap().re;
            let lhs = flow_phi(c(r1, 0.0), inner).unwrap();
            let rhs = flow_phi(c(r1 + r2, 0.0), a).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }

        #[test]
        fn flow_solves_homography(a in -3.1f64..3.1, re in -0.1f64..0.1, im in -0.1f64..0.1) {
            let theta = c(re, im);
            let p = flow_phi(theta, a).unwrap();
            let f = homography_f(theta, c(libm::cos(a), 0.0)).unwrap();
            prop_assert!((p.cos() - f).norm() < 1e-12);
        }

        #[test]
        fn flow_inverse(a in -3.1f64..3.1, r in -0.1f64..0.1) {
            let there = flow_phi(c(r, 0.0), a).unwrap().re;
            prop_assert!((flow_phi(c(-r, 0.0), there).unwrap() - a).norm() < 1e-12);
        }
    }
}

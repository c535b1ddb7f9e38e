//! Positive commutator estimates for bounded non-selfadjoint H, boundary eigenvalues at
//! Im λ = σ±, weighted resolvent probes with ⟨A⟩^{-s}, and the deformed resolvents
//! T_ε^±(z) = z - H ± iε·i[A, H].

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::numerical_range_bounds;
use crate::numerics::{eig_dense, eigh, matmul, norm2, operator_norm, par_map, ComplexMatrix, Lu};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Number of outliers listed in compact-allowed mode.
const MAX_OUTLIERS: usize = 8;
/// Resolvent norms above this are treated as a collision with the spectrum.
const NORM_GUARD: f64 = 1e13;

/// AB - BA.
pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(&(a * b) - &(b * a))
}

fn check_interval(name: &'static str, (a, b): (f64, f64)) -> Result<()> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::invalid(name, format!("({a}, {b}) is not a bounded open interval")));
    }
    Ok(())
}

/// Eigenvalues of Re H in (a, b) with their eigenvectors, and the complementary eigenvectors.
struct SpectralSplit {
    inside: Vec<f64>,
    range: DMatrix<Complex64>,
    complement: DMatrix<Complex64>,
}

fn spectral_split(h: &ComplexMatrix, (a, b): (f64, f64)) -> Result<SpectralSplit> {
    let e = eigh(&h.real_part())?;
    let n = h.dim();
    let (mut inside, mut cols, mut rest) = (Vec::new(), Vec::new(), Vec::new());
    for (j, &v) in e.values.iter().enumerate() {
        if v > a && v < b {
            inside.push(v);
            cols.push(j);
        } else {
            rest.push(j);
        }
    }
    if cols.is_empty() {
        return Err(Error::EmptyProjector { a, b });
    }
    let pick = |idx: &[usize]| DMatrix::from_fn(n, idx.len(), |i, k| e.vectors[(i, idx[k])]);
    Ok(SpectralSplit {
        inside,
        range: pick(&cols),
        complement: pick(&rest),
    })
}

fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_dmatrix((m.as_dmatrix() + m.adjoint().as_dmatrix()) * Complex64::new(0.5, 0.0)).expect("finite")
}

/// How much of the compressed commutator may be written off as a compact remainder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RemainderMode {
    None,
    CompactAllowed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Localization {
    Boundary,
    Interior,
}

/// A low eigenvalue of the compressed commutator and where its eigenvector lives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outlier {
    pub value: f64,
    /// Fraction of the squared norm on the outer eighth of the window at each end.
    pub edge_weight: f64,
    pub localization: Localization,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MourreReport {
    pub interval: (f64, f64),
    pub c_delta: f64,
    pub compressed_spectrum: Vec<f64>,
    pub projector_rank: usize,
    pub remainder_mode: RemainderMode,
    pub outliers: Vec<Outlier>,
}

fn edge_weight(v: &[Complex64]) -> f64 {
    let n = v.len();
    let edge = (n / 8).max(2).min(n / 2);
    let total: f64 = v.iter().map(|x| x.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let outer: f64 = v[..edge].iter().chain(&v[n - edge..]).map(|x| x.norm_sqr()).sum();
    outer / total
}

/// Compresses i[A, Re H] to the spectral subspace of Re H on (a, b).
pub fn mourre_estimate(
    h: &ComplexMatrix,
    a: &ComplexMatrix,
    interval: (f64, f64),
    mode: RemainderMode,
) -> Result<MourreReport> {
    if !a.is_hermitian(1e-12) {
        return Err(Error::invalid("a", "conjugate operator must be Hermitian"));
    }
    let c = commutator(a, &h.real_part())?.scale(I);
    mourre_estimate_with_commutator(h, &c, interval, mode)
}

/// As [`mourre_estimate`], with i[A, Re H] supplied (for instance without truncation boundary
/// terms, see [`crate::lattice::boundary_free_commutator`]).
pub fn mourre_estimate_with_commutator(
    h: &ComplexMatrix,
    commutator: &ComplexMatrix,
    interval: (f64, f64),
    mode: RemainderMode,
) -> Result<MourreReport> {
    check_interval("interval", interval)?;
    if commutator.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: commutator.dim(),
        });
    }
    let split = spectral_split(h, interval)?;
    let e = &split.range;
    let c = hermitian_part(commutator);
    let compressed = matmul(&e.adjoint(), &matmul(c.as_dmatrix(), e));
    let ce = eigh(&ComplexMatrix::from_dmatrix(compressed)?)?;
    let mut outliers = Vec::new();
    if mode == RemainderMode::CompactAllowed {
        let negative = ce.values.iter().take_while(|&&v| v < 0.0).count().max(1);
        for j in 0..negative.min(MAX_OUTLIERS) {
            let full: Vec<Complex64> = (e * ce.vectors.column(j)).iter().copied().collect();
            let w = edge_weight(&full);
            outliers.push(Outlier {
                value: ce.values[j],
                edge_weight: w,
                localization: if w > 0.5 { Localization::Boundary } else { Localization::Interior },
            });
        }
    }
    Ok(MourreReport {
        interval,
        c_delta: ce.values[0],
        projector_rank: split.inside.len(),
        compressed_spectrum: ce.values,
        remainder_mode: mode,
        outliers,
    })
}

/// Which boundary of the numerical range a probe or estimate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Above,
    Below,
}

impl Side {
    fn sign(self) -> f64 {
        match self {
            Side::Above => 1.0,
            Side::Below => -1.0,
        }
    }
}

/// ⟨A⟩^{-s} = (A² + 1)^{-s/2} by Hermitian functional calculus.
pub fn japanese_weight(a: &ComplexMatrix, s: f64) -> Result<ComplexMatrix> {
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::invalid("s", format!("{s} must be finite and nonnegative")));
    }
    if !a.is_hermitian(1e-12) {
        return Err(Error::invalid("a", "conjugate operator must be Hermitian"));
    }
    let e = eigh(a)?;
    let n = a.dim();
    let mut scaled = e.vectors.clone();
    for (j, &v) in e.values.iter().enumerate() {
        let w = libm::pow(libm::sqrt(v * v + 1.0), -s);
        scaled.column_mut(j).iter_mut().for_each(|x| *x *= w);
    }
    let w = matmul(&scaled, &e.vectors.adjoint());
    ComplexMatrix::from_dmatrix(DMatrix::from_fn(n, n, |i, j| 0.5 * (w[(i, j)] + w[(j, i)].conj())))
}

/// Geometric η schedule 1e-1, 1e-2, … down to the finite-window floor.
///
/// Below the eigenvalue spacing of the truncation the resolvent only sees isolated eigenvalues,
/// so the floor is the power of ten just above `spacing`, clamped to [1e-5, 1e-2].
pub fn eta_schedule(spacing: f64) -> Vec<f64> {
    let floor_exp = if spacing.is_finite() && spacing > 0.0 {
        libm::ceil(libm::log10(spacing)).clamp(-5.0, -2.0) as i32
    } else {
        -5
    };
    (1..=-floor_exp).map(|j| libm::pow(10.0, -(j as f64))).collect()
}

/// Spectral grid for [`lap_probe`]: midpoints between consecutive eigenvalues of Re H in the
/// interval, thinned evenly to at most `max_points`, with the largest gap between them.
pub fn lambda_grid(h: &ComplexMatrix, interval: (f64, f64), max_points: usize) -> Result<(Vec<f64>, f64)> {
    check_interval("interval", interval)?;
    let split = spectral_split(h, interval)?;
    let v = &split.inside;
    if v.len() < 2 {
        let mid = 0.5 * (interval.0 + interval.1);
        return Ok((alloc::vec![mid], interval.1 - interval.0));
    }
    let mids: Vec<f64> = v.windows(2).map(|p| 0.5 * (p[0] + p[1])).collect();
    let spacing = v.windows(2).map(|p| p[1] - p[0]).fold(0.0, f64::max);
    let m = max_points.max(1);
    if mids.len() <= m {
        return Ok((mids, spacing));
    }
    let step = mids.len() as f64 / m as f64;
    let grid = (0..m).map(|j| mids[((j as f64 + 0.5) * step) as usize]).collect();
    Ok((grid, spacing))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LapSample {
    pub lambda: f64,
    pub eta: f64,
    pub z: Complex64,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LapReport {
    pub s: f64,
    pub interval: (f64, f64),
    pub side: Side,
    /// σ₊ for side above, σ₋ for side below.
    pub sigma: f64,
    pub samples: Vec<LapSample>,
    pub sup_norm: f64,
    /// Log-log slope of the per-η supremum over the last decade of the schedule.
    pub slope_tail: f64,
}

/// ‖W (z - H)^{-1} W‖ with a dense weight W (identity when `None`).
fn weighted_resolvent_norm(h: &ComplexMatrix, w: Option<&ComplexMatrix>, z: Complex64) -> Result<f64> {
    let n = h.dim();
    let m = DMatrix::from_fn(n, n, |i, j| if i == j { z - h[(i, j)] } else { -h[(i, j)] });
    let lu = Lu::new(&m).map_err(|_| Error::Overflow(format!("z = {z} is an eigenvalue")))?;
    if lu.min_abs_pivot() < 1e-15 * h.norm_one().max(z.norm()) {
        return Err(Error::Overflow(format!("z = {z} is numerically an eigenvalue")));
    }
    let apply_w = |x: &[Complex64]| match w {
        Some(w) => w.matvec(x),
        None => x.to_vec(),
    };
    let norm = operator_norm(
        n,
        |x| {
            let mut y = apply_w(x);
            lu.solve_in_place(&mut y);
            apply_w(&y)
        },
        |x| {
            let mut y = apply_w(x);
            lu.solve_adjoint_in_place(&mut y);
            apply_w(&y)
        },
        160,
        1e-10,
    );
    if !(norm.is_finite() && norm < NORM_GUARD) {
        return Err(Error::Overflow(format!("weighted resolvent norm {norm:e} at z = {z}")));
    }
    Ok(norm)
}

fn check_schedule(etas: &[f64]) -> Result<()> {
    if etas.len() < 2 {
        return Err(Error::invalid("eta_schedule", "needs at least two values"));
    }
    if etas.iter().any(|e| !(e.is_finite() && *e > 0.0)) || etas.windows(2).any(|p| p[1] >= p[0]) {
        return Err(Error::invalid("eta_schedule", "must be positive and strictly decreasing"));
    }
    Ok(())
}

/// Probes sup ‖⟨A⟩^{-s}(z - H)^{-1}⟨A⟩^{-s}‖ over z = λ ± i(σ± + η) on a 16-point [`lambda_grid`].
///
/// `s = 0` is accepted as an unweighted control.
pub fn lap_probe(
    h: &ComplexMatrix,
    a: &ComplexMatrix,
    s: f64,
    interval: (f64, f64),
    eta_schedule: &[f64],
    side: Side,
) -> Result<LapReport> {
    let (grid, _) = lambda_grid(h, interval, 16)?;
    lap_probe_on_grid(h, a, s, interval, &grid, eta_schedule, side)
}

/// [`lap_probe`] on an explicit λ grid.
pub fn lap_probe_on_grid(
    h: &ComplexMatrix,
    a: &ComplexMatrix,
    s: f64,
    interval: (f64, f64),
    lambdas: &[f64],
    eta_schedule: &[f64],
    side: Side,
) -> Result<LapReport> {
    check_interval("interval", interval)?;
    check_schedule(eta_schedule)?;
    if lambdas.is_empty() || lambdas.iter().any(|l| !l.is_finite()) {
        return Err(Error::invalid("lambdas", "need at least one finite grid point"));
    }
    if a.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: a.dim(),
        });
    }
    let w = if s == 0.0 { None } else { Some(japanese_weight(a, s)?) };
    let (sm, sp) = numerical_range_bounds(h)?;
    let sigma = match side {
        Side::Above => sp,
        Side::Below => sm,
    };
    let points: Vec<(f64, f64)> = eta_schedule
        .iter()
        .flat_map(|&eta| lambdas.iter().map(move |&l| (l, eta)))
        .collect();
    let norms = par_map(&points, |&(l, eta)| {
        let z = Complex64::new(l, sigma + side.sign() * eta);
        weighted_resolvent_norm(h, w.as_ref(), z).map(|norm| LapSample { lambda: l, eta, z, norm })
    });
    let samples = norms.into_iter().collect::<Result<Vec<_>>>()?;
    let sup_at = |eta: f64| {
        samples
            .iter()
            .filter(|x| x.eta == eta)
            .map(|x| x.norm)
            .fold(0.0, f64::max)
    };
    let last = eta_schedule[eta_schedule.len() - 1];
    let prev = eta_schedule
        .iter()
        .copied()
        .rfind(|&e| e >= 10.0 * last * (1.0 - 1e-9))
        .unwrap_or(eta_schedule[0]);
    let slope_tail = libm::log(sup_at(last) / sup_at(prev)) / libm::log(last / prev);
    let sup_norm = samples.iter().map(|x| x.norm).fold(0.0, f64::max);
    Ok(LapReport {
        s,
        interval,
        side,
        sigma,
        samples,
        sup_norm,
        slope_tail,
    })
}

/// An eigenvalue on Im λ = σ± with the residuals of Re(H)v = Re(λ)v and Im(H)v = σ±v.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEigen {
    pub value: Complex64,
    pub side: Side,
    pub im_residual: f64,
    pub re_residual: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirialReport {
    pub sigma_minus: f64,
    pub sigma_plus: f64,
    pub eigenvalue_count: usize,
    /// Largest distance of an eigenvalue outside the strip σ₋ ≤ Im λ ≤ σ₊ (0 when contained).
    pub strip_excess: f64,
    pub boundary: Vec<BoundaryEigen>,
    /// With a strictly positive Mourre estimate: whether no boundary eigenvalue has its real part
    /// in the estimate's interval. `None` when no positive estimate was supplied.
    pub excluded_by_positivity: Option<bool>,
}

/// Eigenvalues of H on the boundary lines Im λ = σ± and their eigenvector checks.
pub fn boundary_eigen_virial(h: &ComplexMatrix, tol: f64, mourre: Option<&MourreReport>) -> Result<VirialReport> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    let (sm, sp) = numerical_range_bounds(h)?;
    let pairs = eig_dense(h)?;
    let re = h.real_part();
    let im = h.imag_part();
    let bound = libm::sqrt(tol);
    let mut strip_excess: f64 = 0.0;
    let mut boundary = Vec::new();
    for p in &pairs {
        let y = p.value.im;
        strip_excess = strip_excess.max(sm - y).max(y - sp);
        for (side, sigma) in [(Side::Above, sp), (Side::Below, sm)] {
            if (y - sigma).abs() >= tol {
                continue;
            }
            let vn = libm::sqrt(p.vector.iter().map(|x| x.norm_sqr()).sum::<f64>());
            let imv = im.matvec(&p.vector);
            let rev = re.matvec(&p.vector);
            let r = |a: &[Complex64], c: f64| {
                libm::sqrt(a.iter().zip(&p.vector).map(|(x, v)| (x - c * v).norm_sqr()).sum::<f64>()) / vn
            };
            let im_residual = r(&imv, sigma);
            let re_residual = r(&rev, p.value.re);
            boundary.push(BoundaryEigen {
                value: p.value,
                side,
                im_residual,
                re_residual,
                passes: im_residual < bound && re_residual < bound,
            });
            if sp == sm {
                break;
            }
        }
    }
    let excluded_by_positivity = mourre.filter(|m| m.c_delta > 0.0).map(|m| {
        !boundary
            .iter()
            .any(|b| b.value.re > m.interval.0 && b.value.re < m.interval.1)
    });
    Ok(VirialReport {
        sigma_minus: sm,
        sigma_plus: sp,
        eigenvalue_count: pairs.len(),
        strip_excess,
        boundary,
        excluded_by_positivity,
    })
}

/// Constants of the deformation argument, extracted from the matrices with β = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MourreConstants {
    pub a: f64,
    pub b: f64,
    pub beta: f64,
    pub sigma_minus: f64,
    pub sigma_plus: f64,
    /// σ₀ = σ₊ - σ₋ + 1.
    pub sigma0: f64,
    /// dist(Δ₀, ℝ \ Δ).
    pub delta0: f64,
    /// ‖i ad_A(H)‖, which bounds ‖R_ε‖ for the deformation S(ε) = H.
    pub c_r: f64,
    pub p: f64,
    pub c1: f64,
    /// Largest ε₀ satisfying the smallness condition on the deformation.
    pub eps0_max: f64,
}

impl MourreConstants {
    /// Completes (a, b, β, σ±, δ₀, C_R) with p, C₁ and the admissible ε₀.
    pub fn from_parts(
        a: f64,
        b: f64,
        beta: f64,
        (sigma_minus, sigma_plus): (f64, f64),
        delta0: f64,
        c_r: f64,
    ) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && beta >= 0.0 && delta0 > 0.0 && c_r >= 0.0 && sigma_minus <= sigma_plus) {
            return Err(Error::invalid("constants", "need a, b, δ₀ > 0, β, C_R ≥ 0 and σ₋ ≤ σ₊"));
        }
        let sigma0 = sigma_plus - sigma_minus + 1.0;
        let d2 = delta0 * delta0;
        let p = a * d2 / (4.0 * beta * d2 + 6.0 * (a + b) * sigma0);
        let k1 = 3.0 * (a + b) / d2;
        let c1 = k1 * libm::pow(1.0 + sigma0 / (2.0 * p), 2.0) + beta / (2.0 * p);
        let lin = k1 * sigma0 + beta;
        let x = (-lin + libm::sqrt(lin * lin + k1 * a)) / (2.0 * k1);
        let eps0_max = if c_r > 0.0 { (x / c_r).min(1.0) } else { 1.0 };
        Ok(MourreConstants {
            a,
            b,
            beta,
            sigma_minus,
            sigma_plus,
            sigma0,
            delta0,
            c_r,
            p,
            c1,
            eps0_max,
        })
    }

    /// Extracts a = c_Δ/2 and the smallest b with Re B ≥ aE - bE^⊥, where B = i ad_A(H) and E
    /// is the spectral projector of Re H on Δ.
    pub fn extract(h: &ComplexMatrix, b_op: &ComplexMatrix, delta: (f64, f64), delta0: (f64, f64)) -> Result<Self> {
        check_interval("delta", delta)?;
        check_interval("delta0", delta0)?;
        if !(delta0.0 > delta.0 && delta0.1 < delta.1) {
            return Err(Error::invalid("delta0", "closure must lie inside delta"));
        }
        let split = spectral_split(h, delta)?;
        let c = hermitian_part(b_op);
        let cm = c.as_dmatrix();
        let e1 = &split.range;
        let e2 = &split.complement;
        let x = matmul(&e1.adjoint(), &matmul(cm, e1));
        let c_delta = eigh(&ComplexMatrix::from_dmatrix(x.clone())?)?.values[0];
        if !(c_delta > 0.0) {
            return Err(Error::Domain(format!(
                "compressed commutator is not positive on ({}, {}): c_delta = {c_delta}",
                delta.0, delta.1
            )));
        }
        let a = 0.5 * c_delta;
        let mut b = f64::MIN_POSITIVE;
        if e2.ncols() > 0 {
            let y = matmul(&e1.adjoint(), &matmul(cm, e2));
            let z = matmul(&e2.adjoint(), &matmul(cm, e2));
            let r = e1.ncols();
            let shifted = DMatrix::from_fn(r, r, |i, j| if i == j { x[(i, j)] - a } else { x[(i, j)] });
            let lu = Lu::new(&shifted)?;
            let schur = &matmul(&y.adjoint(), &lu.solve_matrix(&y)) - &z;
            let top = eigh(&hermitian_part(&ComplexMatrix::from_dmatrix(schur)?))?;
            b = b.max(*top.values.last().unwrap_or(&0.0));
        }
        let bounds = numerical_range_bounds(h)?;
        let dist = (delta0.0 - delta.0).min(delta.1 - delta0.1);
        Self::from_parts(a, b, 0.0, bounds, dist, norm2(b_op.as_dmatrix()))
    }

    /// d±(Im z, ε) = ±(Im z - σ±) + εa/2.
    pub fn d(&self, im_z: f64, eps: f64, side: Side) -> f64 {
        match side {
            Side::Above => im_z - self.sigma_plus + 0.5 * eps * self.a,
            Side::Below => self.sigma_minus - im_z + 0.5 * eps * self.a,
        }
    }

    /// (1 + √(1 + 4dC₁ε))/2, the bound on d±‖G_ε^±‖ that follows from the coercivity estimate.
    pub fn product_bound(&self, d: f64, eps: f64) -> f64 {
        0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * d * self.c1 * eps))
    }
}

/// One (z, ε) evaluation of the deformed resolvent G_ε^± = (T_ε^±)^{-1}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeformedPoint {
    pub z: Complex64,
    pub eps: f64,
    pub d: f64,
    /// ‖G_ε^±(z)‖, or `None` when d ≤ 0 and nothing is claimed.
    pub norm: Option<f64>,
    pub product: Option<f64>,
    pub bound: f64,
    /// z ∈ Δ₀^± and ε < ε₀: the estimates are asserted only here.
    pub within_hypotheses: bool,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeformedReport {
    pub side: Side,
    pub constants: MourreConstants,
    pub points: Vec<DeformedPoint>,
    /// sup d±‖G_ε^±‖ over the grid points where d± > 0.
    pub c0: f64,
    pub violations: Vec<DeformedPoint>,
}

/// The simple deformation S(ε) = H, B(ε) = i ad_A(H) of a fixed H.
#[derive(Debug, Clone)]
pub struct Deformation {
    h: ComplexMatrix,
    b: ComplexMatrix,
    side: Side,
    delta0: (f64, f64),
    constants: MourreConstants,
}

impl Deformation {
    /// Builds B = i[A, H] and extracts the constants on Δ ⊃ Δ₀.
    pub fn new(h: &ComplexMatrix, a: &ComplexMatrix, delta: (f64, f64), delta0: (f64, f64), side: Side) -> Result<Self> {
        let b = commutator(a, h)?.scale(I);
        Self::with_commutator(h, &b, delta, delta0, side)
    }

    pub fn with_commutator(
        h: &ComplexMatrix,
        b: &ComplexMatrix,
        delta: (f64, f64),
        delta0: (f64, f64),
        side: Side,
    ) -> Result<Self> {
        if b.dim() != h.dim() {
            return Err(Error::DimensionMismatch {
                expected: h.dim(),
                found: b.dim(),
            });
        }
        let constants = MourreConstants::extract(h, b, delta, delta0)?;
        Ok(Deformation {
            h: h.clone(),
            b: b.clone(),
            side,
            delta0,
            constants,
        })
    }

    pub fn constants(&self) -> &MourreConstants {
        &self.constants
    }

    /// T_ε^±(z) = z - H ± iε B.
    pub fn operator(&self, z: Complex64, eps: f64) -> ComplexMatrix {
        let n = self.h.dim();
        let f = Complex64::new(0.0, self.side.sign() * eps);
        let m = DMatrix::from_fn(n, n, |i, j| {
            let zi = if i == j { z } else { ZERO };
            zi - self.h[(i, j)] + f * self.b[(i, j)]
        });
        ComplexMatrix::from_dmatrix(m).expect("finite")
    }

    fn in_region(&self, z: Complex64) -> bool {
        let c = &self.constants;
        let (lo, hi) = match self.side {
            Side::Above => (c.sigma_plus, c.sigma_plus + 1.0),
            Side::Below => (c.sigma_minus - 1.0, c.sigma_minus),
        };
        z.re >= self.delta0.0 && z.re <= self.delta0.1 && z.im >= lo && z.im <= hi
    }

    pub fn check(&self, z: Complex64, eps: f64) -> Result<DeformedPoint> {
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::invalid("eps", "must be finite and nonnegative"));
        }
        let c = &self.constants;
        let d = c.d(z.im, eps, self.side);
        let bound = c.product_bound(d.max(0.0), eps);
        let within_hypotheses = self.in_region(z) && eps < c.eps0_max;
        if !(d > 0.0) {
            return Ok(DeformedPoint {
                z,
                eps,
                d,
                norm: None,
                product: None,
                bound,
                within_hypotheses,
                ok: true,
            });
        }
        let t = self.operator(z, eps);
        let n = t.dim();
        let norm = Lu::new(t.as_dmatrix()).ok().map(|lu| {
            operator_norm(
                n,
                |x| {
                    let mut y = x.to_vec();
                    lu.solve_in_place(&mut y);
                    y
                },
                |x| {
                    let mut y = x.to_vec();
                    lu.solve_adjoint_in_place(&mut y);
                    y
                },
                160,
                1e-10,
            )
        });
        let norm = norm.filter(|v| v.is_finite());
        let product = norm.map(|v| v * d);
        let ok = !within_hypotheses || product.is_some_and(|p| p <= bound * (1.0 + 1e-9));
        Ok(DeformedPoint {
            z,
            eps,
            d,
            norm,
            product,
            bound,
            within_hypotheses,
            ok,
        })
    }

    /// Evaluates every (z, ε) pair of the two grids.
    pub fn check_grid(&self, zs: &[Complex64], epss: &[f64]) -> Result<DeformedReport> {
        let pairs: Vec<(Complex64, f64)> = zs.iter().flat_map(|&z| epss.iter().map(move |&e| (z, e))).collect();
        let points = par_map(&pairs, |&(z, e)| self.check(z, e))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let c0 = points.iter().filter_map(|p| p.product).fold(0.0, f64::max);
        let violations = points.iter().filter(|p| !p.ok).copied().collect();
        Ok(DeformedReport {
            side: self.side,
            constants: self.constants,
            points,
            c0,
            violations,
        })
    }
}

/// Single-point check of G_ε^±(z) for the deformation built from (H, A) on Δ ⊃ Δ₀.
pub fn deformed_resolvent_check(
    h: &ComplexMatrix,
    a: &ComplexMatrix,
    z: Complex64,
    eps: f64,
    side: Side,
    delta: (f64, f64),
    delta0: (f64, f64),
) -> Result<DeformedPoint> {
    Deformation::new(h, a, delta, delta0, side)?.check(z, eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{assemble_hv, boundary_free_commutator, build_a0, build_h0, Perturbation, Window};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn dissipative(w: &Window, amp: f64) -> ComplexMatrix {
        let d = w.sites().map(|n| c(0.0, amp * libm::exp(-(n.abs() as f64)))).collect();
        assemble_hv(w, &Perturbation::diagonal(-(w.half_width() as i64), d)).unwrap()
    }

    #[test]
    fn commutator_examples() {
        let a = ComplexMatrix::from_diagonal(&[c(1.0, 0.0), c(2.0, 1.0)]).unwrap();
        let b = ComplexMatrix::from_diagonal(&[c(3.0, 0.0), c(-1.0, 0.0)]).unwrap();
        assert_eq!(commutator(&a, &b).unwrap().max_abs(), 0.0);
        let w = Window::new(6).unwrap();
        let (h, a0) = (build_h0(&w), build_a0(&w));
        let x = commutator(&a0, &h).unwrap();
        let y = commutator(&h, &a0).unwrap();
        assert_eq!((&x + &y).max_abs(), 0.0);
        assert!(matches!(
            commutator(&h, &build_h0(&Window::new(2).unwrap())),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn commutator_identity_on_interior() {
        let w = Window::new(100).unwrap();
        let h = build_h0(&w);
        let ic = commutator(&build_a0(&w), &h).unwrap().scale(I);
        let target = &h.scale(c(4.0, 0.0)) - &(&h * &h);
        let n = h.dim();
        let mut err: f64 = 0.0;
        for i in 2..n - 2 {
            for j in 2..n - 2 {
                err = err.max((ic[(i, j)] - target[(i, j)]).norm());
            }
        }
        assert!(err <= 1e-12, "{err}");
    }

    #[test]
    fn mourre_constant_of_free_laplacian() {
        let w = Window::new(150).unwrap();
        let h = build_h0(&w);
        let c13 = boundary_free_commutator(&w, None).unwrap();
        let r = mourre_estimate_with_commutator(&h, &c13, (1.0, 3.0), RemainderMode::None).unwrap();
        assert!((r.c_delta - 3.0).abs() < 0.3, "{}", r.c_delta);
        assert_eq!(r.c_delta, r.compressed_spectrum[0]);
        let count = crate::numerics::eigvalsh(&h).unwrap().iter().filter(|&&v| v > 1.0 && v < 3.0).count();
        assert_eq!(r.projector_rank, count);
        let full = mourre_estimate_with_commutator(&h, &c13, (0.0, 4.0), RemainderMode::None).unwrap();
        assert!(full.c_delta.abs() < 0.01, "{}", full.c_delta);
    }

    #[test]
    fn truncation_boundary_terms_are_localized_outliers() {
        let w = Window::new(60).unwrap();
        let h = build_h0(&w);
        let r = mourre_estimate(&h, &build_a0(&w), (1.0, 3.0), RemainderMode::CompactAllowed).unwrap();
        assert!(r.c_delta < 0.0);
        assert!(!r.outliers.is_empty());
        assert_eq!(r.outliers[0].localization, Localization::Boundary);
        assert!(r.outliers.len() <= MAX_OUTLIERS);
        let plain = mourre_estimate(&h, &build_a0(&w), (1.0, 3.0), RemainderMode::None).unwrap();
        assert!(plain.outliers.is_empty());
    }

    #[test]
    fn compact_perturbation_keeps_the_constant() {
        let w = Window::new(120).unwrap();
        let v = Perturbation::diagonal(-2, (-2..=2).map(|n: i64| c(0.3 * libm::exp(-(n.abs() as f64)), 0.0)).collect());
        let h0 = build_h0(&w);
        let hv = assemble_hv(&w, &v).unwrap();
        let r0 = mourre_estimate_with_commutator(&h0, &boundary_free_commutator(&w, None).unwrap(), (1.2, 2.8), RemainderMode::None).unwrap();
        let rv = mourre_estimate_with_commutator(&hv, &boundary_free_commutator(&w, Some(&v)).unwrap(), (1.2, 2.8), RemainderMode::CompactAllowed)
            .unwrap();
        assert!((r0.c_delta - rv.c_delta).abs() < 0.5, "{} {}", r0.c_delta, rv.c_delta);
        assert!(rv.c_delta > 0.0);
    }

    #[test]
    fn empty_projector_is_an_error() {
        let w = Window::new(10).unwrap();
        let h = build_h0(&w);
        assert!(matches!(
            mourre_estimate(&h, &build_a0(&w), (5.0, 6.0), RemainderMode::None),
            Err(Error::EmptyProjector { .. })
        ));
    }

    #[test]
    fn projector_is_idempotent_and_hermitian() {
        let w = Window::new(30).unwrap();
        let s = spectral_split(&dissipative(&w, 0.3), (1.0, 3.0)).unwrap();
        let e = matmul(&s.range, &s.range.adjoint());
        let e2 = matmul(&e, &e);
        assert!((&e2 - &e).iter().map(|x| x.norm()).fold(0.0, f64::max) < 1e-12);
        assert!((&e.adjoint() - &e).iter().map(|x| x.norm()).fold(0.0, f64::max) < 1e-12);
    }

    #[test]
    fn weight_commutes_and_is_contractive() {
        let w = Window::new(25).unwrap();
        let a = build_a0(&w);
        for s in [0.6, 1.0, 2.0] {
            let wt = japanese_weight(&a, s).unwrap();
            assert!(commutator(&wt, &a).unwrap().max_abs() < 1e-12);
            let ev = crate::numerics::eigvalsh(&wt).unwrap();
            assert!(ev[0] > 0.0 && *ev.last().unwrap() <= 1.0 + 1e-12);
        }
        let id = japanese_weight(&a, 0.0).unwrap();
        assert!(id.max_abs_diff(&ComplexMatrix::identity(a.dim())) < 1e-12);
        assert!(japanese_weight(&a, -1.0).is_err());
    }

    #[test]
    fn eta_schedule_floor() {
        assert_eq!(eta_schedule(0.0078).len(), 2);
        assert_eq!(eta_schedule(1e-9).len(), 5);
        assert_eq!(eta_schedule(0.5), alloc::vec![0.1, 0.01]);
    }

    #[test]
    fn lap_dichotomy_on_a_moderate_window() {
        let w = Window::new(250).unwrap();
        let h = build_h0(&w);
        let a = build_a0(&w);
        let (grid, spacing) = lambda_grid(&h, (1.5, 2.5), 8).unwrap();
        let etas = eta_schedule(spacing);
        let bounded = lap_probe_on_grid(&h, &a, 1.0, (1.5, 2.5), &grid, &etas, Side::Above).unwrap();
        assert!(bounded.slope_tail > -0.1, "{}", bounded.slope_tail);
        let free = lap_probe_on_grid(&h, &a, 0.0, (1.5, 2.5), &grid, &etas, Side::Above).unwrap();
        assert!(free.slope_tail <= -0.9, "{}", free.slope_tail);
        assert!(bounded.samples.windows(2).all(|p| p[0].eta >= p[1].eta));
        assert_eq!(bounded.sup_norm, bounded.samples.iter().map(|x| x.norm).fold(0.0, f64::max));
    }

    #[test]
    fn unweighted_norm_is_inverse_distance_for_selfadjoint_h() {
        let w = Window::new(20).unwrap();
        let h = build_h0(&w);
        let ev = crate::numerics::eigvalsh(&h).unwrap();
        let z = c(1.3, 0.05);
        let dist = ev.iter().map(|&l| (z - l).norm()).fold(f64::INFINITY, f64::min);
        let n = weighted_resolvent_norm(&h, None, z).unwrap();
        assert!((n * dist - 1.0).abs() < 1e-9);
        assert!(matches!(
            weighted_resolvent_norm(&h, None, c(ev[3], 0.0)),
            Err(Error::Overflow(_))
        ));
    }

    #[test]
    fn lap_rejects_bad_schedules() {
        let w = Window::new(10).unwrap();
        let (h, a) = (build_h0(&w), build_a0(&w));
        assert!(lap_probe(&h, &a, 1.0, (1.5, 2.5), &[0.1], Side::Above).is_err());
        assert!(lap_probe(&h, &a, 1.0, (1.5, 2.5), &[0.01, 0.1], Side::Above).is_err());
        assert!(lap_probe(&h, &a, 1.0, (2.5, 1.5), &[0.1, 0.01], Side::Above).is_err());
    }

    #[test]
    fn hermitian_eigenvalues_are_boundary_eigenvalues() {
        let w = Window::new(12).unwrap();
        let r = boundary_eigen_virial(&build_h0(&w), 1e-8, None).unwrap();
        assert_eq!(r.boundary.len(), w.dim());
        assert!(r.boundary.iter().all(|b| b.passes));
        assert_eq!(r.strip_excess, 0.0);
        assert_eq!(r.excluded_by_positivity, None);
    }

    #[test]
    fn dissipative_boundary_eigenvectors_avoid_the_absorber() {
        // Im V = e₀e₀ᵀ: eigenvectors odd under n ↦ -n vanish at 0 and keep Im λ = 0.
        let w = Window::new(15).unwrap();
        let h = assemble_hv(&w, &Perturbation::site_projection(0, c(0.0, 1.0))).unwrap();
        let r = boundary_eigen_virial(&h, 1e-8, None).unwrap();
        assert_eq!(r.boundary.len(), 15);
        for b in &r.boundary {
            assert_eq!(b.side, Side::Below);
            assert!(b.passes, "{b:?}");
        }
        assert!(r.strip_excess < 1e-8);
    }

    #[test]
    fn positive_estimate_excludes_boundary_eigenvalues() {
        let report = MourreReport {
            interval: (1.0, 3.0),
            c_delta: 1.0,
            compressed_spectrum: alloc::vec![1.0],
            projector_rank: 1,
            remainder_mode: RemainderMode::None,
            outliers: Vec::new(),
        };
        let w = Window::new(8).unwrap();
        let h = assemble_hv(&w, &Perturbation::site_projection(0, c(0.0, 1.0))).unwrap();
        let r = boundary_eigen_virial(&h, 1e-8, Some(&report)).unwrap();
        assert_eq!(r.excluded_by_positivity, Some(false));
        let far = MourreReport { interval: (10.0, 11.0), ..report };
        assert_eq!(boundary_eigen_virial(&h, 1e-8, Some(&far)).unwrap().excluded_by_positivity, Some(true));
    }

    fn free_deformation(side: Side) -> Deformation {
        let w = Window::new(60).unwrap();
        let h = build_h0(&w);
        let b = boundary_free_commutator(&w, None).unwrap();
        Deformation::with_commutator(&h, &b, (1.0, 3.0), (1.5, 2.5), side).unwrap()
    }

    #[test]
    fn zero_deformation_is_the_resolvent() {
        let d = free_deformation(Side::Above);
        let w = Window::new(60).unwrap();
        let h = build_h0(&w);
        let z = c(2.0, 0.3);
        let t = d.operator(z, 0.0);
        let direct = &ComplexMatrix::identity(h.dim()).scale(z) - &h;
        assert_eq!(t.max_abs_diff(&direct), 0.0);
    }

    #[test]
    fn deformed_resolvent_bounds_hold_on_the_grid() {
        for side in [Side::Above, Side::Below] {
            let d = free_deformation(side);
            let k = *d.constants();
            assert!(k.a > 1.0 && k.b > 0.0 && k.eps0_max > 0.0);
            let s = side.sign();
            let zs: Vec<Complex64> = [1.5, 1.9, 2.3, 2.5]
                .iter()
                .flat_map(|&x| [0.0, 0.01, 0.1].map(|y| c(x, s * y)))
                .collect();
            let epss: Vec<f64> = [0.01, 0.1, 0.99].iter().map(|f| f * k.eps0_max).collect();
            let r = d.check_grid(&zs, &epss).unwrap();
            assert!(r.violations.is_empty(), "{:?}", r.violations.first());
            assert!(r.c0.is_finite() && r.c0 > 0.0);
            assert!(r.points.iter().filter(|p| p.within_hypotheses && p.norm.is_some()).count() >= 30);
            for p in &r.points {
                if let (Some(n), true) = (p.norm, p.d > 0.0) {
                    assert!(n <= r.c0 / p.d * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn nonpositive_d_claims_nothing() {
        let d = free_deformation(Side::Above);
        let p = d.check(c(2.0, -0.5), 1e-3).unwrap();
        assert!(p.d < 0.0 && p.norm.is_none() && p.ok);
    }

    #[test]
    fn constants_follow_the_closed_forms() {
        let k = MourreConstants::from_parts(1.0, 2.0, 0.5, (-0.5, 0.5), 0.5, 4.0).unwrap();
        assert_eq!(k.sigma0, 2.0);
        let p = 0.25 / (4.0 * 0.5 * 0.25 + 6.0 * 3.0 * 2.0);
        assert!((k.p - p).abs() < 1e-15);
        let c1 = 3.0 * 3.0 / 0.25 * (1.0 + 2.0 / (2.0 * p)).powi(2) + 0.5 / (2.0 * p);
        assert!((k.c1 - c1).abs() < 1e-9 * c1);
        let x = k.c_r * k.eps0_max;
        let lhs = 3.0 * 3.0 / 0.25 * (x * x + 2.0 * x) + 0.5 * x;
        assert!((lhs - 0.25).abs() < 1e-12);
        assert!(MourreConstants::from_parts(0.0, 1.0, 0.0, (0.0, 0.0), 1.0, 1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn commutator_is_antisymmetric(seed in proptest::collection::vec(-1.0f64..1.0, 32)) {
            let a = ComplexMatrix::from_fn(4, |i, j| c(seed[4 * i + j], seed[16 + 4 * j + i])).unwrap();
            let b = ComplexMatrix::from_fn(4, |i, j| c(seed[16 + 4 * i + j], seed[(i + j) % 16])).unwrap();
            let x = commutator(&a, &b).unwrap();
            let y = commutator(&b, &a).unwrap();
            prop_assert!((&x + &y).max_abs() < 1e-14);
        }

        #[test]
        fn eigenvalues_stay_in_the_numerical_range_strip(
            d in proptest::collection::vec(-1.0f64..1.0, 5),
            g in proptest::collection::vec(0.0f64..1.0, 5),
        ) {
            let w = Window::new(10).unwrap();
            let vals = d.iter().zip(&g).map(|(&x, &y)| c(x, y)).collect();
            let h = assemble_hv(&w, &Perturbation::diagonal(-2, vals)).unwrap();
            let r = boundary_eigen_virial(&h, 1e-8, None).unwrap();
            prop_assert!(r.strip_excess <= 1e-8);
        }
    }
}

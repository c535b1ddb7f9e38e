//! Free resolvent kernel, its weighted continuation in k = √z and the characteristic function
//! F(k) = I + 𝒱 W_{-δ} R₀(k²) W_{-δ} whose characteristic values are resonances.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{apply_j_conjugation, negate, Perturbation, Window};
use crate::numerics::{arcsin_principal, cut_distance, principal_sqrt, sqrt_re, ComplexMatrix, Lu};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Kernel of (H₀ - z)⁻¹: R₀(z, n) = i e^{i|n| 2 arcsin(√z/2)} / (√z √(4-z)).
pub fn r0_kernel(z: Complex64, n: i64) -> Result<Complex64> {
    let dist = cut_distance(z);
    if !(dist >= 1e-12) {
        return Err(Error::CutProximity { point: z, distance: dist });
    }
    let k = principal_sqrt(z);
    let g = 2.0 * arcsin_principal(0.5 * k);
    let s = sqrt_re(4.0 - z);
    Ok(I * (I * g * n.unsigned_abs() as f64).exp() / (k * s))
}

fn expm1(x: Complex64) -> Complex64 {
    let em = libm::expm1(x.re);
    let h = libm::sin(0.5 * x.im);
    Complex64::new(em * libm::cos(x.im) - 2.0 * h * h, libm::exp(x.re) * libm::sin(x.im))
}

/// α(k) = i/(k√(4-k²)) - i/(2k) = ik / (2s(2+s)), s = √(4-k²).
pub fn alpha(k: Complex64) -> Complex64 {
    let s = sqrt_re(4.0 - k * k);
    I * k / (2.0 * s * (2.0 + s))
}

/// β_d(k) = i(e^{i d g(k)} - 1)/(k√(4-k²)) with g = 2 arcsin(k/2); β_d(0) = -d/2.
pub fn beta(k: Complex64, d: u64) -> Complex64 {
    if k == Complex64::new(0.0, 0.0) {
        return Complex64::new(-0.5 * d as f64, 0.0);
    }
    let s = sqrt_re(4.0 - k * k);
    let g = 2.0 * arcsin_principal(0.5 * k);
    I * expm1(I * g * d as f64) / (k * s)
}

fn check_k(k: Complex64, delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid("delta", format!("must be positive, got {delta}")));
    }
    if !(k.re.is_finite() && k.im.is_finite()) {
        return Err(Error::invalid("k", "must be finite"));
    }
    if k.norm() == 0.0 {
        return Err(Error::Domain("k = 0 is the threshold itself; the kernel has a 1/k pole there".into()));
    }
    if !(k.im.abs() < delta / 8.0) {
        return Err(Error::Domain(format!(
            "|Im k| = {} must stay below delta/8 = {}: beyond it e^{{|Im k||n-m|}} outgrows the weights and \
             the weighted kernel is no longer Hilbert-Schmidt",
            k.im.abs(),
            delta / 8.0
        )));
    }
    if !(k.norm() < 2.0) {
        return Err(Error::Domain(format!("|k| = {} must be below 2 (branch point of arcsin(k/2))", k.norm())));
    }
    Ok(())
}

/// Toeplitz generator of the k-kernel, d = 0..len.
fn kernel_row(k: Complex64, len: usize, derivative: bool) -> Vec<Complex64> {
    let s = sqrt_re(4.0 - k * k);
    let g = 2.0 * arcsin_principal(0.5 * k);
    let base = I / (k * s);
    let dbase = I / (k * k * s * s);
    let tail = (4.0 - 2.0 * k * k) / s;
    (0..len)
        .map(|d| {
            let e = (I * g * d as f64).exp();
            if derivative {
                dbase * e * (2.0 * I * d as f64 * k - tail)
            } else {
                base * e
            }
        })
        .collect()
}

fn decay_weights(w: &Window, delta: f64) -> Vec<f64> {
    w.sites().map(|s| libm::exp(-0.5 * delta * s.unsigned_abs() as f64)).collect()
}

fn weighted_dense(k: Complex64, delta: f64, w: &Window, derivative: bool) -> DMatrix<Complex64> {
    let n = w.dim();
    let row = kernel_row(k, n, derivative);
    let wt = decay_weights(w, delta);
    DMatrix::from_fn(n, n, |i, j| row[i.abs_diff(j)] * (wt[i] * wt[j]))
}

/// W_{-δ} R₀(k²) W_{-δ} on the window, or its k-derivative.
///
/// The entries use i e^{i|n-m| g}/(k s) with g = 2 arcsin(k/2), s = √(4-k²), which agrees with
/// R₀(k², n-m) for Im k > 0 and continues it analytically across the cut.
pub fn weighted_r0_matrix(k: Complex64, delta: f64, w: &Window, derivative: bool) -> Result<ComplexMatrix> {
    check_k(k, delta)?;
    ComplexMatrix::from_dmatrix(weighted_dense(k, delta, w, derivative))
}

/// Threshold of the spectrum [0, 4] at which the k-variable is centred; serialized as 0 or 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Threshold {
    Zero,
    Four,
}

impl TryFrom<u8> for Threshold {
    type Error = Error;
    fn try_from(t: u8) -> Result<Self> {
        Threshold::from_value(t as f64)
    }
}

impl From<Threshold> for u8 {
    fn from(t: Threshold) -> u8 {
        t.value() as u8
    }
}

impl Threshold {
    pub fn value(self) -> f64 {
        match self {
            Threshold::Zero => 0.0,
            Threshold::Four => 4.0,
        }
    }

    pub fn from_value(t: f64) -> Result<Self> {
        if t == 0.0 {
            Ok(Threshold::Zero)
        } else if t == 4.0 {
            Ok(Threshold::Four)
        } else {
            Err(Error::invalid("threshold", format!("must be 0 or 4, got {t}")))
        }
    }

    /// Spectral parameter z for the variable k near this threshold.
    pub fn z_of_k(self, k: Complex64) -> Complex64 {
        match self {
            Threshold::Zero => k * k,
            Threshold::Four => 4.0 - k * k,
        }
    }
}

/// The reduced characteristic block A = I + (𝒱K)_{RR} and its derivative.
///
/// R is the set of rows where 𝒱 is not identically zero. Outside R the rows of F are rows of the
/// identity and those of F' vanish, so det F = det A and Tr(F⁻¹F') = Tr(A⁻¹A').
#[derive(Debug, Clone)]
pub struct ReducedEval {
    pub a: DMatrix<Complex64>,
    pub da: Option<DMatrix<Complex64>>,
}

/// Evaluator of k ↦ F(k) = I + 𝒱·W_{-δ}R₀(z(k))W_{-δ} near a threshold.
#[derive(Debug, Clone)]
pub struct CharFnHandle {
    window: Window,
    delta: f64,
    eps0: f64,
    threshold: Threshold,
    script_v: ComplexMatrix,
    active: Vec<usize>,
    weights: Vec<f64>,
    decay: crate::lattice::Decay,
}

/// Builds F for V (threshold 0) or for -V_J (threshold 4).
pub fn build_char_fn(v: &Perturbation, delta: f64, w: &Window, threshold: Threshold) -> Result<CharFnHandle> {
    v.validate()?;
    let decay = v
        .decay
        .ok_or_else(|| Error::invalid("decay", "a decay certificate (C, delta) is required"))?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid("delta", format!("must be positive, got {delta}")));
    }
    if delta > decay.delta {
        return Err(Error::invalid(
            "delta",
            format!("{delta} exceeds the certificate decay rate {}", decay.delta),
        ));
    }
    let needed = libm::ceil(40.0 / delta) as usize;
    if w.half_width() < needed {
        log::warn!(
            "window N = {} is below ceil(40/delta) = {needed}; the truncation tail may exceed 1e-8",
            w.half_width()
        );
    }
    let installed = match threshold {
        Threshold::Zero => v.clone(),
        Threshold::Four => negate(&apply_j_conjugation(v)),
    };
    let vd = installed.dense_on(w);
    let plus = crate::lattice::weight_diagonal(w, delta, 1)?;
    let sites: Vec<i64> = w.sites().collect();
    for (i, &n) in sites.iter().enumerate() {
        for (j, &m) in sites.iter().enumerate() {
            let bound = decay.c * libm::exp(-decay.delta * (n.unsigned_abs() + m.unsigned_abs()) as f64);
            let x = vd[(i, j)].norm();
            if x > bound * (1.0 + 1e-9) + 1e-12 {
                return Err(Error::Consistency(format!(
                    "|V({n},{m})| = {x:e} violates the certificate bound {bound:e}"
                )));
            }
        }
    }
    let n = w.dim();
    let sv = DMatrix::from_fn(n, n, |i, j| vd[(i, j)] * (plus[i] * plus[j]));
    let active = (0..n)
        .filter(|&i| (0..n).any(|j| sv[(i, j)] != Complex64::new(0.0, 0.0)))
        .collect();
    Ok(CharFnHandle {
        window: *w,
        delta,
        eps0: delta / 16.0,
        threshold,
        script_v: ComplexMatrix::from_dmatrix(sv)?,
        active,
        weights: decay_weights(w, delta),
        decay,
    })
}

impl CharFnHandle {
    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Default radius of the punctured evaluation disk.
    pub fn eps0(&self) -> f64 {
        self.eps0
    }

    pub fn with_eps0(mut self, eps0: f64) -> Result<Self> {
        if !(eps0 > 0.0 && eps0 <= self.delta / 8.0) {
            return Err(Error::invalid("eps0", format!("must lie in (0, delta/8], got {eps0}")));
        }
        self.eps0 = eps0;
        Ok(self)
    }

    pub fn threshold(&self) -> Threshold {
        self.threshold
    }

    /// 𝒱 = W_δ V W_δ (with V replaced by -V_J at threshold 4).
    pub fn script_v(&self) -> &ComplexMatrix {
        &self.script_v
    }

    /// Rows of 𝒱 that are not identically zero.
    pub fn active_rows(&self) -> &[usize] {
        &self.active
    }

    /// Schur-test bound C·Σ_{n∈ℤ} e^{-(δ_V - δ/2)|n|} on ‖𝒱‖.
    pub fn schur_bound(&self) -> f64 {
        let q = libm::exp(-(self.decay.delta - 0.5 * self.delta));
        self.decay.c * (1.0 + q) / (1.0 - q)
    }

    /// Checks that k lies in the domain of the weighted kernel.
    pub fn check(&self, k: Complex64) -> Result<()> {
        check_k(k, self.delta)
    }

    /// F(k) on the full window.
    pub fn eval(&self, k: Complex64) -> Result<ComplexMatrix> {
        self.check(k)?;
        let kk = weighted_dense(k, self.delta, &self.window, false);
        let f = DMatrix::identity(self.window.dim(), self.window.dim()) + self.script_v.as_dmatrix() * kk;
        ComplexMatrix::from_dmatrix(f)
    }

    /// F'(k) = 𝒱·∂ₖ(W_{-δ}R₀W_{-δ}) on the full window.
    pub fn eval_derivative(&self, k: Complex64) -> Result<ComplexMatrix> {
        self.check(k)?;
        let dk = weighted_dense(k, self.delta, &self.window, true);
        ComplexMatrix::from_dmatrix(self.script_v.as_dmatrix() * dk)
    }

    /// The reduced block A(k) and optionally A'(k).
    pub fn reduced(&self, k: Complex64, derivative: bool) -> Result<ReducedEval> {
        self.check(k)?;
        let n = self.window.dim();
        let r = self.active.len();
        let sv = self.script_v.as_dmatrix();
        let build = |row: &[Complex64]| {
            let mut out = DMatrix::from_element(r, r, Complex64::new(0.0, 0.0));
            for (b, &j) in self.active.iter().enumerate() {
                for (a, &i) in self.active.iter().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for l in 0..n {
                        let x = sv[(i, l)];
                        if x != Complex64::new(0.0, 0.0) {
                            acc += x * row[l.abs_diff(j)] * (self.weights[l] * self.weights[j]);
                        }
                    }
                    out[(a, b)] = acc;
                }
            }
            out
        };
        let mut a = build(&kernel_row(k, n, false));
        for i in 0..r {
            a[(i, i)] += ONE;
        }
        let da = derivative.then(|| build(&kernel_row(k, n, true)));
        check_finite(&a, k)?;
        if let Some(d) = &da {
            check_finite(d, k)?;
        }
        Ok(ReducedEval { a, da })
    }

    /// det F(k).
    pub fn det(&self, k: Complex64) -> Result<Complex64> {
        let red = self.reduced(k, false)?;
        if red.a.nrows() == 0 {
            return Ok(ONE);
        }
        match Lu::new(&red.a) {
            Ok(lu) => Ok(lu.det()),
            Err(Error::Singular { .. }) => Ok(Complex64::new(0.0, 0.0)),
            Err(e) => Err(e),
        }
    }

    /// (ln|det F(k)|, arg det F(k)); the argument is a sum of pivot arguments, not reduced.
    pub fn log_det(&self, k: Complex64) -> Result<(f64, f64)> {
        let red = self.reduced(k, false)?;
        if red.a.nrows() == 0 {
            return Ok((0.0, 0.0));
        }
        Ok(Lu::new(&red.a)?.log_det())
    }

    /// Tr(F(k)⁻¹F'(k)) together with an estimate of the smallest singular value of the reduced block.
    pub fn log_derivative(&self, k: Complex64) -> Result<(Complex64, f64)> {
        let red = self.reduced(k, true)?;
        let r = red.a.nrows();
        if r == 0 {
            return Ok((Complex64::new(0.0, 0.0), 1.0));
        }
        let lu = Lu::new(&red.a)?;
        let sol = lu.solve_matrix(red.da.as_ref().expect("derivative requested"));
        let tr = (0..r).map(|i| sol[(i, i)]).sum();
        // F is singular exactly when A is, so σ_min(A) serves as the conditioning probe.
        Ok((tr, lu.min_singular_estimate(8)))
    }

    /// Splits 𝒱·W_{-δ}R₀W_{-δ} into (i/2k)𝒱 w wᵀ and 𝒱·𝒜(k), w_n = e^{-δ|n|/2}.
    pub fn singular_split(&self, k: Complex64) -> Result<(ComplexMatrix, ComplexMatrix)> {
        self.check(k)?;
        let n = self.window.dim();
        let wt = &self.weights;
        let c = I / (2.0 * k);
        let rank_one = DMatrix::from_fn(n, n, |i, j| c * (wt[i] * wt[j]));
        let a = alpha(k);
        let betas: Vec<Complex64> = (0..n as u64).map(|d| beta(k, d)).collect();
        let hol = DMatrix::from_fn(n, n, |i, j| (a + betas[i.abs_diff(j)]) * (wt[i] * wt[j]));
        let sv = self.script_v.as_dmatrix();
        Ok((
            ComplexMatrix::from_dmatrix(sv * rank_one)?,
            ComplexMatrix::from_dmatrix(sv * hol)?,
        ))
    }
}

/// Trace of M*M = ½ w wᵀ, i.e. ½ Σₙ e^{-δ|n|} over the window.
pub fn rank_one_trace(delta: f64, w: &Window) -> f64 {
    0.5 * w.sites().map(|s| libm::exp(-delta * s.unsigned_abs() as f64)).sum::<f64>()
}

/// Singular/holomorphic splitting for V directly (threshold 0).
pub fn singular_split(
    k: Complex64,
    v: &Perturbation,
    delta: f64,
    w: &Window,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    build_char_fn(v, delta, w, Threshold::Zero)?.singular_split(k)
}

fn check_finite(m: &DMatrix<Complex64>, k: Complex64) -> Result<()> {
    if m.iter().all(|x| x.re.is_finite() && x.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::Domain(format!("F({k}) has non-finite entries")))
    }
}

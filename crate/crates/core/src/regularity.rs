//! Regularity of perturbations with respect to A₀: sequence seminorms, exponential decay
//! certificates, the integral classes S, M and D, and the growth of A₀ᵏeₙ.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{build_a0, Perturbation, PerturbationKind, SiteVector, Window};

/// Entries at or below this modulus are ignored by the decay fit.
const FIT_FLOOR: f64 = 1e-14;
/// Relative slack allowed above a fitted decay bound.
const FIT_SLACK: f64 = 1e-10;
/// Slack of [`verify_certificate`].
const CERT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Seminorms {
    pub q0: f64,
    pub q1: f64,
    pub q2: f64,
}

/// q₀ = sup|v(n)|, q₁ = sup|n(v(n+1) - v(n))|, q₂ = sup|n²(v(n+2) - 2v(n+1) + v(n))|, each over
/// the sites n of the window for which all arguments lie in the window.
pub fn seminorms_q(v: &SiteVector, w: &Window) -> Seminorms {
    let n = w.half_width() as i64;
    let x = |s: i64| v.get(s);
    let mut q = Seminorms { q0: 0.0, q1: 0.0, q2: 0.0 };
    for s in -n..=n {
        let f = s as f64;
        q.q0 = q.q0.max(x(s).norm());
        if s < n {
            q.q1 = q.q1.max((f * (x(s + 1) - x(s))).norm());
        }
        if s + 1 < n {
            q.q2 = q.q2.max((f * f * (x(s + 2) - 2.0 * x(s + 1) + x(s))).norm());
        }
    }
    q
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayStatus {
    /// A log-linear fit bounds every sampled entry.
    Fitted,
    /// Support strictly inside the window: any rate works, δ is the configured maximum.
    Capped,
    /// V vanishes on the window.
    Degenerate,
    Failed,
}

/// Fit of |V(n,m)| ≤ C e^{-δ(|n|+|m|)}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    #[serde(rename = "C")]
    pub c: f64,
    pub delta: f64,
    /// Largest |log|V| - (log C - δx)| over the sampled entries.
    pub residual: f64,
    /// Largest relative excess |V|/(C e^{-δx}) - 1 (negative when every entry is strictly below).
    pub slack: f64,
    pub status: DecayStatus,
}

impl DecayFit {
    pub fn passed(&self) -> bool {
        matches!(self.status, DecayStatus::Fitted | DecayStatus::Capped | DecayStatus::Degenerate)
    }
}

/// Fits log y = log C - δx over samples (x, y) with y > 1e-14. `interior` says whether the
/// samples stop short of the window edge, which permits the capped certificate.
fn fit_exponential(samples: &[(f64, f64)], interior: bool, delta_max: f64) -> DecayFit {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|p| p.1 > FIT_FLOOR)
        .map(|&(x, y)| (x, libm::log(y)))
        .collect();
    if pts.is_empty() {
        return DecayFit {
            c: 0.0,
            delta: delta_max,
            residual: 0.0,
            slack: -1.0,
            status: DecayStatus::Degenerate,
        };
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / m, sy / m);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let (delta, logc) = if sxx > 0.0 {
        let slope = sxy / sxx;
        (-slope, my - slope * mx)
    } else {
        (0.0, my)
    };
    let misfit = |d: f64, lc: f64| pts.iter().map(|p| p.1 - (lc - d * p.0)).fold(f64::NEG_INFINITY, f64::max);
    let residual = pts.iter().map(|p| (p.1 - (logc - delta * p.0)).abs()).fold(0.0, f64::max);
    let slack = libm::expm1(misfit(delta, logc));
    if delta > 0.0 && slack <= FIT_SLACK {
        return DecayFit {
            c: libm::exp(logc),
            delta,
            residual,
            slack,
            status: DecayStatus::Fitted,
        };
    }
    if interior {
        // Finite support: C = max |V| e^{δx} is a valid bound for any δ.
        let logc = pts.iter().map(|p| p.1 + delta_max * p.0).fold(f64::NEG_INFINITY, f64::max);
        return DecayFit {
            c: libm::exp(logc),
            delta: delta_max,
            residual: pts.iter().map(|p| (p.1 - (logc - delta_max * p.0)).abs()).fold(0.0, f64::max),
            slack: libm::expm1(misfit(delta_max, logc)),
            status: DecayStatus::Capped,
        };
    }
    DecayFit {
        c: libm::exp(logc),
        delta,
        residual,
        slack,
        status: DecayStatus::Failed,
    }
}

fn entry_samples(v: &Perturbation, w: &Window) -> (Vec<(f64, f64)>, bool) {
    let n = w.half_width() as i64;
    let mut out = Vec::new();
    let mut edge = false;
    let mut push = |a: i64, b: i64, out: &mut Vec<(f64, f64)>| {
        let y = v.entry(a, b).norm();
        if y > FIT_FLOOR && (a.abs() == n || b.abs() == n) {
            edge = true;
        }
        out.push(((a.abs() + b.abs()) as f64, y));
    };
    match v.kind {
        PerturbationKind::Diagonal { .. } => w.sites().for_each(|s| push(s, s, &mut out)),
        _ => {
            for a in w.sites() {
                for b in w.sites() {
                    push(a, b, &mut out);
                }
            }
        }
    }
    (out, !edge)
}

/// Least-squares decay certificate of V on the window, with δ capped at `delta_max`.
pub fn decay_certificate(v: &Perturbation, w: &Window, delta_max: f64) -> Result<DecayFit> {
    if !(delta_max.is_finite() && delta_max > 0.0) {
        return Err(Error::invalid("delta_max", "must be positive"));
    }
    v.validate()?;
    let (samples, interior) = entry_samples(v, w);
    Ok(fit_exponential(&samples, interior, delta_max))
}

/// Decay fit of a sequence against e^{-δ|n|}.
pub fn sequence_decay(v: &SiteVector, w: &Window, delta_max: f64) -> DecayFit {
    let n = w.half_width() as i64;
    let samples: Vec<(f64, f64)> = w.sites().map(|s| (s.abs() as f64, v.get(s).norm())).collect();
    let interior = v.get(-n).norm() <= FIT_FLOOR && v.get(n).norm() <= FIT_FLOOR;
    fit_exponential(&samples, interior, delta_max)
}

/// Largest |V(n,m)| / (C e^{-δ(|n|+|m|)}) on the window for the declared certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateCheck {
    pub max_ratio: f64,
    pub worst: (i64, i64),
    pub holds: bool,
}

pub fn verify_certificate(v: &Perturbation, w: &Window) -> Result<CertificateCheck> {
    let d = v
        .decay
        .ok_or_else(|| Error::invalid("decay", "no certificate declared"))?;
    let (mut max_ratio, mut worst) = (0.0_f64, (0, 0));
    let mut visit = |a: i64, b: i64| {
        let x = v.entry(a, b).norm();
        if x == 0.0 {
            return;
        }
        let r = x / (d.c * libm::exp(-d.delta * (a.abs() + b.abs()) as f64));
        if r > max_ratio {
            max_ratio = r;
            worst = (a, b);
        }
    };
    match v.kind {
        PerturbationKind::Diagonal { .. } => w.sites().for_each(|s| visit(s, s)),
        _ => {
            for a in w.sites() {
                for b in w.sites() {
                    visit(a, b);
                }
            }
        }
    }
    Ok(CertificateCheck {
        max_ratio,
        worst,
        holds: max_ratio <= 1.0 + CERT_SLACK,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SequenceClass {
    S,
    M,
    D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailKind {
    /// Integrand vanishes beyond the window.
    Zero,
    /// Analytic bound from an exponential decay fit of the sequence.
    Exponential,
    /// Support ends inside the window; the tail is integrated exactly from the window data.
    FiniteSupport,
    /// Extrapolation of a power law r^{-p} fitted to the end of the integrand.
    PowerLaw,
    /// Fitted exponent p ≤ 1.
    Divergent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassOptions {
    pub threshold: f64,
    /// Declared pass needs tail < tail_fraction · integral.
    pub tail_fraction: f64,
    pub delta_max: f64,
}

impl Default for ClassOptions {
    fn default() -> Self {
        ClassOptions {
            threshold: 1e3,
            tail_fraction: 0.1,
            delta_max: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassVerdict {
    pub class: SequenceClass,
    pub a: f64,
    pub b: f64,
    /// Upper end of the truncated r-range.
    pub r_max: f64,
    pub integral: f64,
    pub tail: f64,
    pub tail_kind: TailKind,
    pub exponent: Option<f64>,
    pub verdict: Verdict,
}

/// Integrand of the class on the block of sites with ar ≤ |n| ≤ br.
fn block_value(v: &SiteVector, class: SequenceClass, lo: i64, hi: i64) -> f64 {
    let sites = (lo..=hi).flat_map(|m| if m == 0 { [Some(0), None] } else { [Some(m), Some(-m)] }).flatten();
    match class {
        SequenceClass::S => sites.map(|s| v.get(s).norm()).fold(0.0, f64::max),
        SequenceClass::M => sites.map(|s| (v.get(s + 1) - v.get(s)).norm()).fold(0.0, f64::max),
        SequenceClass::D => libm::sqrt(sites.map(|s| v.get(s).norm_sqr()).sum::<f64>()),
    }
}

fn integrand(v: &SiteVector, class: SequenceClass, a: f64, b: f64, r: f64) -> f64 {
    let lo = libm::ceil(a * r - 1e-12) as i64;
    let hi = libm::floor(b * r + 1e-12) as i64;
    if hi < lo {
        return 0.0;
    }
    block_value(v, class, lo, hi)
}

/// ∫ g(r) dr over [r_min, r_max]; g is constant between the points where ar or br is an integer.
fn piecewise_integral(v: &SiteVector, class: SequenceClass, a: f64, b: f64, r_min: f64, r_max: f64) -> f64 {
    let mut cuts = alloc::vec![r_min, r_max];
    for c in [a, b] {
        let mut k = libm::ceil(c * r_min) as i64;
        while (k as f64) / c < r_max {
            let r = k as f64 / c;
            if r > r_min {
                cuts.push(r);
            }
            k += 1;
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-13);
    cuts.windows(2)
        .map(|p| (p[1] - p[0]) * integrand(v, class, a, b, 0.5 * (p[0] + p[1])))
        .sum()
}

/// Truncated class integral ∫₁^{N/b} g(r) dr with a tail estimate.
///
/// Integrals run over |n| so that both half-lines count. The tail comes from an exponential
/// decay fit of v when one exists, otherwise from a power law fitted to the nonincreasing
/// envelope of the integrand on [r_max/4, r_max].
pub fn class_membership(
    v: &SiteVector,
    w: &Window,
    class: SequenceClass,
    a: f64,
    b: f64,
    opts: &ClassOptions,
) -> Result<ClassVerdict> {
    if !(a > 0.0 && b > a && b.is_finite()) {
        return Err(Error::invalid("a, b", format!("need 0 < a < b, got ({a}, {b})")));
    }
    let reach = match class {
        SequenceClass::M => w.half_width() as f64 - 1.0,
        _ => w.half_width() as f64,
    };
    let r_max = reach / b;
    if r_max < 2.0 {
        return Err(Error::invalid(
            "window",
            format!("N/b = {r_max:.3} < 2 leaves no r-range for the class integral"),
        ));
    }
    let integral = piecewise_integral(v, class, a, b, 1.0, r_max);
    let fit = sequence_decay(v, w, opts.delta_max);
    let mut samples: Vec<(f64, f64)> = (0..16)
        .map(|j| {
            let r = r_max * libm::pow(4.0, j as f64 / 15.0 - 1.0);
            (r, integrand(v, class, a, b, r))
        })
        .collect();
    // Nonincreasing envelope, so isolated zero blocks do not distort the fit.
    for j in (0..samples.len() - 1).rev() {
        samples[j].1 = samples[j].1.max(samples[j + 1].1);
    }
    let (tail, tail_kind, exponent) = if samples.iter().all(|s| s.1 == 0.0) {
        (0.0, TailKind::Zero, None)
    } else if fit.status == DecayStatus::Capped {
        // Numerically finite support: blocks past N/a lie outside the window and vanish.
        let r_end = w.half_width() as f64 / a + 1.0;
        (piecewise_integral(v, class, a, b, r_max, r_end), TailKind::FiniteSupport, None)
    } else if fit.status == DecayStatus::Fitted {
        let (c, d) = (fit.c, fit.delta);
        let e = libm::exp(-d * a * r_max) / (d * a);
        let scale = match class {
            SequenceClass::S => c,
            SequenceClass::M => c * (1.0 + libm::exp(d)),
            SequenceClass::D => c * libm::sqrt(2.0 / -libm::expm1(-2.0 * d)),
        };
        (scale * e, TailKind::Exponential, None)
    } else {
        let pts: Vec<(f64, f64)> = samples
            .iter()
            .filter(|s| s.1 > 0.0)
            .map(|s| (libm::log(s.0), libm::log(s.1)))
            .collect();
        let m = pts.len() as f64;
        let (mx, my) = pts.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0 / m, acc.1 + p.1 / m));
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let p = if sxx > 0.0 { -sxy / sxx } else { 0.0 };
        if p <= 1.0 {
            (f64::INFINITY, TailKind::Divergent, Some(p))
        } else {
            // Anchor the power law at the largest value over the fit range to keep it an upper envelope.
            let k = pts.iter().map(|q| q.1 + p * q.0).fold(f64::NEG_INFINITY, f64::max);
            (libm::exp(k) * libm::pow(r_max, 1.0 - p) / (p - 1.0), TailKind::PowerLaw, Some(p))
        }
    };
    let verdict = if tail_kind == TailKind::Divergent || integral >= opts.threshold {
        Verdict::Fail
    } else if tail <= opts.tail_fraction * integral && integral + tail < opts.threshold {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    };
    Ok(ClassVerdict {
        class,
        a,
        b,
        r_max,
        integral,
        tail,
        tail_kind,
        exponent,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub k: usize,
    pub norm: f64,
    pub bound: f64,
    /// ‖A₀ᵏeₙ‖ / (k! 2ᵏ), the k-th term of the exponential series at radius 1/2.
    pub series_term: f64,
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|j| libm::log(j as f64)).sum()
}

/// ‖A₀ᵏeₙ‖ for k ≤ k_max against 2ᵏ(|n|+k-1)!/(|n|-1)!; for n = 0 the bound used is 2ᵏk!,
/// which is the |n| = 1 value.
pub fn analytic_vector_growth(n: i64, k_max: usize, w: &Window) -> Result<Vec<GrowthRow>> {
    let need = n.unsigned_abs() as usize + k_max + 2;
    if w.half_width() < need {
        return Err(Error::Pollution(format!(
            "A₀^{k_max} e_{n} reaches site {}; the window needs N >= {need}",
            n.unsigned_abs() as usize + k_max
        )));
    }
    let start = w
        .index(n)
        .ok_or_else(|| Error::invalid("n", "site outside the window"))?;
    let a0 = build_a0(w);
    let mut x = alloc::vec![Complex64::new(0.0, 0.0); w.dim()];
    x[start] = Complex64::new(1.0, 0.0);
    let m = n.unsigned_abs() as usize;
    let mut rows = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let norm = libm::sqrt(x.iter().map(|v| v.norm_sqr()).sum::<f64>());
        let ln_bound = if m == 0 {
            ln_factorial(k)
        } else {
            ln_factorial(m + k - 1) - ln_factorial(m - 1)
        } + k as f64 * core::f64::consts::LN_2;
        let ln_term = -(ln_factorial(k) + k as f64 * core::f64::consts::LN_2);
        rows.push(GrowthRow {
            k,
            norm,
            bound: libm::exp(ln_bound),
            series_term: norm * libm::exp(ln_term),
        });
        if k < k_max {
            x = a0.matvec(&x);
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassFlag {
    pub verdict: Verdict,
    pub integral: Option<f64>,
    pub tail: Option<f64>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    /// Seminorms of the diagonal; `None` for non-diagonal V.
    pub seminorms: Option<Seminorms>,
    pub decay_fit: DecayFit,
    pub class_flags: BTreeMap<String, ClassFlag>,
}

fn flag(v: &ClassVerdict) -> ClassFlag {
    ClassFlag {
        verdict: v.verdict,
        integral: Some(v.integral),
        tail: Some(v.tail),
        note: format!("{:?} tail, r in [1, {:.3}]", v.tail_kind, v.r_max),
    }
}

/// Seminorms, decay fit and class flags S, M (diagonal V), D (low-rank V) and ade.
pub fn regularity_report(v: &Perturbation, w: &Window, a: f64, b: f64, opts: &ClassOptions) -> Result<RegularityReport> {
    let decay_fit = decay_certificate(v, w, opts.delta_max)?;
    let mut class_flags = BTreeMap::new();
    class_flags.insert(
        String::from("ade"),
        ClassFlag {
            verdict: if decay_fit.passed() { Verdict::Pass } else { Verdict::Fail },
            integral: None,
            tail: None,
            note: format!("{:?}: C = {:e}, delta = {}", decay_fit.status, decay_fit.c, decay_fit.delta),
        },
    );
    let mut seminorms = None;
    match &v.kind {
        PerturbationKind::Diagonal { offset, values } => {
            let first = offset.unwrap_or(-((values.len() as i64 - 1) / 2));
            let seq = SiteVector::new(first, values.clone());
            seminorms = Some(seminorms_q(&seq, w));
            for class in [SequenceClass::S, SequenceClass::M] {
                let r = class_membership(&seq, w, class, a, b, opts)?;
                class_flags.insert(format!("{class:?}"), flag(&r));
            }
        }
        PerturbationKind::LowRank { terms } => {
            let mut worst: Option<ClassVerdict> = None;
            for t in terms {
                for vec in [&t.left, &t.right] {
                    let r = class_membership(vec, w, SequenceClass::D, a, b, opts)?;
                    let rank = |x: Verdict| match x {
                        Verdict::Pass => 0,
                        Verdict::Inconclusive => 1,
                        Verdict::Fail => 2,
                    };
                    if worst.map_or(true, |wv| rank(r.verdict) > rank(wv.verdict) || r.integral > wv.integral) {
                        worst = Some(r);
                    }
                }
            }
            if let Some(r) = worst {
                class_flags.insert(String::from("D"), flag(&r));
            }
        }
        PerturbationKind::Dense { .. } => {}
    }
    Ok(RegularityReport {
        seminorms,
        decay_fit,
        class_flags,
    })
}

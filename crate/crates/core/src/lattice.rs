//! Finite lattice windows and the operators living on them.

use alloc::format;
use alloc::vec::Vec;
use core::ops::RangeInclusive;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{eigvalsh, ComplexMatrix};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Sites `-N..=N` of ℤ, dimension `2N + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    half_width: usize,
}

impl Window {
    pub fn new(half_width: usize) -> Result<Self> {
        if half_width == 0 {
            return Err(Error::invalid("window", "half-width N must be at least 1"));
        }
        Ok(Window { half_width })
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn dim(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn sites(&self) -> RangeInclusive<i64> {
        let n = self.half_width as i64;
        -n..=n
    }

    pub fn index(&self, site: i64) -> Option<usize> {
        let n = self.half_width as i64;
        (site.abs() <= n).then(|| (site + n) as usize)
    }

    pub fn site(&self, index: usize) -> i64 {
        index as i64 - self.half_width as i64
    }

    pub fn inflate(&self, margin: usize) -> Window {
        Window {
            half_width: self.half_width + margin,
        }
    }

    /// Restrict a matrix on `outer` (which must contain `self`) to this window.
    pub fn restrict(&self, outer: &Window, m: &ComplexMatrix) -> ComplexMatrix {
        assert!(outer.half_width >= self.half_width && m.dim() == outer.dim());
        let lo = outer.half_width - self.half_width;
        m.submatrix(lo, lo + self.dim())
    }
}

/// Values on consecutive sites starting at `offset`; zero elsewhere.
///
/// When `offset` is absent the values are centred on site 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteVector {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<i64>,
    pub values: Vec<Complex64>,
}

impl SiteVector {
    pub fn new(offset: i64, values: Vec<Complex64>) -> Self {
        SiteVector {
            offset: Some(offset),
            values,
        }
    }

    /// The unit vector e_site.
    pub fn unit(site: i64) -> Self {
        Self::new(site, alloc::vec![Complex64::new(1.0, 0.0)])
    }

    pub fn from_fn(w: &Window, mut f: impl FnMut(i64) -> Complex64) -> Self {
        Self::new(-(w.half_width as i64), w.sites().map(&mut f).collect())
    }

    pub fn first_site(&self) -> i64 {
        self.offset.unwrap_or(-((self.values.len() as i64 - 1) / 2))
    }

    pub fn get(&self, site: i64) -> Complex64 {
        let j = site - self.first_site();
        if j < 0 {
            return ZERO;
        }
        self.values.get(j as usize).copied().unwrap_or(ZERO)
    }

    pub fn sites(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let first = self.first_site();
        self.values.iter().enumerate().map(move |(j, v)| (first + j as i64, *v))
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.values.iter().map(|v| v.norm_sqr()).sum())
    }

    /// Values on the window, plus the squared mass that fell outside it.
    pub fn on_window(&self, w: &Window) -> (Vec<Complex64>, f64) {
        let mut out = alloc::vec![ZERO; w.dim()];
        let mut lost = 0.0;
        for (s, v) in self.sites() {
            match w.index(s) {
                Some(i) => out[i] = v,
                None => lost += v.norm_sqr(),
            }
        }
        (out, lost)
    }

    /// Multiplies odd sites by -1 (the unitary J).
    pub fn alternate(&self) -> Self {
        SiteVector {
            offset: Some(self.first_site()),
            values: self
                .sites()
                .map(|(s, v)| if s.rem_euclid(2) == 1 { -v } else { v })
                .collect(),
        }
    }

    fn validate(&self, name: &'static str) -> Result<()> {
        if let Some(j) = self.values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::invalid(name, format!("entry {j} is not finite")));
        }
        Ok(())
    }
}

/// Square block of a matrix indexed by site pairs, rows and columns starting at `offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteMatrix {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<i64>,
    /// Row-major rows of the block.
    pub entries: Vec<Vec<Complex64>>,
}

impl SiteMatrix {
    pub fn new(offset: i64, entries: Vec<Vec<Complex64>>) -> Self {
        SiteMatrix {
            offset: Some(offset),
            entries,
        }
    }

    pub fn from_fn(w: &Window, mut f: impl FnMut(i64, i64) -> Complex64) -> Self {
        let rows = w.sites().map(|n| w.sites().map(|m| f(n, m)).collect()).collect();
        Self::new(-(w.half_width as i64), rows)
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn first_site(&self) -> i64 {
        self.offset.unwrap_or(-((self.size() as i64 - 1) / 2))
    }

    pub fn get(&self, n: i64, m: i64) -> Complex64 {
        block_get(self.offset, &self.entries, n, m)
    }

    fn validate(&self) -> Result<()> {
        let s = self.size();
        for (i, row) in self.entries.iter().enumerate() {
            if row.len() != s {
                return Err(Error::invalid(
                    "entries",
                    format!("row {i} has {} entries, expected {s}", row.len()),
                ));
            }
            if let Some(j) = row.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
                return Err(Error::invalid("entries", format!("entry ({i}, {j}) is not finite")));
            }
        }
        Ok(())
    }
}

/// One term `coefficient |left⟩⟨right|` of a low-rank perturbation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowRankTerm {
    pub coefficient: Complex64,
    pub left: SiteVector,
    pub right: SiteVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PerturbationKind {
    Diagonal {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        offset: Option<i64>,
        values: Vec<Complex64>,
    },
    Dense {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        offset: Option<i64>,
        entries: Vec<Vec<Complex64>>,
    },
    #[serde(rename = "lowrank")]
    LowRank { terms: Vec<LowRankTerm> },
}

/// Certificate for |V(n,m)| <= C e^{-δ(|n|+|m|)}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decay {
    #[serde(rename = "C")]
    pub c: f64,
    pub delta: f64,
}

/// Perturbation V of H₀, given by its matrix in the canonical basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    #[serde(flatten)]
    pub kind: PerturbationKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<Decay>,
}

impl Perturbation {
    pub fn zero() -> Self {
        Self::diagonal(0, alloc::vec![])
    }

    pub fn diagonal(offset: i64, values: Vec<Complex64>) -> Self {
        Perturbation {
            kind: PerturbationKind::Diagonal {
                offset: Some(offset),
                values,
            },
            decay: None,
        }
    }

    pub fn dense(block: SiteMatrix) -> Self {
        Perturbation {
            kind: PerturbationKind::Dense {
                offset: Some(block.first_site()),
                entries: block.entries,
            },
            decay: None,
        }
    }

    pub fn low_rank(terms: Vec<LowRankTerm>) -> Self {
        Perturbation {
            kind: PerturbationKind::LowRank { terms },
            decay: None,
        }
    }

    /// The rank-one projection `coefficient |e_site⟩⟨e_site|`.
    pub fn site_projection(site: i64, coefficient: Complex64) -> Self {
        Self::diagonal(site, alloc::vec![coefficient])
    }

    pub fn with_decay(mut self, c: f64, delta: f64) -> Self {
        self.decay = Some(Decay { c, delta });
        self
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            PerturbationKind::Diagonal { values, offset } => SiteVector {
                offset: *offset,
                values: values.clone(),
            }
            .validate("values")?,
            PerturbationKind::Dense { offset, entries } => SiteMatrix {
                offset: *offset,
                entries: entries.clone(),
            }
            .validate()?,
            PerturbationKind::LowRank { terms } => {
                for t in terms {
                    if !(t.coefficient.re.is_finite() && t.coefficient.im.is_finite()) {
                        return Err(Error::invalid("coefficient", "must be finite"));
                    }
                    t.left.validate("left")?;
                    t.right.validate("right")?;
                }
            }
        }
        if let Some(d) = self.decay {
            if !(d.c > 0.0 && d.c.is_finite()) {
                return Err(Error::invalid("decay.C", format!("must be positive, got {}", d.c)));
            }
            if !(d.delta > 0.0 && d.delta.is_finite()) {
                return Err(Error::invalid("decay.delta", format!("must be positive, got {}", d.delta)));
            }
        }
        Ok(())
    }

    /// Matrix element V(n, m) on ℤ.
    pub fn entry(&self, n: i64, m: i64) -> Complex64 {
        match &self.kind {
            PerturbationKind::Diagonal { offset, values } => {
                if n != m {
                    return ZERO;
                }
                let first = offset.unwrap_or(-((values.len() as i64 - 1) / 2));
                let j = n - first;
                if j < 0 {
                    ZERO
                } else {
                    values.get(j as usize).copied().unwrap_or(ZERO)
                }
            }
            PerturbationKind::Dense { offset, entries } => block_get(*offset, entries, n, m),
            PerturbationKind::LowRank { terms } => terms
                .iter()
                .map(|t| t.coefficient * t.left.get(n) * t.right.get(m).conj())
                .sum(),
        }
    }

    /// Smallest and largest sites carrying a nonzero entry (rows or columns).
    pub fn support(&self) -> Option<(i64, i64)> {
        let span = |first: i64, len: usize| (len > 0).then(|| (first, first + len as i64 - 1));
        let merge = |a: Option<(i64, i64)>, b: Option<(i64, i64)>| match (a, b) {
            (Some(x), Some(y)) => Some((x.0.min(y.0), x.1.max(y.1))),
            (x, None) => x,
            (None, y) => y,
        };
        match &self.kind {
            PerturbationKind::Diagonal { offset, values } => {
                span(offset.unwrap_or(-((values.len() as i64 - 1) / 2)), values.len())
            }
            PerturbationKind::Dense { offset, entries } => {
                span(offset.unwrap_or(-((entries.len() as i64 - 1) / 2)), entries.len())
            }
            PerturbationKind::LowRank { terms } => terms.iter().fold(None, |acc, t| {
                let l = span(t.left.first_site(), t.left.values.len());
                let r = span(t.right.first_site(), t.right.values.len());
                merge(acc, merge(l, r))
            }),
        }
    }

    /// Dense realization on the window; entries outside the window are dropped.
    pub fn dense_on(&self, w: &Window) -> ComplexMatrix {
        let n = w.dim();
        let mut m = nalgebra::DMatrix::from_element(n, n, ZERO);
        match &self.kind {
            PerturbationKind::Diagonal { .. } => {
                for s in w.sites() {
                    let i = w.index(s).unwrap();
                    m[(i, i)] = self.entry(s, s);
                }
            }
            PerturbationKind::Dense { .. } => {
                for a in w.sites() {
                    for b in w.sites() {
                        m[(w.index(a).unwrap(), w.index(b).unwrap())] = self.entry(a, b);
                    }
                }
            }
            PerturbationKind::LowRank { terms } => {
                for t in terms {
                    let (l, lost_l) = t.left.on_window(w);
                    let (r, lost_r) = t.right.on_window(w);
                    for (lost, v) in [(lost_l, &t.left), (lost_r, &t.right)] {
                        let total = v.norm();
                        if total > 0.0 && libm::sqrt(lost) > 1e-10 * total {
                            log::warn!(
                                "low-rank vector loses {:.3e} of its norm {:.3e} outside the window N = {}",
                                libm::sqrt(lost),
                                total,
                                w.half_width()
                            );
                        }
                    }
                    for j in 0..n {
                        let rc = r[j].conj() * t.coefficient;
                        if rc == ZERO {
                            continue;
                        }
                        for i in 0..n {
                            m[(i, j)] += l[i] * rc;
                        }
                    }
                }
            }
        }
        ComplexMatrix::from_dmatrix(m).expect("perturbation entries are validated finite")
    }
}

fn block_get(offset: Option<i64>, entries: &[Vec<Complex64>], n: i64, m: i64) -> Complex64 {
    let f = offset.unwrap_or(-((entries.len() as i64 - 1) / 2));
    let (i, j) = (n - f, m - f);
    if i < 0 || j < 0 {
        return ZERO;
    }
    entries
        .get(i as usize)
        .and_then(|r| r.get(j as usize))
        .copied()
        .unwrap_or(ZERO)
}

/// H₀ = tridiag(-1, 2, -1) with Dirichlet truncation.
pub fn build_h0(w: &Window) -> ComplexMatrix {
    let n = w.dim();
    ComplexMatrix::from_fn(n, |i, j| {
        if i == j {
            Complex64::new(2.0, 0.0)
        } else if i.abs_diff(j) == 1 {
            Complex64::new(-1.0, 0.0)
        } else {
            ZERO
        }
    })
    .expect("finite")
}

/// The conjugate operator A₀ with A₀eₙ = i(n - 1/2)e_{n-1} - i(n + 1/2)e_{n+1}.
///
/// This sign makes i[A₀, H₀] = 4H₀ - H₀² on interior rows.
pub fn build_a0(w: &Window) -> ComplexMatrix {
    let n = w.dim();
    ComplexMatrix::from_fn(n, |i, j| {
        let m = w.site(j) as f64;
        if i + 1 == j {
            Complex64::new(0.0, m - 0.5)
        } else if j + 1 == i {
            Complex64::new(0.0, -(m + 0.5))
        } else {
            ZERO
        }
    })
    .expect("finite")
}

/// Diagonal weight W_{±δ} with entries e^{±(δ/2)|n|}.
pub fn build_weight(w: &Window, delta: f64, sign: i8) -> Result<ComplexMatrix> {
    let d = weight_diagonal(w, delta, sign)?;
    ComplexMatrix::from_diagonal(&d.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>())
}

/// Diagonal entries of W_{±δ}.
pub fn weight_diagonal(w: &Window, delta: f64, sign: i8) -> Result<Vec<f64>> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid("delta", format!("must be positive, got {delta}")));
    }
    if sign != 1 && sign != -1 {
        return Err(Error::invalid("sign", "must be +1 or -1"));
    }
    if delta * w.half_width() as f64 > 1400.0 {
        return Err(Error::Overflow(format!(
            "delta * N = {:.1} exceeds 1400; shrink the window or delta",
            delta * w.half_width() as f64
        )));
    }
    Ok(w
        .sites()
        .map(|s| {
            let e = libm::exp(0.5 * delta * s.unsigned_abs() as f64);
            if sign == 1 {
                e
            } else {
                1.0 / e
            }
        })
        .collect())
}

/// V_J = J V J⁻¹ with (Jx)(n) = (-1)ⁿx(n), so V_J(n,m) = (-1)^{n+m} V(n,m).
pub fn apply_j_conjugation(v: &Perturbation) -> Perturbation {
    let kind = match &v.kind {
        PerturbationKind::Diagonal { .. } => v.kind.clone(),
        PerturbationKind::Dense { offset, entries } => {
            let first = offset.unwrap_or(-((entries.len() as i64 - 1) / 2));
            let rows = entries
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    row.iter()
                        .enumerate()
                        .map(|(j, x)| {
                            if (2 * first + i as i64 + j as i64).rem_euclid(2) == 1 {
                                -x
                            } else {
                                *x
                            }
                        })
                        .collect()
                })
                .collect();
            PerturbationKind::Dense {
                offset: Some(first),
                entries: rows,
            }
        }
        PerturbationKind::LowRank { terms } => PerturbationKind::LowRank {
            terms: terms
                .iter()
                .map(|t| LowRankTerm {
                    coefficient: t.coefficient,
                    left: t.left.alternate(),
                    right: t.right.alternate(),
                })
                .collect(),
        },
    };
    Perturbation { kind, decay: v.decay }
}

/// The negated perturbation -V, keeping the certificate.
pub fn negate(v: &Perturbation) -> Perturbation {
    let kind = match &v.kind {
        PerturbationKind::Diagonal { offset, values } => PerturbationKind::Diagonal {
            offset: *offset,
            values: values.iter().map(|x| -x).collect(),
        },
        PerturbationKind::Dense { offset, entries } => PerturbationKind::Dense {
            offset: *offset,
            entries: entries.iter().map(|r| r.iter().map(|x| -x).collect()).collect(),
        },
        PerturbationKind::LowRank { terms } => PerturbationKind::LowRank {
            terms: terms
                .iter()
                .map(|t| LowRankTerm {
                    coefficient: -t.coefficient,
                    ..t.clone()
                })
                .collect(),
        },
    };
    Perturbation { kind, decay: v.decay }
}

/// H_V = H₀ + V on the window.
pub fn assemble_hv(w: &Window, v: &Perturbation) -> Result<ComplexMatrix> {
    v.validate()?;
    if let PerturbationKind::Dense { entries, .. } = &v.kind {
        if entries.len() > w.dim() {
            return Err(Error::DimensionMismatch {
                expected: w.dim(),
                found: entries.len(),
            });
        }
    }
    Ok(&build_h0(w) + &v.dense_on(w))
}

/// (σ₋, σ₊): extremal eigenvalues of Im H = (H - H*)/(2i).
pub fn numerical_range_bounds(h: &ComplexMatrix) -> Result<(f64, f64)> {
    let im = h.imag_part();
    if im.max_abs() == 0.0 {
        return Ok((0.0, 0.0));
    }
    let e = eigvalsh(&im)?;
    Ok((e[0], e[e.len() - 1]))
}

/// i[A₀, Re H_V] restricted to the window, computed on a window two sites wider so that no
/// Dirichlet boundary terms enter. With `v = None` this is 4H₀ - H₀² restricted.
pub fn boundary_free_commutator(w: &Window, v: Option<&Perturbation>) -> Result<ComplexMatrix> {
    let outer = w.inflate(2);
    let h = match v {
        Some(v) => assemble_hv(&outer, v)?,
        None => build_h0(&outer),
    };
    let a = build_a0(&outer);
    let re = h.real_part();
    let c = (&(&a * &re) - &(&re * &a)).scale(Complex64::new(0.0, 1.0));
    Ok(w.restrict(&outer, &c))
}

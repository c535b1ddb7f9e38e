//! Characteristic values of k ↦ F(k): contour indices, determinant winding, and the adaptive
//! search for resonances in the punctured disk around a threshold.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{assemble_hv, Perturbation, Window};
use crate::numerics::{
    cut_distance, eigvals_dense, gauss_legendre, par_map, principal_sqrt, segment_integral, ComplexMatrix,
    Contour,
};
use crate::resolvent::{build_char_fn, CharFnHandle, Threshold};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Smallest admissible singular value of F at a contour node.
pub const NODE_SIGMA_MIN: f64 = 1e-10;
/// Maximal rounding residual of an accepted index.
pub const INDEX_RESIDUAL: f64 = 0.1;
/// Maximal number of node doublings.
pub const MAX_DOUBLINGS: usize = 4;

/// What the index routines need from a holomorphic matrix function.
pub trait CharacteristicFunction {
    /// Tr(F(k)⁻¹F'(k)) and an estimate of the smallest singular value of F(k).
    fn log_derivative(&self, k: Complex64) -> Result<(Complex64, f64)>;
    /// (ln|det F(k)|, arg det F(k)) with an unreduced argument.
    fn log_det(&self, k: Complex64) -> Result<(f64, f64)>;
}

impl CharacteristicFunction for CharFnHandle {
    fn log_derivative(&self, k: Complex64) -> Result<(Complex64, f64)> {
        CharFnHandle::log_derivative(self, k)
    }

    fn log_det(&self, k: Complex64) -> Result<(f64, f64)> {
        CharFnHandle::log_det(self, k)
    }
}

/// Result of the logarithmic-residue quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourIndex {
    pub raw: Complex64,
    pub index: i64,
    pub residual: f64,
    pub nodes: usize,
    pub min_sigma: f64,
}

fn node_values<F>(h: &F, nodes: &[Complex64], offset: usize, stride: usize) -> Result<(Vec<Complex64>, f64)>
where
    F: CharacteristicFunction + Sync + ?Sized,
{
    let results = par_map(nodes, |&k| h.log_derivative(k));
    let mut out = Vec::with_capacity(nodes.len());
    let mut min_sigma = f64::INFINITY;
    for (j, (r, &k)) in results.into_iter().zip(nodes).enumerate() {
        let index = offset + stride * j;
        let (tr, sigma) = r.map_err(|e| Error::NodeFailure {
            index,
            point: k,
            reason: format!("{e}"),
        })?;
        if !(sigma > NODE_SIGMA_MIN) {
            return Err(Error::NodeFailure {
                index,
                point: k,
                reason: format!("smallest singular value {sigma:e} <= {NODE_SIGMA_MIN:e}: characteristic value on the contour"),
            });
        }
        if !(tr.re.is_finite() && tr.im.is_finite()) {
            return Err(Error::NodeFailure {
                index,
                point: k,
                reason: "non-finite trace".into(),
            });
        }
        min_sigma = min_sigma.min(sigma);
        out.push(tr);
    }
    Ok((out, min_sigma))
}

/// (1/2πi)∮ Tr(F⁻¹F') dk over the circle, with node doubling until two successive estimates
/// differ by less than 1e-3 and the rounding residual is below 0.1.
pub fn contour_index<F>(h: &F, c: &Contour) -> Result<ContourIndex>
where
    F: CharacteristicFunction + Sync + ?Sized,
{
    let center = c.center();
    let mut n = c.node_count();
    let nodes = c.nodes();
    let (vals, mut min_sigma) = node_values(h, &nodes, 0, 1)?;
    let mut sum: Complex64 = vals.iter().zip(&nodes).map(|(v, z)| v * (z - center)).sum();
    let mut estimate = sum / n as f64;
    for _ in 0..MAX_DOUBLINGS {
        let finer = c.with_nodes(2 * n)?;
        let new_nodes: Vec<Complex64> = (0..n).map(|j| finer.node(2 * j + 1)).collect();
        let (vals, s) = node_values(h, &new_nodes, 1, 2)?;
        min_sigma = min_sigma.min(s);
        sum += vals.iter().zip(&new_nodes).map(|(v, z)| v * (z - center)).sum::<Complex64>();
        n *= 2;
        let next = sum / n as f64;
        let index = libm::round(next.re);
        let residual = (next - index).norm();
        let settled = (next - estimate).norm() < 1e-3;
        estimate = next;
        if settled && residual < INDEX_RESIDUAL {
            return Ok(ContourIndex {
                raw: next,
                index: index as i64,
                residual,
                nodes: n,
                min_sigma,
            });
        }
    }
    let index = libm::round(estimate.re);
    Err(Error::NonIntegralIndex {
        raw: estimate,
        residual: (estimate - index).norm(),
    })
}

fn wrap_angle(x: f64) -> f64 {
    let mut y = libm::remainder(x, 2.0 * PI);
    if y <= -PI {
        y += 2.0 * PI;
    }
    y
}

/// Winding number of det F around 0 along the circle, by phase unwrapping.
///
/// A wrapped phase increment above π/2 between adjacent nodes is treated as unresolved and
/// triggers node doubling (at most four times).
pub fn logdet_winding<F>(h: &F, c: &Contour) -> Result<i64>
where
    F: CharacteristicFunction + Sync + ?Sized,
{
    let mut contour = *c;
    for attempt in 0..=MAX_DOUBLINGS {
        let nodes = contour.nodes();
        let phases = par_map(&nodes, |&k| h.log_det(k));
        let mut args = Vec::with_capacity(nodes.len());
        for (j, (p, &k)) in phases.into_iter().zip(&nodes).enumerate() {
            let (lnabs, arg) = p.map_err(|e| Error::NodeFailure {
                index: j,
                point: k,
                reason: format!("{e}"),
            })?;
            if !(lnabs.is_finite() && arg.is_finite()) {
                return Err(Error::NodeFailure {
                    index: j,
                    point: k,
                    reason: "det F vanishes or overflows".into(),
                });
            }
            args.push(arg);
        }
        let mut total = 0.0;
        let mut worst: f64 = 0.0;
        for j in 0..args.len() {
            let d = wrap_angle(args[(j + 1) % args.len()] - args[j]);
            worst = worst.max(d.abs());
            total += d;
        }
        if worst <= 0.5 * PI {
            return Ok(libm::round(total / (2.0 * PI)) as i64);
        }
        if attempt == MAX_DOUBLINGS {
            return Err(Error::NonConvergence {
                routine: "logdet_winding",
                iterations: attempt,
                detail: format!("phase increment {worst:.3} rad remains above pi/2 at {} nodes", args.len()),
            });
        }
        contour = contour.with_nodes(2 * contour.node_count())?;
    }
    unreachable!()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sheet {
    Physical,
    Nonphysical,
}

/// A characteristic value of F, i.e. a resonance (an eigenvalue when on the physical sheet).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceFinding {
    pub k: Complex64,
    pub z: Complex64,
    pub multiplicity: u32,
    pub sheet: Sheet,
    pub threshold: Threshold,
}

/// Isolating-circle evidence for one finding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Isolation {
    pub k: Complex64,
    pub radius: f64,
    pub index: ContourIndex,
    pub winding: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub disk_radius: f64,
    pub max_depth: usize,
    /// Inner radius of the annulus as a fraction of `disk_radius`.
    pub inner_ratio: f64,
    /// Cells are quartered until their diameter drops below this.
    pub min_diameter: f64,
    /// Absolute tolerance of the adaptive edge quadrature.
    pub edge_tol: f64,
}

impl SearchOptions {
    pub fn new(disk_radius: f64) -> Self {
        SearchOptions {
            disk_radius,
            max_depth: 40,
            inner_ratio: 1e-4,
            min_diameter: 1e-6,
            edge_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub threshold: Threshold,
    pub disk_radius: f64,
    pub inner_radius: f64,
    pub outer: ContourIndex,
    pub inner: ContourIndex,
    pub outer_winding: i64,
    pub inner_winding: i64,
    /// Characteristic values in the annulus: outer index minus inner index.
    pub annulus_count: i64,
    pub findings: Vec<ResonanceFinding>,
    pub isolation: Vec<Isolation>,
    pub cells: usize,
    /// Largest rounding residual over all accepted indices.
    pub max_residual: f64,
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    lo: Complex64,
    hi: Complex64,
    count: i64,
    depth: usize,
}

impl Cell {
    fn diameter(&self) -> f64 {
        (self.hi - self.lo).norm()
    }

    fn holds(&self, z: Complex64) -> bool {
        z.re > self.lo.re && z.re < self.hi.re && z.im > self.lo.im && z.im < self.hi.im
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            self.lo,
            Complex64::new(self.hi.re, self.lo.im),
            self.hi,
            Complex64::new(self.lo.re, self.hi.im),
        ]
    }
}

struct Searcher<'a, F: ?Sized> {
    h: &'a F,
    rule: (Vec<f64>, Vec<f64>),
    tol: f64,
    r_in: f64,
    inner_index: i64,
    max_residual: f64,
    cells: usize,
}

impl<F> Searcher<'_, F>
where
    F: CharacteristicFunction + Sync + ?Sized,
{
    /// Number of characteristic values in the cell, excluding the inner disk.
    fn count(&mut self, lo: Complex64, hi: Complex64) -> Result<i64> {
        let cell = Cell { lo, hi, count: 0, depth: 0 };
        let corners = cell.corners();
        let mut total = ZERO;
        for j in 0..4 {
            let mut f = |k: Complex64| {
                let (tr, sigma) = self.h.log_derivative(k)?;
                if !(sigma > NODE_SIGMA_MIN) {
                    return Err(Error::NodeFailure {
                        index: j,
                        point: k,
                        reason: format!("smallest singular value {sigma:e} on a cell edge"),
                    });
                }
                Ok(tr)
            };
            total += segment_integral(&mut f, corners[j], corners[(j + 1) % 4], self.tol, &self.rule, 40)?;
        }
        let raw = total / Complex64::new(0.0, 2.0 * PI);
        let index = libm::round(raw.re);
        let residual = (raw - index).norm();
        if residual >= INDEX_RESIDUAL {
            return Err(Error::NonIntegralIndex { raw, residual });
        }
        self.max_residual = self.max_residual.max(residual);
        self.cells += 1;
        let mut count = index as i64;
        if cell.holds(ZERO) {
            count -= self.inner_index;
        }
        Ok(count)
    }

    fn split(&mut self, cell: &Cell) -> Result<Vec<Cell>> {
        let fractions = [(0.5 + 0.0137, 0.5 - 0.0211), (0.5 - 0.0293, 0.5 + 0.0179), (0.5 + 0.0411, 0.5 + 0.0353)];
        let mut last = None;
        for (fx, fy) in fractions {
            let mut s = Complex64::new(
                cell.lo.re + fx * (cell.hi.re - cell.lo.re),
                cell.lo.im + fy * (cell.hi.im - cell.lo.im),
            );
            if cell.holds(ZERO) {
                // Keep the inner disk strictly inside one child.
                let guard = 2.0 * self.r_in;
                if cell.hi.re - cell.lo.re < 8.0 * guard || cell.hi.im - cell.lo.im < 8.0 * guard {
                    return Err(Error::Consistency(format!(
                        "{} characteristic value(s) within {:e} of the threshold; reduce the inner radius",
                        cell.count,
                        4.0 * guard
                    )));
                }
                if s.re.abs() < guard {
                    s.re = if s.re >= 0.0 { guard } else { -guard };
                }
                if s.im.abs() < guard {
                    s.im = if s.im >= 0.0 { guard } else { -guard };
                }
            }
            let boxes = [
                (cell.lo, s),
                (Complex64::new(s.re, cell.lo.im), Complex64::new(cell.hi.re, s.im)),
                (s, cell.hi),
                (Complex64::new(cell.lo.re, s.im), Complex64::new(s.re, cell.hi.im)),
            ];
            let mut children = Vec::with_capacity(4);
            let mut failed = None;
            for (lo, hi) in boxes {
                match self.count(lo, hi) {
                    Ok(count) => children.push(Cell {
                        lo,
                        hi,
                        count,
                        depth: cell.depth + 1,
                    }),
                    Err(e @ Error::NodeFailure { .. }) => {
                        failed = Some(e);
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            if let Some(e) = failed {
                last = Some(e);
                continue;
            }
            let sum: i64 = children.iter().map(|c| c.count).sum();
            if sum != cell.count {
                return Err(Error::Consistency(format!(
                    "cell [{}, {}] has index {} but its children sum to {sum} ({:?})",
                    cell.lo,
                    cell.hi,
                    cell.count,
                    children.iter().map(|c| c.count).collect::<Vec<_>>()
                )));
            }
            return Ok(children);
        }
        Err(last.expect("at least one split was attempted"))
    }

    fn newton(&self, start: Complex64, multiplicity: i64, cell: &Cell) -> Complex64 {
        let mut k = start;
        for _ in 0..60 {
            let (tr, _) = match self.h.log_derivative(k) {
                Ok(v) => v,
                Err(_) => break,
            };
            if tr.norm() == 0.0 || !(tr.re.is_finite() && tr.im.is_finite()) {
                break;
            }
            let step = multiplicity as f64 / tr;
            k -= step;
            if step.norm() <= 1e-15 * k.norm().max(1e-3) {
                break;
            }
        }
        if (k - start).norm() > 10.0 * cell.diameter().max(1e-12) || !(k.re.is_finite() && k.im.is_finite()) {
            start
        } else {
            k
        }
    }
}

/// Adaptive argument-principle search for characteristic values of `h` with
/// r_in < |k| < disk_radius, r_in = inner_ratio * disk_radius.
pub fn search_handle(h: &CharFnHandle, options: &SearchOptions) -> Result<SearchReport> {
    let r = options.disk_radius;
    if !(r > 0.0 && r <= h.eps0() * (1.0 + 1e-12)) {
        return Err(Error::invalid(
            "disk_radius",
            format!("{r} must lie in (0, eps0 = {}]", h.eps0()),
        ));
    }
    if !(options.inner_ratio > 0.0 && options.inner_ratio < 0.1) {
        return Err(Error::invalid("inner_ratio", "must lie in (0, 0.1)"));
    }
    let r_in = options.inner_ratio * r;
    let outer_c = Contour::circle(ZERO, r)?;
    let inner_c = Contour::circle(ZERO, r_in)?;
    let outer = contour_index(h, &outer_c)?;
    let inner = contour_index(h, &inner_c)?;
    let outer_winding = logdet_winding(h, &outer_c)?;
    let inner_winding = logdet_winding(h, &inner_c)?;
    if outer_winding != outer.index || inner_winding != inner.index {
        return Err(Error::Consistency(format!(
            "index/winding disagreement: outer {} vs {outer_winding}, inner {} vs {inner_winding}",
            outer.index, inner.index
        )));
    }
    let annulus_count = outer.index - inner.index;
    let mut report = SearchReport {
        threshold: h.threshold(),
        disk_radius: r,
        inner_radius: r_in,
        outer,
        inner,
        outer_winding,
        inner_winding,
        annulus_count,
        findings: Vec::new(),
        isolation: Vec::new(),
        cells: 0,
        max_residual: outer.residual.max(inner.residual),
    };
    if annulus_count < 0 {
        return Err(Error::Consistency(format!("negative annulus count {annulus_count}")));
    }
    if annulus_count == 0 {
        return Ok(report);
    }

    let mut s = Searcher {
        h,
        rule: gauss_legendre(16),
        tol: options.edge_tol,
        r_in,
        inner_index: inner.index,
        max_residual: report.max_residual,
        cells: 0,
    };
    // The bounding square of the disk, nudged so that no edge passes through k = 0.
    let lo = Complex64::new(-r, -r);
    let hi = Complex64::new(r * (1.0 + 1e-3), r * (1.0 + 1e-3));
    let root = Cell {
        lo,
        hi,
        count: s.count(lo, hi)?,
        depth: 0,
    };
    let mut stack = alloc::vec![root];
    let mut leaves = Vec::new();
    while let Some(cell) = stack.pop() {
        if cell.count == 0 {
            continue;
        }
        if cell.count < 0 {
            return Err(Error::Consistency(format!("negative count {} in cell [{}, {}]", cell.count, cell.lo, cell.hi)));
        }
        if (cell.diameter() < options.min_diameter || cell.depth >= options.max_depth) && !cell.holds(ZERO) {
            leaves.push(cell);
            continue;
        }
        let children = s.split(&cell)?;
        // Reverse so that the first child is processed first.
        stack.extend(children.into_iter().rev());
    }

    let polished: Vec<(Complex64, i64)> = leaves
        .iter()
        .map(|c| (s.newton(0.5 * (c.lo + c.hi), c.count, c), c.count))
        .collect();
    for (i, &(k, m)) in polished.iter().enumerate() {
        if !(k.norm() > r_in && k.norm() < r) {
            continue;
        }
        let others = polished
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, (q, _))| (q - k).norm())
            .fold(f64::INFINITY, f64::min);
        let mut rho = (0.1 * r).min(0.4 * others).min(0.4 * k.norm());
        let mut isolated = None;
        for _ in 0..4 {
            let c = Contour::circle(k, rho)?;
            let idx = contour_index(h, &c)?;
            let wind = logdet_winding(h, &c)?;
            if idx.index == m && wind == m {
                isolated = Some(Isolation {
                    k,
                    radius: rho,
                    index: idx,
                    winding: wind,
                });
                break;
            }
            rho *= 0.5;
        }
        let iso = isolated.ok_or_else(|| {
            Error::Consistency(format!("no isolating circle around {k} reproduces multiplicity {m}"))
        })?;
        s.max_residual = s.max_residual.max(iso.index.residual);
        report.isolation.push(iso);
        report.findings.push(ResonanceFinding {
            k,
            z: h.threshold().z_of_k(k),
            multiplicity: m as u32,
            sheet: if k.im >= 0.0 { Sheet::Physical } else { Sheet::Nonphysical },
            threshold: h.threshold(),
        });
    }
    report.cells = s.cells;
    report.max_residual = s.max_residual;
    let found: i64 = report.findings.iter().map(|f| f.multiplicity as i64).sum();
    if found != annulus_count {
        return Err(Error::Consistency(format!(
            "localized multiplicities sum to {found}, annulus index is {annulus_count}"
        )));
    }
    Ok(report)
}

/// Builds the handle for V at the threshold and searches the punctured disk.
pub fn resonance_search(
    v: &Perturbation,
    delta: f64,
    w: &Window,
    threshold: Threshold,
    options: &SearchOptions,
) -> Result<SearchReport> {
    let h = build_char_fn(v, delta, w, threshold)?;
    let h = if options.disk_radius > h.eps0() && options.disk_radius <= delta / 8.0 {
        h.with_eps0(options.disk_radius)?
    } else {
        h
    };
    search_handle(&h, options)
}

/// Both sides of: z₀ is an eigenvalue of the truncated H_V ⟺ -1 is an eigenvalue of T_V(z₀).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub z0: Complex64,
    pub k: Complex64,
    pub hv_distance: f64,
    pub hv_has_eigenvalue: bool,
    pub tv_distance: f64,
    pub tv_has_minus_one: bool,
    pub agree: bool,
}

/// Eigenvalue / characteristic-value equivalence at z₀ = k² on the physical sheet.
pub fn eigenvalue_cross_check(v: &Perturbation, delta: f64, w: &Window, z0: Complex64) -> Result<CrossCheck> {
    let dist = cut_distance(z0);
    if !(dist >= 1e-12) {
        return Err(Error::CutProximity { point: z0, distance: dist });
    }
    let k = principal_sqrt(z0);
    let h = build_char_fn(v, delta, w, Threshold::Zero)?;
    if k.norm() > h.eps0() {
        log::warn!("|k| = {} exceeds eps0 = {}", k.norm(), h.eps0());
    }
    let hv = assemble_hv(w, v)?;
    let hv_distance = eigvals_dense(&hv)?
        .iter()
        .map(|e| (e - z0).norm())
        .fold(f64::INFINITY, f64::min);
    // T_V = F - I; its nonzero eigenvalues are those of the reduced block minus one.
    let red = h.reduced(k, false)?;
    let tv_distance = if red.a.nrows() == 0 {
        1.0
    } else {
        let t = ComplexMatrix::from_dmatrix(red.a.clone() - nalgebra::DMatrix::identity(red.a.nrows(), red.a.nrows()))?;
        eigvals_dense(&t)?
            .iter()
            .map(|e| (e + 1.0).norm())
            .fold(f64::INFINITY, f64::min)
    };
    let hv_has_eigenvalue = hv_distance < 1e-7;
    let tv_has_minus_one = tv_distance < 1e-7;
    Ok(CrossCheck {
        z0,
        k,
        hv_distance,
        hv_has_eigenvalue,
        tv_distance,
        tv_has_minus_one,
        agree: hv_has_eigenvalue == tv_has_minus_one,
    })
}

//! One function per command; each maps to the corresponding module of the core crate.

use latspec_core::charvalues::{resonance_search, SearchOptions};
use latspec_core::lattice::{assemble_hv, boundary_free_commutator, build_a0, numerical_range_bounds, Window};
use latspec_core::mourre::{
    boundary_eigen_virial, eta_schedule, japanese_weight, lambda_grid, lap_probe_on_grid, mourre_estimate,
    mourre_estimate_with_commutator, LapReport, Side,
};
use latspec_core::numerics::{cut_distance, eigvals_dense, ComplexMatrix, Lu};
use latspec_core::regularity::{regularity_report, ClassOptions};
use latspec_core::resolvent::Threshold;
use latspec_core::scaling::classify_spectrum;
use latspec_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{
    CommutatorKind, LapParams, MourreParams, Params, RegularityParams, ResonanceParams, RunConfig, ScaleParams,
    SpectrumParams,
};
use crate::error::Result;
use crate::output::{num, Artifact};

fn value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("results serialize")
}

fn window(n: usize) -> Result<Window> {
    Ok(Window::new(n)?)
}

fn side_name(side: Side) -> &'static str {
    match side {
        Side::Above => "above",
        Side::Below => "below",
    }
}

fn sorted(mut zs: Vec<Complex64>) -> Vec<Complex64> {
    zs.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    zs
}

fn nearest(z: Complex64, others: &[Complex64]) -> f64 {
    others.iter().map(|y| (y - z).norm()).fold(f64::INFINITY, f64::min)
}

/// Default comparison window: 3N/4, or N + 1 when that collapses onto N.
fn companion(n: usize) -> usize {
    let m = (3 * n / 4).max(1);
    if m == n {
        n + 1
    } else {
        m
    }
}

/// Runs the command of `cfg` and returns the artifacts to write.
pub fn run(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    match &cfg.params {
        Params::Spectrum(p) => spectrum(cfg, p),
        Params::Scale(p) => scale(cfg, p),
        Params::Resonances(p) => resonances(cfg, p),
        Params::Lap(p) => lap(cfg, p),
        Params::Mourre(p) => mourre(cfg, p),
        Params::Regularity(p) => regularity(cfg, p),
    }
}

fn spectrum(cfg: &RunConfig, p: &SpectrumParams) -> Result<Vec<Artifact>> {
    let w = window(cfg.window)?;
    let m = p.compare_window.unwrap_or_else(|| companion(cfg.window));
    let h = assemble_hv(&w, &cfg.perturbation)?;
    let ev = sorted(eigvals_dense(&h)?);
    let other = eigvals_dense(&assemble_hv(&window(m)?, &cfg.perturbation)?)?;
    let (sm, sp) = numerical_range_bounds(&h)?;
    let mut rows = Vec::with_capacity(ev.len());
    let mut discrete = Vec::new();
    for &z in &ev {
        let cut = cut_distance(z);
        let stab = nearest(z, &other);
        let class = if cut > p.tol_cut && stab < p.tol_stab { "discrete" } else { "continuum" };
        if class == "discrete" {
            discrete.push(json!({"z": value(&z), "cut_distance": cut, "stability": stab}));
        }
        rows.push(vec![num(z.re), num(z.im), num(cut), num(stab), class.to_string()]);
    }
    let summary = json!({
        "windows": [m, cfg.window],
        "eigenvalue_count": ev.len(),
        "numerical_range": [sm, sp],
        "discrete": discrete,
    });
    Ok(vec![
        Artifact::csv(
            "spectrum",
            vec![("re", "f64"), ("im", "f64"), ("cut_distance", "f64"), ("stability", "f64"), ("class", "str")],
            rows,
        ),
        Artifact::json("spectrum", summary),
    ])
}

fn scale(cfg: &RunConfig, p: &ScaleParams) -> Result<Vec<Artifact>> {
    let sizes = p.windows.clone().unwrap_or_else(|| vec![companion(cfg.window), cfg.window]);
    let ws = sizes.iter().map(|&n| window(n)).collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut per_theta = Vec::new();
    for &theta in &p.thetas {
        let cls = classify_spectrum(theta, &cfg.perturbation, &ws, p.tol_curve, p.tol_stab)?;
        let mut all: Vec<(Complex64, &str)> = cls.discrete_candidates.iter().map(|d| (d.z, "discrete")).collect();
        all.extend(cls.curve_attached.iter().map(|&z| (z, "curve")));
        all.sort_by(|a, b| a.0.re.total_cmp(&b.0.re).then(a.0.im.total_cmp(&b.0.im)));
        for (z, class) in all {
            rows.push(vec![
                num(theta.re),
                num(theta.im),
                num(z.re),
                num(z.im),
                num(cls.curve.distance(z)),
                class.to_string(),
            ]);
        }
        per_theta.push(json!({
            "theta": value(&theta),
            "curve": value(&cls.curve),
            "discrete_candidates": value(&cls.discrete_candidates),
            "curve_attached_count": cls.curve_attached.len(),
        }));
    }
    Ok(vec![
        Artifact::csv(
            "scale",
            vec![
                ("theta_re", "f64"),
                ("theta_im", "f64"),
                ("re", "f64"),
                ("im", "f64"),
                ("curve_distance", "f64"),
                ("class", "str"),
            ],
            rows,
        ),
        Artifact::json("scale", json!({"windows": sizes, "thetas": per_theta})),
    ])
}

fn resonances(cfg: &RunConfig, p: &ResonanceParams) -> Result<Vec<Artifact>> {
    let w = window(cfg.window)?;
    let radius = p.disk_radius.unwrap_or(p.delta / 32.0);
    let mut opts = SearchOptions::new(radius);
    if let Some(x) = p.max_depth {
        opts.max_depth = x;
    }
    if let Some(x) = p.inner_ratio {
        opts.inner_ratio = x;
    }
    if let Some(x) = p.min_diameter {
        opts.min_diameter = x;
    }
    if let Some(x) = p.edge_tol {
        opts.edge_tol = x;
    }
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    let mut findings = Vec::new();
    for &t in &p.thresholds {
        let rep = resonance_search(&cfg.perturbation, p.delta, &w, Threshold::from_value(t)?, &opts)?;
        for f in &rep.findings {
            rows.push(vec![
                num(t),
                num(f.k.re),
                num(f.k.im),
                num(f.z.re),
                num(f.z.im),
                f.multiplicity.to_string(),
                value(&f.sheet).as_str().unwrap_or_default().to_string(),
            ]);
            findings.push(value(f));
        }
        reports.push(value(&rep));
    }
    Ok(vec![
        Artifact::csv(
            "resonances",
            vec![
                ("threshold", "f64"),
                ("k_re", "f64"),
                ("k_im", "f64"),
                ("z_re", "f64"),
                ("z_im", "f64"),
                ("multiplicity", "u32"),
                ("sheet", "str"),
            ],
            rows,
        ),
        Artifact::json(
            "resonances",
            json!({"disk_radius": radius, "findings": findings, "reports": reports}),
        ),
    ])
}

/// |⟨Wφ, (z - H)⁻¹ Wφ⟩| for random unit φ on |n| <= support, at every sample of the probe.
fn vector_probes(
    h: &ComplexMatrix,
    weight: &ComplexMatrix,
    rep: &LapReport,
    w: &Window,
    p: &LapParams,
    seed: u64,
) -> Result<Vec<Vec<String>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let support = p.probe_support as i64;
    let probes: Vec<Vec<Complex64>> = (0..p.probe_vectors)
        .map(|_| {
            let mut phi = vec![Complex64::default(); w.dim()];
            for s in -support..=support {
                let i = w.index(s).expect("support checked against the window");
                phi[i] = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            }
            let norm = phi.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            let phi: Vec<_> = phi.into_iter().map(|x| x / norm).collect();
            weight.matvec(&phi)
        })
        .collect();
    let n = h.dim();
    let mut rows = Vec::new();
    for sample in &rep.samples {
        let m = ComplexMatrix::from_fn(n, |i, j| if i == j { sample.z - h[(i, j)] } else { -h[(i, j)] })?;
        let lu = Lu::new(m.as_dmatrix())?;
        for (j, psi) in probes.iter().enumerate() {
            let mut x = psi.clone();
            lu.solve_in_place(&mut x);
            let v: Complex64 = psi.iter().zip(&x).map(|(a, b)| a.conj() * b).sum();
            rows.push(vec![
                j.to_string(),
                num(sample.lambda),
                num(sample.eta),
                side_name(rep.side).to_string(),
                num(v.re),
                num(v.im),
                num(v.norm()),
            ]);
        }
    }
    Ok(rows)
}

fn lap(cfg: &RunConfig, p: &LapParams) -> Result<Vec<Artifact>> {
    let w = window(cfg.window)?;
    let h = assemble_hv(&w, &cfg.perturbation)?;
    let a = build_a0(&w);
    let (grid, spacing) = lambda_grid(&h, p.interval, p.grid_points)?;
    let etas = p.eta_schedule.clone().unwrap_or_else(|| eta_schedule(spacing));
    let rep = lap_probe_on_grid(&h, &a, p.s, p.interval, &grid, &etas, p.side)?;
    let side = side_name(p.side);
    let rows = rep
        .samples
        .iter()
        .map(|s| vec![num(s.lambda), num(s.eta), side.to_string(), num(s.norm)])
        .collect();
    let mut out = vec![Artifact::csv(
        "lap",
        vec![("lambda", "f64"), ("eta", "f64"), ("side", "str"), ("norm", "f64")],
        rows,
    )];
    if p.probe_vectors > 0 {
        let weight = japanese_weight(&a, p.s)?;
        let rows = vector_probes(&h, &weight, &rep, &w, p, cfg.seed)?;
        out.push(Artifact::csv(
            "lap_vectors",
            vec![
                ("probe", "usize"),
                ("lambda", "f64"),
                ("eta", "f64"),
                ("side", "str"),
                ("re", "f64"),
                ("im", "f64"),
                ("abs", "f64"),
            ],
            rows,
        ));
    }
    out.push(Artifact::json(
        "lap",
        json!({
            "s": rep.s,
            "interval": [rep.interval.0, rep.interval.1],
            "side": side,
            "sigma": rep.sigma,
            "spacing": spacing,
            "lambda_grid": grid,
            "eta_schedule": etas,
            "sup_norm": rep.sup_norm,
            "slope_tail": rep.slope_tail,
        }),
    ));
    Ok(out)
}

fn mourre(cfg: &RunConfig, p: &MourreParams) -> Result<Vec<Artifact>> {
    let w = window(cfg.window)?;
    let h = assemble_hv(&w, &cfg.perturbation)?;
    let rep = match p.commutator {
        CommutatorKind::BoundaryFree => {
            let c = boundary_free_commutator(&w, Some(&cfg.perturbation))?;
            mourre_estimate_with_commutator(&h, &c, p.interval, p.remainder_mode)?
        }
        CommutatorKind::Truncated => mourre_estimate(&h, &build_a0(&w), p.interval, p.remainder_mode)?,
    };
    let virial = boundary_eigen_virial(&h, p.virial_tol, Some(&rep))?;
    let rows = rep
        .compressed_spectrum
        .iter()
        .enumerate()
        .map(|(j, x)| vec![j.to_string(), num(*x)])
        .collect();
    Ok(vec![
        Artifact::csv("mourre_spectrum", vec![("index", "usize"), ("value", "f64")], rows),
        Artifact::json(
            "mourre",
            json!({
                "commutator": value(&p.commutator),
                "c_delta": rep.c_delta,
                "mourre": value(&rep),
                "virial": value(&virial),
            }),
        ),
    ])
}

fn regularity(cfg: &RunConfig, p: &RegularityParams) -> Result<Vec<Artifact>> {
    let w = window(cfg.window)?;
    let opts = ClassOptions {
        threshold: p.threshold,
        tail_fraction: p.tail_fraction,
        delta_max: p.delta_max,
    };
    let rep = regularity_report(&cfg.perturbation, &w, p.a, p.b, &opts)?;
    Ok(vec![Artifact::json("regularity", value(&rep))])
}

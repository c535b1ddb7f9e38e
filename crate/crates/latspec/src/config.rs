//! Run configuration: one JSON document, complex numbers as `[re, im]`.

use std::fmt;
use std::path::{Path, PathBuf};

use latspec_core::lattice::{Decay, LowRankTerm, Perturbation, PerturbationKind, Window};
use latspec_core::mourre::{RemainderMode, Side};
use latspec_core::resolvent::Threshold;
use latspec_core::scaling::{DEFAULT_TOL_CURVE, DEFAULT_TOL_STAB};
use latspec_core::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Spectrum,
    Scale,
    Resonances,
    Lap,
    Mourre,
    Regularity,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Scale => "scale",
            Command::Resonances => "resonances",
            Command::Lap => "lap",
            Command::Mourre => "mourre",
            Command::Regularity => "regularity",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumParams {
    /// Eigenvalues closer than this to [0, 4] are attributed to the continuum.
    #[serde(default = "default_tol_cut")]
    pub tol_cut: f64,
    #[serde(default = "default_tol_stab")]
    pub tol_stab: f64,
    /// Smaller window for the stability comparison; defaults to 3N/4.
    #[serde(default)]
    pub compare_window: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleParams {
    pub thetas: Vec<Complex64>,
    /// Windows compared by the classification; defaults to [3N/4, N].
    #[serde(default)]
    pub windows: Option<Vec<usize>>,
    #[serde(default = "default_tol_curve")]
    pub tol_curve: f64,
    #[serde(default = "default_tol_stab")]
    pub tol_stab: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceParams {
    pub delta: f64,
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
    /// Radius of the punctured search disk; defaults to ε₀/2 = δ/32.
    #[serde(default)]
    pub disk_radius: Option<f64>,
    #[serde(default)]
    pub max_depth: Option<usize>,
    #[serde(default)]
    pub inner_ratio: Option<f64>,
    #[serde(default)]
    pub min_diameter: Option<f64>,
    #[serde(default)]
    pub edge_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LapParams {
    pub s: f64,
    pub interval: (f64, f64),
    #[serde(default = "default_side")]
    pub side: Side,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Decreasing η values; defaults to the schedule tied to the eigenvalue spacing.
    #[serde(default)]
    pub eta_schedule: Option<Vec<f64>>,
    /// Number of random probe vectors for ⟨Wφ, (z - H)⁻¹ Wφ⟩.
    #[serde(default)]
    pub probe_vectors: usize,
    /// Probe vectors live on |n| <= probe_support.
    #[serde(default = "default_probe_support")]
    pub probe_support: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommutatorKind {
    /// i[A, Re H] of the infinite-volume operators, restricted to the window.
    BoundaryFree,
    /// i[A, Re H] of the truncated matrices; carries boundary outliers.
    Truncated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MourreParams {
    pub interval: (f64, f64),
    #[serde(default = "default_remainder")]
    pub remainder_mode: RemainderMode,
    #[serde(default = "default_commutator")]
    pub commutator: CommutatorKind,
    #[serde(default = "default_virial_tol")]
    pub virial_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularityParams {
    #[serde(default = "one")]
    pub a: f64,
    #[serde(default = "two")]
    pub b: f64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_tail_fraction")]
    pub tail_fraction: f64,
    #[serde(default = "default_delta_max")]
    pub delta_max: f64,
}

fn default_tol_cut() -> f64 {
    1e-2
}
fn default_tol_stab() -> f64 {
    DEFAULT_TOL_STAB
}
fn default_tol_curve() -> f64 {
    DEFAULT_TOL_CURVE
}
fn default_thresholds() -> Vec<f64> {
    vec![0.0, 4.0]
}
fn default_side() -> Side {
    Side::Above
}
fn default_grid_points() -> usize {
    16
}
fn default_probe_support() -> usize {
    10
}
fn default_remainder() -> RemainderMode {
    RemainderMode::None
}
fn default_commutator() -> CommutatorKind {
    CommutatorKind::BoundaryFree
}
fn default_virial_tol() -> f64 {
    1e-8
}
fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn default_threshold() -> f64 {
    1e3
}
fn default_tail_fraction() -> f64 {
    0.1
}
fn default_delta_max() -> f64 {
    5.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    Spectrum(SpectrumParams),
    Scale(ScaleParams),
    Resonances(ResonanceParams),
    Lap(LapParams),
    Mourre(MourreParams),
    Regularity(RegularityParams),
}

/// A validated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub window: usize,
    pub perturbation: Perturbation,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub params: Params,
}

impl RunConfig {
    /// The resolved configuration echoed into every output file.
    pub fn echo(&self) -> Value {
        let mut m = Map::new();
        m.insert("command".into(), Value::from(self.command.name()));
        m.insert("window".into(), Value::from(self.window));
        m.insert("perturbation".into(), to_value(&self.perturbation));
        m.insert("seed".into(), Value::from(self.seed));
        m.insert("params".into(), to_value(&self.params));
        Value::Object(m)
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("config values serialize")
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    command: Option<Command>,
    window: usize,
    #[serde(default)]
    perturbation: Option<Value>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    output: Option<PathBuf>,
    #[serde(default)]
    params: Option<Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DiagonalDoc {
    #[allow(dead_code)]
    kind: String,
    #[serde(default)]
    offset: Option<i64>,
    values: Vec<Complex64>,
    #[serde(default)]
    decay: Option<Decay>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DenseDoc {
    #[allow(dead_code)]
    kind: String,
    #[serde(default)]
    offset: Option<i64>,
    entries: Vec<Vec<Complex64>>,
    #[serde(default)]
    decay: Option<Decay>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LowRankDoc {
    #[allow(dead_code)]
    kind: String,
    terms: Vec<LowRankTerm>,
    #[serde(default)]
    decay: Option<Decay>,
}

/// Deserializes `value`, reporting the failing key under `prefix`.
fn parse_at<T: DeserializeOwned>(value: &Value, prefix: &str) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let mut parts: Vec<String> = Vec::new();
        if !prefix.is_empty() {
            parts.push(prefix.to_string());
        }
        let inner = e.path().to_string();
        if inner != "." {
            parts.push(inner);
        }
        let message = e.into_inner().to_string();
        // Missing fields are reported at the parent; name the field itself.
        for lead in ["unknown field `", "missing field `"] {
            if let Some(rest) = message.strip_prefix(lead) {
                if let Some(end) = rest.find('`') {
                    let name = &rest[..end];
                    if !parts.last().is_some_and(|p| p == name || p.ends_with(&format!(".{name}"))) {
                        parts.push(name.to_string());
                    }
                }
            }
        }
        let key = if parts.is_empty() { "config".to_string() } else { parts.join(".") };
        CliError::config(key, message)
    })
}

fn read_json(path: &Path, key: &str) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(key, format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(key, format!("{}: {e}", path.display())))
}

fn parse_perturbation(value: &Value, base: &Path) -> Result<Perturbation> {
    const KEY: &str = "perturbation";
    let value = match value {
        Value::String(p) => read_json(&base.join(p), KEY)?,
        v => v.clone(),
    };
    let obj = value
        .as_object()
        .ok_or_else(|| CliError::config(KEY, "expected an object or a file path"))?;
    let kind = obj
        .get("kind")
        .ok_or_else(|| CliError::config("perturbation.kind", "missing"))?
        .as_str()
        .ok_or_else(|| CliError::config("perturbation.kind", "expected a string"))?;
    let v = match kind {
        "diagonal" => {
            let d: DiagonalDoc = parse_at(&value, KEY)?;
            Perturbation {
                kind: PerturbationKind::Diagonal {
                    offset: d.offset,
                    values: d.values,
                },
                decay: d.decay,
            }
        }
        "dense" => {
            let d: DenseDoc = parse_at(&value, KEY)?;
            Perturbation {
                kind: PerturbationKind::Dense {
                    offset: d.offset,
                    entries: d.entries,
                },
                decay: d.decay,
            }
        }
        "lowrank" => {
            let d: LowRankDoc = parse_at(&value, KEY)?;
            Perturbation {
                kind: PerturbationKind::LowRank { terms: d.terms },
                decay: d.decay,
            }
        }
        other => {
            return Err(CliError::config(
                "perturbation.kind",
                format!("unknown kind `{other}`; expected diagonal, dense or lowrank"),
            ))
        }
    };
    v.validate().map_err(|e| match e {
        latspec_core::Error::InvalidArgument { name, reason } => CliError::config(format!("{KEY}.{name}"), reason),
        e => CliError::config(KEY, e.to_string()),
    })?;
    Ok(v)
}

/// Reads and validates a configuration file for `command`.
pub fn load(path: &Path, command: Command) -> Result<RunConfig> {
    let doc = read_json(path, "config")?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse(&doc, command, base)
}

/// Parses and validates a configuration document; relative paths resolve against `base`.
pub fn parse(doc: &Value, command: Command, base: &Path) -> Result<RunConfig> {
    let raw: RawConfig = parse_at(doc, "")?;
    if let Some(c) = raw.command {
        if c != command {
            return Err(CliError::config("command", format!("config is for `{c}`, invoked as `{command}`")));
        }
    }
    let perturbation = match &raw.perturbation {
        Some(v) => parse_perturbation(v, base)?,
        None => Perturbation::zero(),
    };
    let empty = Value::Object(Map::new());
    let p = raw.params.as_ref().unwrap_or(&empty);
    let params = match command {
        Command::Spectrum => Params::Spectrum(parse_at(p, "params")?),
        Command::Scale => Params::Scale(parse_at(p, "params")?),
        Command::Resonances => Params::Resonances(parse_at(p, "params")?),
        Command::Lap => Params::Lap(parse_at(p, "params")?),
        Command::Mourre => Params::Mourre(parse_at(p, "params")?),
        Command::Regularity => Params::Regularity(parse_at(p, "params")?),
    };
    let cfg = RunConfig {
        command,
        window: raw.window,
        perturbation,
        seed: raw.seed,
        output: raw.output.map(|o| base.join(o)),
        params,
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn check(ok: bool, key: &str, message: impl Into<String>) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::config(key, message))
    }
}

fn positive(x: f64, key: &str) -> Result<()> {
    check(x.is_finite() && x > 0.0, key, format!("must be positive and finite, got {x}"))
}

fn interval(iv: (f64, f64), key: &str) -> Result<()> {
    check(
        iv.0.is_finite() && iv.1.is_finite() && iv.0 < iv.1,
        key,
        format!("expected [a, b] with a < b, got [{}, {}]", iv.0, iv.1),
    )
}

fn window(n: usize, key: &str) -> Result<()> {
    Window::new(n).map(|_| ()).map_err(|e| CliError::config(key, e.to_string()))
}

/// Checks every numeric parameter against the preconditions of the module it feeds.
pub fn validate(cfg: &RunConfig) -> Result<()> {
    window(cfg.window, "window")?;
    let n = cfg.window;
    match &cfg.params {
        Params::Spectrum(p) => {
            positive(p.tol_cut, "params.tol_cut")?;
            positive(p.tol_stab, "params.tol_stab")?;
            if let Some(m) = p.compare_window {
                window(m, "params.compare_window")?;
                check(m != n, "params.compare_window", "must differ from window")?;
            }
        }
        Params::Scale(p) => {
            check(!p.thetas.is_empty(), "params.thetas", "at least one theta is required")?;
            for (j, t) in p.thetas.iter().enumerate() {
                check(
                    t.re.is_finite() && t.im.is_finite() && t.norm() < std::f64::consts::FRAC_PI_8,
                    &format!("params.thetas[{j}]"),
                    format!("|theta| = {} must be below pi/8", t.norm()),
                )?;
            }
            if let Some(ws) = &p.windows {
                check(ws.len() >= 2, "params.windows", "at least two windows are required")?;
                for (j, &m) in ws.iter().enumerate() {
                    window(m, &format!("params.windows[{j}]"))?;
                }
                let mut sorted = ws.clone();
                sorted.sort_unstable();
                sorted.dedup();
                check(sorted.len() == ws.len(), "params.windows", "windows must be distinct")?;
            }
            positive(p.tol_curve, "params.tol_curve")?;
            positive(p.tol_stab, "params.tol_stab")?;
        }
        Params::Resonances(p) => {
            positive(p.delta, "params.delta")?;
            check(!p.thresholds.is_empty(), "params.thresholds", "at least one threshold is required")?;
            for (j, &t) in p.thresholds.iter().enumerate() {
                Threshold::from_value(t).map_err(|_| {
                    CliError::config(format!("params.thresholds[{j}]"), format!("{t} is not a threshold (0 or 4)"))
                })?;
            }
            if let Some(r) = p.disk_radius {
                positive(r, "params.disk_radius")?;
                check(
                    r <= p.delta / 8.0,
                    "params.disk_radius",
                    format!("{r} exceeds the analyticity radius delta/8 = {}", p.delta / 8.0),
                )?;
            }
            if let Some(x) = p.inner_ratio {
                check(x > 0.0 && x < 1.0, "params.inner_ratio", "must lie in (0, 1)")?;
            }
            if let Some(x) = p.min_diameter {
                positive(x, "params.min_diameter")?;
            }
            if let Some(x) = p.edge_tol {
                positive(x, "params.edge_tol")?;
            }
            check(
                cfg.perturbation.decay.is_some(),
                "perturbation.decay",
                "the resonance search needs a decay certificate {C, delta}",
            )?;
        }
        Params::Lap(p) => {
            check(p.s.is_finite() && p.s >= 0.0, "params.s", format!("must be nonnegative, got {}", p.s))?;
            if p.s <= 0.5 {
                log::warn!("s = {} is at or below 1/2; the probe runs as an unweighted control", p.s);
            }
            interval(p.interval, "params.interval")?;
            check(p.grid_points >= 1, "params.grid_points", "must be at least 1")?;
            if let Some(etas) = &p.eta_schedule {
                check(etas.len() >= 2, "params.eta_schedule", "needs at least two values")?;
                check(
                    etas.iter().all(|e| e.is_finite() && *e > 0.0) && etas.windows(2).all(|w| w[1] < w[0]),
                    "params.eta_schedule",
                    "must be positive and strictly decreasing",
                )?;
            }
            check(
                p.probe_support <= n,
                "params.probe_support",
                format!("{} exceeds the window {n}", p.probe_support),
            )?;
        }
        Params::Mourre(p) => {
            interval(p.interval, "params.interval")?;
            positive(p.virial_tol, "params.virial_tol")?;
        }
        Params::Regularity(p) => {
            positive(p.a, "params.a")?;
            check(p.b.is_finite() && p.b > p.a, "params.b", format!("must exceed a = {}", p.a))?;
            positive(p.threshold, "params.threshold")?;
            check(
                p.tail_fraction > 0.0 && p.tail_fraction < 1.0,
                "params.tail_fraction",
                "must lie in (0, 1)",
            )?;
            positive(p.delta_max, "params.delta_max")?;
        }
    }
    Ok(())
}

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use specquant::quasimode::ContourParams;
use specquant::spectrum::{DiscretizationSpec, Method};
use specquant::symbol::GridSpec;
use specquant::{SymbolDef, Term};

pub const SCHEMA: u32 = 1;

/// A configuration problem, reported with exit code 3.
#[derive(Debug)]
pub struct ConfigError {
    pub code: &'static str,
    pub detail: String,
}

impl ConfigError {
    pub fn new(code: &'static str, detail: impl Into<String>) -> Self {
        Self { code, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase", deny_unknown_fields)]
pub enum SymbolSpec {
    #[default]
    Harmonic,
    Quartic,
    /// `xi^2 + V(x)` with `V = sum potential[k] x^k`.
    Schrodinger { potential: Vec<f64> },
    Custom { terms: Vec<Term> },
}

impl SymbolSpec {
    pub fn build(&self) -> specquant::Result<SymbolDef> {
        match self {
            SymbolSpec::Harmonic => Ok(SymbolDef::harmonic()),
            SymbolSpec::Quartic => Ok(SymbolDef::quartic()),
            SymbolSpec::Schrodinger { potential } => SymbolDef::schrodinger(potential),
            SymbolSpec::Custom { terms } => SymbolDef::new("custom", terms.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Window {
    pub e1: f64,
    pub e2: f64,
    pub delta: f64,
}

impl Default for Window {
    fn default() -> Self {
        Self { e1: 0.25, e2: 0.95, delta: 0.05 }
    }
}

/// Energies at which the action profile is tabulated. Bounds default to
/// `[E1 - delta, E2 + delta]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LambdaGrid {
    pub count: usize,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl Default for LambdaGrid {
    fn default() -> Self {
        Self { count: 33, lo: None, hi: None }
    }
}

/// Discretization of the reference operator; `hbar` comes from `hbar_list`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Discretization {
    pub method: Method,
    pub box_halfwidth: f64,
    pub n: usize,
    pub m: usize,
}

impl Default for Discretization {
    fn default() -> Self {
        let d = DiscretizationSpec::default();
        Self { method: d.method, box_halfwidth: d.box_halfwidth, n: d.n, m: d.m }
    }
}

impl Discretization {
    pub fn at(&self, hbar: f64) -> DiscretizationSpec {
        DiscretizationSpec { method: self.method, box_halfwidth: self.box_halfwidth, n: self.n, m: self.m, hbar }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaslovConfig {
    /// Number of arcs in the cover used for the cocycle product.
    pub m: usize,
}

impl Default for MaslovConfig {
    fn default() -> Self {
        Self { m: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuasimodeConfig {
    pub contour: ContourParams,
    /// Base points sampled along the level curve.
    pub points: usize,
    pub sweep: Vec<f64>,
}

impl Default for QuasimodeConfig {
    fn default() -> Self {
        Self { contour: ContourParams::default(), points: 8, sweep: vec![0.2, 0.1, 0.05] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BargmannConfig {
    pub hbar_list: Vec<f64>,
    /// Hermite functions `0..=max_k` are transformed.
    pub max_k: usize,
}

impl Default for BargmannConfig {
    fn default() -> Self {
        Self { hbar_list: vec![1.0, 0.5, 0.1], max_k: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymcalcOp {
    /// Lagrange inverse of `input`.
    Invert,
    /// `input(hbar, second(hbar, lambda))`.
    Compose,
    Product,
    /// `input` composed with its own inverse.
    Roundtrip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SymcalcConfig {
    pub op: SymcalcOp,
    pub input: Option<String>,
    pub second: Option<String>,
    /// Written to stdout when absent.
    pub output: Option<String>,
}

impl Default for SymcalcConfig {
    fn default() -> Self {
        Self { op: SymcalcOp::Invert, input: None, second: None, output: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Integrator tolerance for level-curve tracing.
    pub trace: f64,
    /// Upper bound on the spectrum match radius.
    pub match_radius_cap: f64,
    pub isometry: f64,
    pub uncertainty: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { trace: 1e-12, match_radius_cap: 0.05, isometry: 1e-6, uncertainty: 1e-4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    #[serde(default)]
    pub symbol: SymbolSpec,
    #[serde(default)]
    pub window: Window,
    #[serde(default = "default_hbar_list")]
    pub hbar_list: Vec<f64>,
    /// Energy used by the single-curve subcommands.
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub lambda_grid: LambdaGrid,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub discretization: Discretization,
    #[serde(default)]
    pub maslov: MaslovConfig,
    #[serde(default)]
    pub quasimode: QuasimodeConfig,
    #[serde(default)]
    pub bargmann: BargmannConfig,
    #[serde(default)]
    pub symcalc: SymcalcConfig,
    #[serde(default)]
    pub output_dir: Option<String>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_hbar_list() -> Vec<f64> {
    vec![0.1]
}

fn default_lambda() -> f64 {
    0.5
}

impl RunConfig {
    pub fn lambda_nodes(&self) -> Vec<f64> {
        let lo = self.lambda_grid.lo.unwrap_or(self.window.e1 - self.window.delta);
        let hi = self.lambda_grid.hi.unwrap_or(self.window.e2 + self.window.delta);
        let n = self.lambda_grid.count;
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    fn check(&self) -> Result<(), ConfigError> {
        let bad = |d: String| Err(ConfigError::new("CONFIG_INVALID", d));
        if self.schema != SCHEMA {
            return Err(ConfigError::new("CONFIG_SCHEMA", format!("schema {} is not supported (expected {SCHEMA})", self.schema)));
        }
        let w = &self.window;
        if !(w.e1 < w.e2) || !(w.delta > 0.0) {
            return bad(format!("window needs e1 < e2 and delta > 0, got ({}, {}, {})", w.e1, w.e2, w.delta));
        }
        if self.hbar_list.is_empty() || self.hbar_list.iter().any(|h| !(*h > 0.0)) {
            return bad("hbar_list must be a non-empty list of positive values".into());
        }
        if self.lambda_grid.count < 4 {
            return bad(format!("lambda_grid.count must be at least 4, got {}", self.lambda_grid.count));
        }
        let nodes = self.lambda_nodes();
        if !(nodes[0] < nodes[nodes.len() - 1]) {
            return bad("lambda_grid bounds must be increasing".into());
        }
        if self.quasimode.sweep.iter().any(|h| !(*h > 0.0)) || self.bargmann.hbar_list.iter().any(|h| !(*h > 0.0)) {
            return bad("hbar sweeps must be positive".into());
        }
        Ok(())
    }
}

/// Splits `--a.b value` / `--a.b=value` pairs.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let key = a
            .strip_prefix("--")
            .filter(|k| !k.is_empty())
            .ok_or_else(|| ConfigError::new("USAGE", format!("expected --key value, got '{a}'")))?;
        match key.split_once('=') {
            Some((k, v)) => out.push((k.to_string(), v.to_string())),
            None => {
                let v = it.next().ok_or_else(|| ConfigError::new("USAGE", format!("missing value for --{key}")))?;
                out.push((key.to_string(), v.clone()));
            }
        }
    }
    Ok(out)
}

/// Values are read as JSON when they parse, as strings otherwise.
pub fn apply_override(root: &mut Value, path: &str, raw: &str) -> Result<(), ConfigError> {
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::new("USAGE", format!("malformed key '{path}'")));
    }
    let mut node = root;
    for p in &parts[..parts.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| ConfigError::new("CONFIG_INVALID", format!("'{path}' does not name an object field")))?;
        node = obj.entry(p.to_string()).or_insert_with(|| Value::Object(Default::default()));
        if node.is_null() {
            *node = Value::Object(Default::default());
        }
    }
    let obj = node
        .as_object_mut()
        .ok_or_else(|| ConfigError::new("CONFIG_INVALID", format!("'{path}' does not name an object field")))?;
    obj.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

pub fn from_value(value: Value) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = serde_json::from_value(value).map_err(|e| ConfigError::new("CONFIG_INVALID", e.to_string()))?;
    cfg.check()?;
    Ok(cfg)
}

pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            ConfigError::new("CONFIG_NOT_FOUND", path.display().to_string())
        } else {
            ConfigError::new("CONFIG_UNREADABLE", format!("{}: {e}", path.display()))
        }
    })?;
    let mut value: Value = serde_json::from_str(&text).map_err(|e| ConfigError::new("CONFIG_PARSE", e.to_string()))?;
    if !value.is_object() {
        return Err(ConfigError::new("CONFIG_PARSE", "top level must be a JSON object"));
    }
    for (k, v) in overrides {
        apply_override(&mut value, k, v)?;
    }
    from_value(value)
}

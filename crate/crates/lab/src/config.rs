//! Experiment configuration: JSON parsing, defaults, dotted overrides and
//! validation that reports every bad field at once.

use std::fmt;
use std::path::{Path, PathBuf};

use movi_core::schemes::DEFAULT_LEDGER_CAP_BYTES;
use movi_core::{BetaSchedule, GarnetSpec, SchemeId};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub const DEFAULT_GAMMA: f64 = 0.9;
pub const DEFAULT_ITERATIONS: usize = 10_000;
/// Bound evaluation costs O(k^2) kernel applications per checkpoint.
pub const DEFAULT_BOUNDS_ITERATIONS: usize = 1_000;
pub const DEFAULT_N_MDPS: usize = 100;
pub const DEFAULT_OUTPUT_DIR: &str = "movi-out";
pub const OUTPUT_DIR_ENV: &str = "MOVI_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Loss curves of AVI and MoVI.
    Convergence,
    /// Loss curves of every configured scheme.
    Compare,
    /// Propagated-error estimator on each Garnet.
    Assumption,
    /// Error-propagation bounds against realised losses.
    Bounds,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Convergence => "convergence",
            Self::Compare => "compare",
            Self::Assumption => "assumption",
            Self::Bounds => "bounds",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalNorm {
    /// l1 norm under the uniform distribution on state-action pairs.
    L1Uniform,
    Sup,
}

/// Garnet shape; each MDP gets its own derived seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GarnetShape {
    pub n_states: usize,
    pub n_actions: usize,
    pub branching: usize,
}

impl GarnetShape {
    pub fn with_seed(self, seed: u64) -> GarnetSpec {
        GarnetSpec::new(self.n_states, self.n_actions, self.branching, seed)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssumptionParams {
    pub j: usize,
    pub l_values: Vec<usize>,
    pub n_max: usize,
}

impl Default for AssumptionParams {
    fn default() -> Self {
        Self {
            j: 50,
            l_values: vec![0, 1, 2, 5],
            n_max: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsParams {
    pub delta: f64,
    pub memory_cap_bytes: u64,
    /// Random policies used when exact concentrability enumeration is too large.
    pub concentrability_samples: usize,
}

impl Default for BoundsParams {
    fn default() -> Self {
        Self {
            delta: 0.05,
            memory_cap_bytes: DEFAULT_LEDGER_CAP_BYTES,
            concentrability_samples: 1000,
        }
    }
}

/// A fully populated experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub garnet: GarnetShape,
    pub gamma: f64,
    pub schemes: Vec<SchemeId>,
    pub iterations: usize,
    pub n_mdps: usize,
    pub beta: BetaSchedule,
    pub sampled: bool,
    pub checkpoints: Vec<usize>,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub eval_norm: EvalNorm,
    pub assumption: AssumptionParams,
    pub bounds: BoundsParams,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

/// Every problem found in a configuration.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ConfigErrors(pub Vec<FieldError>);

impl ConfigErrors {
    fn single(field: &str, message: impl Into<String>) -> Self {
        Self(vec![FieldError {
            field: field.into(),
            message: message.into(),
        }])
    }

    pub fn fields(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|e| e.field.as_str())
    }
}

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{}: {}", e.field, e.message)?;
        }
        Ok(())
    }
}

struct Collector {
    errors: Vec<FieldError>,
}

impl Collector {
    fn push(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.errors.push(FieldError {
            field: field.into(),
            message: message.into(),
        });
    }

    /// Deserializes `obj[key]`, recording a failure under `prefix.key`.
    fn field<T: DeserializeOwned>(&mut self, obj: &Map<String, Value>, prefix: &str, key: &str) -> Option<T> {
        let v = obj.get(key)?;
        match serde_json::from_value(v.clone()) {
            Ok(t) => Some(t),
            Err(e) => {
                self.push(join(prefix, key), e.to_string());
                None
            }
        }
    }

    fn required<T: DeserializeOwned>(&mut self, obj: &Map<String, Value>, prefix: &str, key: &str) -> Option<T> {
        if !obj.contains_key(key) {
            self.push(join(prefix, key), "missing required field");
            return None;
        }
        self.field(obj, prefix, key)
    }

    fn object<'a>(&mut self, obj: &'a Map<String, Value>, key: &str) -> Option<&'a Map<String, Value>> {
        match obj.get(key)? {
            Value::Object(m) => Some(m),
            _ => {
                self.push(key, "expected an object");
                None
            }
        }
    }

    fn unknown(&mut self, obj: &Map<String, Value>, prefix: &str, known: &[&str]) {
        for key in obj.keys() {
            if !known.contains(&key.as_str()) {
                self.push(join(prefix, key), "unknown field");
            }
        }
    }
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

const TOP_FIELDS: &[&str] = &[
    "kind",
    "garnet",
    "gamma",
    "schemes",
    "iterations",
    "n_mdps",
    "beta",
    "sampled",
    "checkpoints",
    "master_seed",
    "output_dir",
    "eval_norm",
    "assumption",
    "bounds",
];

/// Powers of ten up to `iterations`, plus `iterations` itself.
pub fn default_checkpoints(iterations: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut p = 1usize;
    while p <= iterations {
        out.push(p);
        match p.checked_mul(10) {
            Some(next) => p = next,
            None => break,
        }
    }
    if out.last() != Some(&iterations) {
        out.push(iterations);
    }
    out
}

/// Bound indices `k` need `k + 1` iterations: powers of ten below
/// `iterations`, plus `iterations - 1`.
pub fn default_bound_checkpoints(iterations: usize) -> Vec<usize> {
    let last = iterations.saturating_sub(1);
    let mut out: Vec<usize> = default_checkpoints(iterations)
        .into_iter()
        .filter(|&c| c < iterations)
        .collect();
    if last >= 1 && out.last() != Some(&last) {
        out.push(last);
    }
    out
}

fn default_schemes(kind: ExperimentKind) -> Vec<SchemeId> {
    match kind {
        ExperimentKind::Convergence => vec![SchemeId::Avi, SchemeId::Movi],
        ExperimentKind::Compare => SchemeId::ALL.to_vec(),
        ExperimentKind::Assumption | ExperimentKind::Bounds => vec![SchemeId::Movi],
    }
}

/// Validates a parsed JSON document, applying defaults.
pub fn validate_value(value: &Value) -> Result<ExperimentConfig, ConfigErrors> {
    let Value::Object(obj) = value else {
        return Err(ConfigErrors::single("<root>", "expected a JSON object"));
    };
    let mut c = Collector { errors: Vec::new() };
    c.unknown(obj, "", TOP_FIELDS);

    let kind: Option<ExperimentKind> = c.required(obj, "", "kind");
    let garnet = if !obj.contains_key("garnet") {
        c.push("garnet", "missing required field");
        None
    } else {
        c.object(obj, "garnet").and_then(|g| {
            c.unknown(g, "garnet", &["n_states", "n_actions", "branching"]);
            let ns = c.required(g, "garnet", "n_states");
            let na = c.required(g, "garnet", "n_actions");
            let nb = c.required(g, "garnet", "branching");
            Some(GarnetShape {
                n_states: ns?,
                n_actions: na?,
                branching: nb?,
            })
        })
    };
    let master_seed: Option<u64> = c.required(obj, "", "master_seed");
    let gamma = c.field(obj, "", "gamma").unwrap_or(DEFAULT_GAMMA);
    let schemes: Option<Vec<SchemeId>> = c.field(obj, "", "schemes");
    let iterations = c.field(obj, "", "iterations").unwrap_or(match kind {
        Some(ExperimentKind::Bounds) => DEFAULT_BOUNDS_ITERATIONS,
        _ => DEFAULT_ITERATIONS,
    });
    let n_mdps = c.field(obj, "", "n_mdps").unwrap_or(DEFAULT_N_MDPS);
    let beta: BetaSchedule = c.field(obj, "", "beta").unwrap_or_default();
    let sampled = c.field(obj, "", "sampled").unwrap_or(true);
    let checkpoints: Option<Vec<usize>> = c.field(obj, "", "checkpoints");
    let output_dir = c
        .field(obj, "", "output_dir")
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    let eval_norm = c.field(obj, "", "eval_norm").unwrap_or(EvalNorm::L1Uniform);

    let mut assumption = AssumptionParams::default();
    if let Some(a) = c.object(obj, "assumption") {
        c.unknown(a, "assumption", &["j", "l_values", "n_max"]);
        if let Some(j) = c.field(a, "assumption", "j") {
            assumption.j = j;
        }
        if let Some(l) = c.field(a, "assumption", "l_values") {
            assumption.l_values = l;
        }
        if let Some(n) = c.field(a, "assumption", "n_max") {
            assumption.n_max = n;
        }
    }
    let mut bounds = BoundsParams::default();
    if let Some(b) = c.object(obj, "bounds") {
        c.unknown(b, "bounds", &["delta", "memory_cap_bytes", "concentrability_samples"]);
        if let Some(d) = c.field(b, "bounds", "delta") {
            bounds.delta = d;
        }
        if let Some(m) = c.field(b, "bounds", "memory_cap_bytes") {
            bounds.memory_cap_bytes = m;
        }
        if let Some(n) = c.field(b, "bounds", "concentrability_samples") {
            bounds.concentrability_samples = n;
        }
    }

    // Semantic checks on whatever parsed.
    if !(0.0..1.0).contains(&gamma) {
        c.push("gamma", format!("{gamma} is outside [0, 1)"));
    }
    if iterations == 0 {
        c.push("iterations", "must be at least 1");
    }
    if n_mdps == 0 {
        c.push("n_mdps", "must be at least 1");
    }
    if !beta.is_valid() {
        c.push("beta", "constant mixture rate must lie in [0, 1)");
    }
    if let Some(g) = garnet {
        if g.n_states == 0 {
            c.push("garnet.n_states", "must be at least 1");
        }
        if g.n_actions == 0 {
            c.push("garnet.n_actions", "must be at least 1");
        }
        if g.branching == 0 || g.branching > g.n_states {
            c.push("garnet.branching", format!("must lie in 1..={}", g.n_states));
        }
    }

    let Some(kind) = kind else {
        return Err(ConfigErrors(c.errors));
    };
    let schemes = schemes.unwrap_or_else(|| default_schemes(kind));
    check_schemes(&mut c, kind, &schemes);

    let checkpoints = checkpoints.unwrap_or_else(|| match kind {
        ExperimentKind::Bounds => default_bound_checkpoints(iterations),
        _ => default_checkpoints(iterations),
    });
    if kind != ExperimentKind::Assumption {
        check_checkpoints(&mut c, kind, &checkpoints, iterations);
    }
    match kind {
        ExperimentKind::Assumption => check_assumption(&mut c, &assumption),
        ExperimentKind::Bounds => {
            if !(bounds.delta > 0.0 && bounds.delta < 1.0) {
                c.push("bounds.delta", "must lie in (0, 1)");
            }
            if bounds.memory_cap_bytes == 0 {
                c.push("bounds.memory_cap_bytes", "must be positive");
            }
            if bounds.concentrability_samples == 0 {
                c.push("bounds.concentrability_samples", "must be positive");
            }
        }
        _ => {}
    }

    if !c.errors.is_empty() {
        return Err(ConfigErrors(c.errors));
    }
    Ok(ExperimentConfig {
        kind,
        garnet: garnet.expect("garnet parsed"),
        gamma,
        schemes,
        iterations,
        n_mdps,
        beta,
        sampled,
        checkpoints,
        master_seed: master_seed.expect("seed parsed"),
        output_dir,
        eval_norm,
        assumption,
        bounds,
    })
}

fn check_schemes(c: &mut Collector, kind: ExperimentKind, schemes: &[SchemeId]) {
    if schemes.is_empty() {
        c.push("schemes", "must name at least one scheme");
    }
    for (i, s) in schemes.iter().enumerate() {
        if schemes[..i].contains(s) {
            c.push("schemes", format!("{s} listed twice"));
        }
    }
    match kind {
        ExperimentKind::Convergence => {
            for needed in [SchemeId::Avi, SchemeId::Movi] {
                if !schemes.contains(&needed) {
                    c.push("schemes", format!("a convergence run needs {needed}"));
                }
            }
        }
        ExperimentKind::Assumption => {
            if schemes != [SchemeId::Movi] {
                c.push("schemes", "the assumption check runs movi only");
            }
        }
        ExperimentKind::Bounds => {
            if schemes.contains(&SchemeId::Avi) {
                c.push("schemes", "no bound is tracked for avi");
            }
        }
        ExperimentKind::Compare => {}
    }
}

fn check_checkpoints(c: &mut Collector, kind: ExperimentKind, checkpoints: &[usize], iterations: usize) {
    if checkpoints.is_empty() {
        c.push("checkpoints", "must not be empty");
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        c.push("checkpoints", "must be strictly increasing");
    }
    if checkpoints.first() == Some(&0) {
        c.push("checkpoints", "must be at least 1");
    }
    let limit = match kind {
        // Index k bounds the policy of step k + 1.
        ExperimentKind::Bounds => iterations.saturating_sub(1),
        _ => iterations,
    };
    if checkpoints.last().is_some_and(|&last| last > limit) {
        c.push("checkpoints", format!("must not exceed {limit}"));
    }
}

fn check_assumption(c: &mut Collector, a: &AssumptionParams) {
    if a.j == 0 {
        c.push("assumption.j", "must be at least 1");
    }
    if a.l_values.is_empty() {
        c.push("assumption.l_values", "must not be empty");
    }
    if a.l_values.windows(2).any(|w| w[0] >= w[1]) {
        c.push("assumption.l_values", "must be strictly increasing");
    }
    if a.n_max == 0 {
        c.push("assumption.n_max", "must be at least 1");
    }
}

/// Parses and validates configuration text.
pub fn validate_str(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    validate_value(&parse_str(text)?)
}

pub fn parse_str(text: &str) -> Result<Value, ConfigErrors> {
    if text.trim().is_empty() {
        let mut errors = Vec::new();
        for field in ["kind", "garnet", "master_seed"] {
            errors.push(FieldError {
                field: field.into(),
                message: "missing required field (empty configuration)".into(),
            });
        }
        return Err(ConfigErrors(errors));
    }
    serde_json::from_str(text).map_err(|e| ConfigErrors::single("<root>", format!("invalid JSON: {e}")))
}

pub fn read_config_value(path: &Path) -> Result<Value, ConfigErrors> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigErrors::single("<file>", format!("cannot read {}: {e}", path.display())))?;
    parse_str(&text)
}

/// Reads, parses and validates a configuration file.
pub fn validate_config(path: &Path) -> Result<ExperimentConfig, ConfigErrors> {
    validate_value(&read_config_value(path)?)
}

/// Sets `value[dotted.path] = raw`. `raw` is read as JSON when it parses,
/// and as a plain string otherwise.
pub fn apply_override(value: &mut Value, dotted: &str, raw: &str) -> Result<(), ConfigErrors> {
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let Value::Object(root) = value else {
        return Err(ConfigErrors::single("<root>", "expected a JSON object"));
    };
    let mut parts = dotted.split('.').peekable();
    let mut obj = root;
    while let Some(part) = parts.next() {
        if part.is_empty() {
            return Err(ConfigErrors::single(dotted, "empty path component"));
        }
        if parts.peek().is_none() {
            obj.insert(part.to_string(), parsed);
            return Ok(());
        }
        let slot = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
        obj = match slot {
            Value::Object(m) => m,
            _ => return Err(ConfigErrors::single(dotted, format!("{part} is not an object"))),
        };
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

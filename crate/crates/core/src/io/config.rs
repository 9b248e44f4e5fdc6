use std::fmt::Write as _;
use std::path::PathBuf;

use thiserror::Error;

use crate::model::ModelParams;
use crate::scenarios::{preset, InitialCondition, Scenario, DEFAULT_SEED};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid `{key}`: {message}")]
    Validation { key: String, message: String },
}

impl ConfigError {
    fn invalid(key: &str, message: impl Into<String>) -> Self {
        ConfigError::Validation { key: key.to_string(), message: message.into() }
    }

    /// Offending key of a validation error.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::Validation { key, .. } => Some(key),
            ConfigError::Parse { .. } => None,
        }
    }
}

/// Keys accepted by [`parse_config`], with their meaning and default.
pub const KEYS: [(&str, &str); 21] = [
    ("scenario", "preset name; its values are the base that other keys override"),
    ("init", "initial condition without a preset: shape1|shape2|separation|bubble|droplet"),
    ("order", "BDF order k in 1..=5 (default 2)"),
    ("modes", "Fourier modes per axis, even (preset value or 128)"),
    ("domain", "square domain bounds `a,b` (preset value or 0,1)"),
    ("dt", "time step (required without a preset)"),
    ("tend", "final time (required without a preset)"),
    ("out", "output directory (default `out`)"),
    ("snap_every", "snapshot cadence in steps (default: first and last step only)"),
    ("diag_every", "diagnostics cadence in steps (default 1)"),
    ("seed", "RNG seed for randomized initial data"),
    ("kappa0", "energy shift kappa0 (preset value, else 1)"),
    ("lambda", "mixing energy density"),
    ("mobility", "mobility M"),
    ("eps", "interface width"),
    ("gamma", "stabilization constant"),
    ("nu", "viscosity"),
    ("chi", "buoyancy strength"),
    ("gravity", "gravity direction `gx,gy`"),
    ("buoyancy", "true|false; false forces chi = 0 (default true)"),
    ("debug_checks", "true|false; verify the sigma representation every step (default false)"),
];

/// A validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    /// Preset the run started from, if any.
    pub preset: Option<String>,
    pub order: usize,
    pub out: PathBuf,
    /// Snapshot cadence in steps; `None` writes the first and last step.
    pub snap_every: Option<usize>,
    pub diag_every: usize,
    pub buoyancy: bool,
    pub debug_checks: bool,
}

impl RunConfig {
    pub fn steps(&self) -> usize {
        self.scenario.steps()
    }

    /// Effective configuration as `key=value` text that parses back to `self`.
    pub fn to_text(&self) -> String {
        let s = &self.scenario;
        let p = &s.params;
        let mut out = String::new();
        if let Some(name) = &self.preset {
            let _ = writeln!(out, "scenario={name}");
        }
        let _ = writeln!(out, "init={}", s.init.name());
        let _ = writeln!(out, "order={}", self.order);
        let _ = writeln!(out, "modes={}", s.modes);
        let _ = writeln!(out, "domain={:?},{:?}", s.domain[0], s.domain[1]);
        let _ = writeln!(out, "dt={:?}", s.dt);
        let _ = writeln!(out, "tend={:?}", s.t_end);
        let _ = writeln!(out, "out={}", self.out.display());
        if let Some(n) = self.snap_every {
            let _ = writeln!(out, "snap_every={n}");
        }
        let _ = writeln!(out, "diag_every={}", self.diag_every);
        let _ = writeln!(out, "seed={}", s.seed);
        let _ = writeln!(out, "kappa0={:?}", p.kappa0);
        let _ = writeln!(out, "lambda={:?}", p.lambda);
        let _ = writeln!(out, "mobility={:?}", p.mobility);
        let _ = writeln!(out, "eps={:?}", p.eps);
        let _ = writeln!(out, "gamma={:?}", p.gamma);
        let _ = writeln!(out, "nu={:?}", p.nu);
        let _ = writeln!(out, "chi={:?}", p.chi);
        let _ = writeln!(out, "gravity={:?},{:?}", p.gravity[0], p.gravity[1]);
        let _ = writeln!(out, "buoyancy={}", self.buoyancy);
        let _ = writeln!(out, "debug_checks={}", self.debug_checks);
        out
    }
}

/// Raw `key=value` pairs in file order, keys normalized to snake case.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub entries: Vec<(String, String)>,
}

impl RawConfig {
    /// Append or replace a key.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        let key = normalize_key(key);
        let value = value.into();
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key, value)),
        }
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

fn normalize_key(key: &str) -> String {
    key.trim().replace('-', "_").to_ascii_lowercase()
}

/// Split text into pairs. Blank lines and `#` comments (whole-line or
/// trailing) are skipped; a repeated key keeps its last value.
pub fn parse_pairs(text: &str) -> Result<RawConfig, ConfigError> {
    let mut raw = RawConfig::default();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Parse { line: line_no, message: format!("expected key=value, got `{content}`") });
        };
        let key = normalize_key(key);
        if key.is_empty() {
            return Err(ConfigError::Parse { line: line_no, message: "empty key".into() });
        }
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(ConfigError::Parse { line: line_no, message: format!("unknown key `{key}`") });
        }
        raw.set(&key, value.trim());
    }
    Ok(raw)
}

/// Parse and validate flat `key=value` configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    validate(&parse_pairs(text)?)
}

fn number<T: std::str::FromStr>(raw: &RawConfig, key: &str) -> Result<Option<T>, ConfigError> {
    raw.get(key)
        .map(|v| v.parse::<T>().map_err(|_| ConfigError::invalid(key, format!("cannot parse `{v}`"))))
        .transpose()
}

fn pair(raw: &RawConfig, key: &str) -> Result<Option<[f64; 2]>, ConfigError> {
    let Some(v) = raw.get(key) else { return Ok(None) };
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    let bad = || ConfigError::invalid(key, format!("expected two comma-separated numbers, got `{v}`"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let a = parts[0].parse().map_err(|_| bad())?;
    let b = parts[1].parse().map_err(|_| bad())?;
    Ok(Some([a, b]))
}

fn flag(raw: &RawConfig, key: &str) -> Result<Option<bool>, ConfigError> {
    raw.get(key)
        .map(|v| match v.to_ascii_lowercase().as_str() {
            "true" | "1" | "yes" | "on" => Ok(true),
            "false" | "0" | "no" | "off" => Ok(false),
            _ => Err(ConfigError::invalid(key, format!("expected true or false, got `{v}`"))),
        })
        .transpose()
}

fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::invalid(key, format!("must be positive and finite, got {v}")))
    }
}

/// Merge rule: start from the preset named by `scenario` (if any); every other
/// key present overrides the corresponding preset value. Without a preset,
/// `init`, `dt` and `tend` are required and unspecified physical parameters
/// take the values of [`ModelParams::default`] (`kappa0 = 1`).
pub fn validate(raw: &RawConfig) -> Result<RunConfig, ConfigError> {
    // Bad values are reported before missing ones.
    for key in ["dt", "tend"] {
        if let Some(v) = number::<f64>(raw, key)? {
            positive(key, v)?;
        }
    }
    let preset_name = raw.get("scenario").map(str::to_string);
    let mut scenario = match &preset_name {
        Some(name) => preset(name).map_err(|e| ConfigError::invalid("scenario", e.to_string()))?,
        None => {
            let Some(init) = raw.get("init") else {
                return Err(ConfigError::invalid("scenario", "a scenario preset or an explicit `init` is required"));
            };
            let init = InitialCondition::parse(init).map_err(|e| ConfigError::invalid("init", e.to_string()))?;
            if raw.get("dt").is_none() {
                return Err(ConfigError::invalid("dt", "required without a scenario preset"));
            }
            if raw.get("tend").is_none() {
                return Err(ConfigError::invalid("tend", "required without a scenario preset"));
            }
            Scenario {
                name: init.name().to_string(),
                params: ModelParams::default(),
                modes: 128,
                domain: [0.0, 1.0],
                dt: 1.0,
                t_end: 1.0,
                init,
                seed: DEFAULT_SEED,
            }
        }
    };
    if let Some(init) = raw.get("init") {
        scenario.init = InitialCondition::parse(init).map_err(|e| ConfigError::invalid("init", e.to_string()))?;
    }
    if let Some(dt) = number::<f64>(raw, "dt")? {
        scenario.dt = positive("dt", dt)?;
    }
    if let Some(t) = number::<f64>(raw, "tend")? {
        scenario.t_end = positive("tend", t)?;
    }
    if let Some(m) = number::<usize>(raw, "modes")? {
        if m < 4 || m % 2 != 0 {
            return Err(ConfigError::invalid("modes", format!("must be even and at least 4, got {m}")));
        }
        scenario.modes = m;
    }
    if let Some(d) = pair(raw, "domain")? {
        if !(d[0].is_finite() && d[1].is_finite() && d[1] > d[0]) {
            return Err(ConfigError::invalid("domain", "upper bound must exceed lower bound"));
        }
        scenario.domain = d;
    }
    if let Some(seed) = number::<u64>(raw, "seed")? {
        scenario.seed = seed;
    }
    let p = &mut scenario.params;
    for (key, slot) in [
        ("kappa0", &mut p.kappa0),
        ("lambda", &mut p.lambda),
        ("mobility", &mut p.mobility),
        ("eps", &mut p.eps),
        ("gamma", &mut p.gamma),
        ("nu", &mut p.nu),
        ("chi", &mut p.chi),
    ] {
        if let Some(v) = number::<f64>(raw, key)? {
            *slot = v;
        }
    }
    if let Some(g) = pair(raw, "gravity")? {
        p.gravity = g;
    }
    let buoyancy = flag(raw, "buoyancy")?.unwrap_or(true);
    if !buoyancy {
        p.chi = 0.0;
    }
    if let Err(crate::model::ModelError::InvalidParameter { name, requirement, value }) = p.validate() {
        return Err(ConfigError::invalid(name, format!("must be {requirement}, got {value}")));
    }

    let order = number::<usize>(raw, "order")?.unwrap_or(2);
    if !(1..=5).contains(&order) {
        return Err(ConfigError::invalid("order", format!("must be in 1..=5, got {order}")));
    }
    let snap_every = number::<usize>(raw, "snap_every")?;
    if snap_every == Some(0) {
        return Err(ConfigError::invalid("snap_every", "cadence must be at least 1"));
    }
    let diag_every = number::<usize>(raw, "diag_every")?.unwrap_or(1);
    if diag_every == 0 {
        return Err(ConfigError::invalid("diag_every", "cadence must be at least 1"));
    }
    if scenario.steps() == 0 {
        return Err(ConfigError::invalid("tend", format!("shorter than half a step of {}", scenario.dt)));
    }
    Ok(RunConfig {
        scenario,
        preset: preset_name,
        order,
        out: PathBuf::from(raw.get("out").unwrap_or("out")),
        snap_every,
        diag_every,
        buoyancy,
        debug_checks: flag(raw, "debug_checks")?.unwrap_or(false),
    })
}

/// `--help` text listing every key.
pub fn keys_help() -> String {
    let mut s = String::from("configuration keys (key=value, one per line, `#` comments):\n");
    for (k, d) in KEYS {
        let _ = writeln!(s, "  {k:<13} {d}");
    }
    s
}

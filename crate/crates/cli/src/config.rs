use std::fmt;
use std::path::{Path, PathBuf};

use oscbath::{CoarseGrain, ModelParams, Temperature};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::presets;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or arguments; exit code 2.
    Config(String),
    /// A simulation step failed; exit code 1.
    Run(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Run(m) => write!(f, "{m}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Run(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn config_err(m: impl Into<String>) -> CliError {
    CliError::Config(m.into())
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub omega0: Option<f64>,
    pub g: Option<f64>,
    pub kappa0: Option<f64>,
    pub omega_c: Option<f64>,
    pub alpha: Option<f64>,
    /// Mean occupation N(ω0); exclusive with `beta`.
    pub n0: Option<f64>,
    pub beta: Option<f64>,
    pub m: Option<usize>,
    /// Coarse-graining interval; S₊₋ = sinc(gΔt). Exclusive with `s`.
    pub delta_t: Option<f64>,
    /// S₊₋ used by a bare `cg_redfield` scheme.
    pub s: Option<f64>,
    /// Defaults to 0.4 κ(ω0).
    pub mixture_rate: Option<f64>,
}

pub const MODEL_KEYS: [&str; 11] =
    ["omega0", "g", "kappa0", "omega_c", "alpha", "n0", "beta", "m", "delta_t", "s", "mixture_rate"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[serde(alias = "lin")]
    Linear,
    Log,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    #[serde(default = "linear")]
    pub spacing: Spacing,
}

fn linear() -> Spacing {
    Spacing::Linear
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { start: 0.0, stop: 300.0, count: 601, spacing: Spacing::Linear }
    }
}

impl GridSpec {
    /// Parses `start:stop:count[:lin|log]`.
    pub fn parse(s: &str) -> CliResult<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(config_err(format!("grid `{s}`: expected start:stop:count[:lin|log]")));
        }
        let num = |i: usize, what: &str| {
            parts[i].trim().parse::<f64>().map_err(|_| config_err(format!("grid `{s}`: bad {what} `{}`", parts[i])))
        };
        let count = parts[2]
            .trim()
            .parse::<usize>()
            .map_err(|_| config_err(format!("grid `{s}`: bad count `{}`", parts[2])))?;
        let spacing = match parts.get(3).map(|p| p.trim()) {
            None | Some("lin") | Some("linear") => Spacing::Linear,
            Some("log") => Spacing::Log,
            Some(other) => return Err(config_err(format!("grid `{s}`: unknown spacing `{other}`"))),
        };
        Ok(GridSpec { start: num(0, "start")?, stop: num(1, "stop")?, count, spacing })
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.count < 2 {
            return Err(config_err(format!("grid.count: need at least 2 points, got {}", self.count)));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) || self.stop <= self.start {
            return Err(config_err(format!("grid: need start < stop, got {}..{}", self.start, self.stop)));
        }
        if self.start < 0.0 {
            return Err(config_err(format!("grid.start: must be non-negative, got {}", self.start)));
        }
        if self.spacing == Spacing::Log && self.start <= 0.0 {
            return Err(config_err("grid.start: logarithmic grids need start > 0"));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        let n = self.count - 1;
        (0..=n)
            .map(|i| {
                let u = i as f64 / n as f64;
                if i == n {
                    return self.stop;
                }
                match self.spacing {
                    Spacing::Linear => self.start + (self.stop - self.start) * u,
                    Spacing::Log => self.start * (self.stop / self.start).powf(u),
                }
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SchemeSpec {
    Exact,
    Redfield,
    CpRedfield,
    /// None takes S₊₋ from the model section.
    CgRedfield(Option<f64>),
    Global,
    Local,
    Mixture,
}

impl SchemeSpec {
    pub fn parse(s: &str) -> CliResult<Self> {
        let s = s.trim();
        Ok(match s {
            "exact" => SchemeSpec::Exact,
            "redfield" => SchemeSpec::Redfield,
            "cp_redfield" => SchemeSpec::CpRedfield,
            "cg_redfield" => SchemeSpec::CgRedfield(None),
            "global" => SchemeSpec::Global,
            "local" => SchemeSpec::Local,
            "mixture" => SchemeSpec::Mixture,
            _ => {
                let inner = s
                    .strip_prefix("cg_redfield(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| config_err(format!("schemes: unknown scheme `{s}`")))?;
                let v =
                    inner.trim().parse::<f64>().map_err(|_| config_err(format!("schemes: bad S value in `{s}`")))?;
                SchemeSpec::CgRedfield(Some(v))
            }
        })
    }

    /// File stem of the scheme's CSV.
    pub fn label(&self) -> String {
        match self {
            SchemeSpec::Exact => "exact".into(),
            SchemeSpec::Redfield => "redfield".into(),
            SchemeSpec::CpRedfield => "cp_redfield".into(),
            SchemeSpec::CgRedfield(None) => "cg_redfield".into(),
            SchemeSpec::CgRedfield(Some(s)) => format!("cg_redfield_{s}"),
            SchemeSpec::Global => "global".into(),
            SchemeSpec::Local => "local".into(),
            SchemeSpec::Mixture => "mixture".into(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub schemes: Vec<String>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "yes")]
    pub lamb_shift: bool,
    #[serde(default)]
    pub oracle_verify: bool,
    /// Reference scheme of the fidelity table.
    #[serde(default = "exact")]
    pub reference: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn yes() -> bool {
    true
}

fn exact() -> String {
    "exact".into()
}

/// Command-line overrides, applied after the preset and the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub config: Option<PathBuf>,
    pub set: Vec<String>,
    pub schemes: Option<String>,
    pub grid: Option<String>,
    pub lamb_shift: Option<bool>,
    pub out: Option<PathBuf>,
}

fn merge(into: &mut Table, from: Table) {
    for (k, v) in from {
        match (into.get_mut(&k), v) {
            (Some(Value::Table(a)), Value::Table(b)) => merge(a, b),
            (_, v) => {
                into.insert(k, v);
            }
        }
    }
}

fn parse_value(raw: &str) -> Value {
    let raw = raw.trim();
    match toml::from_str::<Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.into())),
        Err(_) => Value::String(raw.into()),
    }
}

/// `key=value` with bare model keys accepted for `model.key`.
fn set_entry(table: &mut Table, entry: &str) -> CliResult<()> {
    let (key, raw) = entry.split_once('=').ok_or_else(|| config_err(format!("--set `{entry}`: expected key=value")))?;
    let key = key.trim();
    let path: Vec<&str> =
        if !key.contains('.') && MODEL_KEYS.contains(&key) { vec!["model", key] } else { key.split('.').collect() };
    let mut cursor = table;
    for part in &path[..path.len() - 1] {
        let slot = cursor.entry(part.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cursor = slot.as_table_mut().ok_or_else(|| config_err(format!("--set `{entry}`: `{part}` is not a table")))?;
    }
    cursor.insert(path[path.len() - 1].to_string(), parse_value(raw));
    Ok(())
}

fn read_file(path: &Path) -> CliResult<Table> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

impl RunConfig {
    pub fn load(o: &Overrides) -> CliResult<Self> {
        let file = o.config.as_deref().map(read_file).transpose()?;
        let preset = o
            .preset
            .clone()
            .or_else(|| file.as_ref().and_then(|f| f.get("preset")).and_then(|v| v.as_str()).map(String::from));

        let mut table = Table::new();
        if let Some(name) = &preset {
            merge(&mut table, presets::table(name)?);
        }
        if let Some(f) = file {
            merge(&mut table, f);
        }
        for entry in &o.set {
            set_entry(&mut table, entry)?;
        }
        if let Some(s) = &o.schemes {
            let list = s.split(',').filter(|x| !x.trim().is_empty()).map(|x| Value::String(x.trim().into()));
            table.insert("schemes".into(), Value::Array(list.collect()));
        }
        if let Some(name) = preset {
            table.insert("preset".into(), Value::String(name));
        }

        let mut cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| {
            let origin = o.config.as_ref().map(|p| format!("{}: ", p.display())).unwrap_or_default();
            config_err(format!("{origin}{}", e.message()))
        })?;
        if let Some(g) = &o.grid {
            cfg.grid = GridSpec::parse(g)?;
        }
        if let Some(ls) = o.lamb_shift {
            cfg.lamb_shift = ls;
        }
        if o.out.is_some() {
            cfg.out = o.out.clone();
        }
        Ok(cfg)
    }

    pub fn params(&self) -> CliResult<ModelParams> {
        let m = &self.model;
        let base = ModelParams::reference();
        let kappa0 = m.kappa0.unwrap_or(base.kappa0);
        let mut p = ModelParams {
            omega0: m.omega0.unwrap_or(base.omega0),
            g: m.g.unwrap_or(base.g),
            kappa0,
            omega_c: m.omega_c.unwrap_or(base.omega_c),
            alpha: m.alpha.unwrap_or(base.alpha),
            beta: base.beta,
            m: m.m.unwrap_or(base.m),
            delta_t: CoarseGrain::Interval(m.delta_t.unwrap_or(0.0)),
            mixture_rate: m.mixture_rate.unwrap_or(0.4 * kappa0),
        };
        let temperature = match (m.n0, m.beta) {
            (Some(_), Some(_)) => return Err(config_err("model: give either n0 or beta, not both")),
            (_, Some(b)) => Temperature::Beta(b),
            (n, None) => Temperature::MeanOccupation(n.unwrap_or(10.0)),
        };
        if m.s.is_some() && m.delta_t.is_some() {
            return Err(config_err("model: give either s or delta_t, not both"));
        }
        if let Some(s) = m.s {
            if !(-1.0..=1.0).contains(&s) {
                return Err(config_err(format!("model.s: must lie in [-1, 1], got {s}")));
            }
        }
        p = p.with_temperature(temperature).map_err(|e| config_err(format!("model: {e}")))?;
        p.validate().map_err(|e| config_err(format!("model: {e}")))?;
        Ok(p)
    }

    pub fn scheme_specs(&self) -> CliResult<Vec<SchemeSpec>> {
        if self.schemes.is_empty() {
            return Err(config_err("schemes: at least one scheme is required"));
        }
        let mut specs = Vec::new();
        for s in &self.schemes {
            let spec = SchemeSpec::parse(s)?;
            if !specs.contains(&spec) {
                specs.push(spec);
            }
        }
        if specs.contains(&SchemeSpec::Mixture)
            && !(specs.contains(&SchemeSpec::Local) && specs.contains(&SchemeSpec::Global))
        {
            return Err(config_err("schemes: mixture requires both local and global"));
        }
        Ok(specs)
    }

    pub fn reference_spec(&self) -> CliResult<SchemeSpec> {
        match SchemeSpec::parse(&self.reference)? {
            SchemeSpec::Mixture => Err(config_err("reference: the mixture cannot serve as reference")),
            s => Ok(s),
        }
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> CliResult<()> {
        self.params()?;
        self.scheme_specs()?;
        self.reference_spec()?;
        self.grid.validate()
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(self.preset.as_deref().unwrap_or("out")))
    }

    /// Sets one model field to a sweep value.
    pub fn with_model_value(&self, axis: &str, value: f64) -> CliResult<Self> {
        if !MODEL_KEYS.contains(&axis) {
            return Err(config_err(format!("sweep: `{axis}` is not a model parameter")));
        }
        let mut table = match Value::try_from(self) {
            Ok(Value::Table(t)) => t,
            _ => return Err(config_err("cannot re-encode the configuration")),
        };
        let v = if axis == "m" {
            if value < 1.0 || value.fract() != 0.0 {
                return Err(config_err(format!("sweep: m must be a positive integer, got {value}")));
            }
            Value::Integer(value as i64)
        } else {
            Value::Float(value)
        };
        let model = table.entry("model").or_insert_with(|| Value::Table(Table::new()));
        model.as_table_mut().ok_or_else(|| config_err("model is not a table"))?.insert(axis.to_string(), v);
        table.try_into().map_err(|e: toml::de::Error| config_err(e.message().to_string()))
    }
}

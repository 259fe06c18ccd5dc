//! Experiment configuration files.
//!
//! A config names one code family and one channel family. Each of their
//! parameters is a scalar, an explicit list, or a range table; the sweep is
//! the Cartesian product of all parameter values, first parameter outermost.
//! See `recipes/SCHEMA.md` for the full format.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use toml::{Table, Value};

use qecfid::codes::build_gkp_square;
use qecfid::fidelity::PerturbativeMode;
use qecfid::recovery_sdp::MAX_SDP_DIM;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Exact,
    Perturbative,
    Sdp,
    Analytic,
}

impl Method {
    pub fn parse(s: &str) -> Option<Method> {
        match s {
            "exact" => Some(Method::Exact),
            "perturbative" => Some(Method::Perturbative),
            "sdp" => Some(Method::Sdp),
            "analytic" => Some(Method::Analytic),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::Perturbative => "perturbative",
            Method::Sdp => "sdp",
            Method::Analytic => "analytic",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Int(i) => Some(*i as f64),
            ParamValue::Float(x) => Some(*x),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Int,
    Float,
    Bool,
    Text,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Int => "integer",
            Kind::Float => "number",
            Kind::Bool => "boolean",
            Kind::Text => "string",
        }
    }
}

enum Need {
    Required,
    Optional,
    Default(ParamValue),
}

struct ParamSpec {
    key: &'static str,
    kind: Kind,
    need: Need,
}

fn spec(key: &'static str, kind: Kind, need: Need) -> ParamSpec {
    ParamSpec { key, kind, need }
}

pub const CODE_FAMILIES: &[&str] =
    &["trivial", "repetition", "leung4", "shor9", "steane7", "cat", "binomial", "gkp", "thermo"];
pub const CHANNEL_FAMILIES: &[&str] = &["damping", "pauli", "flip", "loss", "erasure"];

fn code_schema(family: &str) -> Option<Vec<ParamSpec>> {
    use Kind::*;
    use Need::*;
    Some(match family {
        "trivial" | "leung4" | "shor9" | "steane7" => vec![],
        "repetition" => vec![spec("n", Int, Required)],
        "cat" => vec![spec("alpha", Float, Required), spec("s", Int, Required), spec("cutoff", Int, Optional)],
        "binomial" => vec![spec("s", Int, Required), spec("n_deph", Int, Required), spec("cutoff", Int, Optional)],
        "gkp" => vec![
            spec("delta", Float, Optional),
            spec("nbar", Float, Optional),
            spec("cutoff", Int, Optional),
            spec("orthonormalize", Bool, Default(ParamValue::Bool(false))),
        ],
        "thermo" => vec![spec("N", Int, Required), spec("d", Int, Required), spec("m0", Int, Optional)],
        _ => return None,
    })
}

fn channel_schema(family: &str) -> Option<Vec<ParamSpec>> {
    use Kind::*;
    use Need::*;
    Some(match family {
        "damping" => vec![
            spec("p", Float, Required),
            spec("max_weight", Int, Optional),
            spec("max_defect", Float, Default(ParamValue::Float(1.0))),
        ],
        "pauli" => vec![
            spec("px", Float, Default(ParamValue::Float(0.0))),
            spec("py", Float, Default(ParamValue::Float(0.0))),
            spec("pz", Float, Default(ParamValue::Float(0.0))),
            spec("max_weight", Int, Optional),
            spec("max_defect", Float, Default(ParamValue::Float(1.0))),
        ],
        "flip" => vec![spec("pauli", Text, Default(ParamValue::Text("X".into()))), spec("q", Float, Required)],
        "loss" => vec![spec("gamma", Float, Required)],
        "erasure" => vec![spec("l", Int, Required), spec("p", Float, Default(ParamValue::Float(1.0)))],
        _ => return None,
    })
}

/// One configuration parameter and the values it takes.
#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    /// `code.<key>` or `channel.<key>`.
    pub name: String,
    pub values: Vec<ParamValue>,
}

impl Axis {
    pub fn key(&self) -> &str {
        self.name.split_once('.').map(|(_, k)| k).unwrap_or(&self.name)
    }

    pub fn is_swept(&self) -> bool {
        self.values.len() > 1
    }
}

/// One point of the sweep: every parameter with a single value.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub index: usize,
    pub code_family: String,
    pub channel_family: String,
    pub params: Vec<(String, ParamValue)>,
}

impl Point {
    pub fn get(&self, name: &str) -> Option<&ParamValue> {
        self.params.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn code_param(&self, key: &str) -> Option<&ParamValue> {
        self.get(&format!("code.{key}"))
    }

    pub fn channel_param(&self, key: &str) -> Option<&ParamValue> {
        self.get(&format!("channel.{key}"))
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub sdp_tol: f64,
    pub sdp_max_iter: usize,
    pub bound_tol: f64,
    pub kl_tol: f64,
    pub perturbative_cutoff: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { sdp_tol: 1e-7, sdp_max_iter: 50_000, bound_tol: 1e-6, kl_tol: 1e-8, perturbative_cutoff: 1e-12 }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OutputSpec {
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub x: Option<String>,
    pub y: Vec<String>,
    pub log_x: bool,
    pub log_y: bool,
    pub title: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub code_family: String,
    pub channel_family: String,
    pub axes: Vec<Axis>,
    /// Sorted, no duplicates.
    pub methods: Vec<Method>,
    pub perturbative_mode: PerturbativeMode,
    pub workers: Option<usize>,
    pub output: OutputSpec,
    pub tolerances: Tolerances,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: RawExperiment,
    code: Table,
    channel: Table,
    #[serde(default)]
    output: RawOutput,
    #[serde(default)]
    tolerances: Tolerances,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    name: String,
    methods: Vec<String>,
    #[serde(default)]
    workers: Option<usize>,
    #[serde(default)]
    perturbative_mode: Option<String>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    csv: Option<PathBuf>,
    svg: Option<PathBuf>,
    x: Option<String>,
    #[serde(default)]
    y: Vec<String>,
    #[serde(default)]
    log_x: bool,
    #[serde(default)]
    log_y: bool,
    title: Option<String>,
}

/// Diagnostics carry the field path and, when it can be found, the line.
struct Diag<'a> {
    source: &'a str,
}

impl Diag<'_> {
    fn line_of(&self, section: &str, key: &str) -> Option<usize> {
        let mut in_section = false;
        for (i, line) in self.source.lines().enumerate() {
            let t = line.trim();
            if t.starts_with('[') {
                in_section = t.trim_matches(|c| c == '[' || c == ']').trim() == section;
                continue;
            }
            if in_section {
                if let Some((k, _)) = t.split_once('=') {
                    if k.trim().trim_matches('"') == key {
                        return Some(i + 1);
                    }
                }
            }
        }
        None
    }

    fn err(&self, section: &str, key: &str, msg: impl fmt::Display) -> CliError {
        let field = if key.is_empty() { section.to_string() } else { format!("{section}.{key}") };
        match self.line_of(section, key) {
            Some(line) => CliError::Config(format!("line {line}, field `{field}`: {msg}")),
            None => CliError::Config(format!("field `{field}`: {msg}")),
        }
    }
}

pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim_end().to_string()))?;
    let diag = Diag { source: text };

    let mut methods = Vec::new();
    for m in &raw.experiment.methods {
        let method = Method::parse(m)
            .ok_or_else(|| diag.err("experiment", "methods", format!("unknown method `{m}` (exact, perturbative, sdp, analytic)")))?;
        if methods.contains(&method) {
            return Err(diag.err("experiment", "methods", format!("method `{m}` listed twice")));
        }
        methods.push(method);
    }
    if methods.is_empty() {
        return Err(diag.err("experiment", "methods", "no methods requested"));
    }
    methods.sort();

    let perturbative_mode = match raw.experiment.perturbative_mode.as_deref() {
        None | Some("diag") => PerturbativeMode::DiagTruncation,
        Some("unitary") => PerturbativeMode::UnitaryRotation,
        Some(other) => {
            return Err(diag.err("experiment", "perturbative_mode", format!("`{other}` is neither `diag` nor `unitary`")))
        }
    };
    if raw.experiment.workers == Some(0) {
        return Err(diag.err("experiment", "workers", "must be at least 1"));
    }

    let code_family = family_of(&diag, "code", &raw.code, CODE_FAMILIES)?;
    let channel_family = family_of(&diag, "channel", &raw.channel, CHANNEL_FAMILIES)?;
    let mut axes = parse_axes(&diag, "code", &raw.code, &code_schema(&code_family).expect("family checked"))?;
    axes.extend(parse_axes(&diag, "channel", &raw.channel, &channel_schema(&channel_family).expect("family checked"))?);

    check_tolerances(&diag, &raw.tolerances)?;

    let output = OutputSpec {
        csv: raw.output.csv,
        svg: raw.output.svg,
        x: raw.output.x,
        y: raw.output.y,
        log_x: raw.output.log_x,
        log_y: raw.output.log_y,
        title: raw.output.title,
    };

    let cfg = ExperimentConfig {
        name: raw.experiment.name,
        code_family,
        channel_family,
        axes,
        methods,
        perturbative_mode,
        workers: raw.experiment.workers,
        output,
        tolerances: raw.tolerances,
    };
    cfg.validate_with(&diag)?;
    Ok(cfg)
}

fn family_of(diag: &Diag, section: &str, table: &Table, known: &[&str]) -> Result<String, CliError> {
    match table.get("family") {
        Some(Value::String(s)) if known.contains(&s.as_str()) => Ok(s.clone()),
        Some(Value::String(s)) => {
            Err(diag.err(section, "family", format!("unknown {section} family `{s}` (one of {})", known.join(", "))))
        }
        Some(_) => Err(diag.err(section, "family", "must be a string")),
        None => Err(diag.err(section, "family", "missing")),
    }
}

fn parse_axes(diag: &Diag, section: &str, table: &Table, schema: &[ParamSpec]) -> Result<Vec<Axis>, CliError> {
    for key in table.keys() {
        if key != "family" && !schema.iter().any(|s| s.key == key) {
            let allowed: Vec<&str> = schema.iter().map(|s| s.key).collect();
            let hint = if allowed.is_empty() { "this family takes no parameters".to_string() } else { format!("expected one of {}", allowed.join(", ")) };
            return Err(diag.err(section, key, format!("unknown parameter; {hint}")));
        }
    }
    let mut axes = Vec::new();
    for s in schema {
        let values = match (table.get(s.key), &s.need) {
            (Some(v), _) => sweep_values(v, s.kind).map_err(|msg| diag.err(section, s.key, msg))?,
            (None, Need::Default(v)) => vec![v.clone()],
            (None, Need::Optional) => continue,
            (None, Need::Required) => return Err(diag.err(section, s.key, "required parameter missing")),
        };
        axes.push(Axis { name: format!("{section}.{}", s.key), values });
    }
    Ok(axes)
}

fn scalar(v: &Value, kind: Kind) -> Result<ParamValue, String> {
    let bad = || format!("expected a {}, got {}", kind.name(), v.type_str());
    match (kind, v) {
        (Kind::Int, Value::Integer(i)) => Ok(ParamValue::Int(*i)),
        (Kind::Float, Value::Integer(i)) => Ok(ParamValue::Float(*i as f64)),
        (Kind::Float, Value::Float(x)) if x.is_finite() => Ok(ParamValue::Float(*x)),
        (Kind::Float, Value::Float(x)) => Err(format!("value {x} is not finite")),
        (Kind::Bool, Value::Boolean(b)) => Ok(ParamValue::Bool(*b)),
        (Kind::Text, Value::String(s)) => Ok(ParamValue::Text(s.clone())),
        _ => Err(bad()),
    }
}

fn sweep_values(v: &Value, kind: Kind) -> Result<Vec<ParamValue>, String> {
    match v {
        Value::Array(items) => {
            if items.is_empty() {
                return Err("sweep list is empty".into());
            }
            items.iter().map(|x| scalar(x, kind)).collect()
        }
        Value::Table(t) => range_values(t, kind),
        other => Ok(vec![scalar(other, kind)?]),
    }
}

fn range_values(t: &Table, kind: Kind) -> Result<Vec<ParamValue>, String> {
    let get_f = |k: &str| -> Result<f64, String> {
        match t.get(k) {
            Some(Value::Float(x)) if x.is_finite() => Ok(*x),
            Some(Value::Integer(i)) => Ok(*i as f64),
            Some(_) => Err(format!("range field `{k}` must be a finite number")),
            None => Err(format!("range is missing `{k}`")),
        }
    };
    let get_i = |k: &str| -> Result<Option<i64>, String> {
        match t.get(k) {
            Some(Value::Integer(i)) => Ok(Some(*i)),
            Some(_) => Err(format!("range field `{k}` must be an integer")),
            None => Ok(None),
        }
    };
    match kind {
        Kind::Int => {
            for k in t.keys() {
                if !["from", "to", "step"].contains(&k.as_str()) {
                    return Err(format!("integer range takes from, to, step; got `{k}`"));
                }
            }
            let from = get_i("from")?.ok_or("range is missing `from`")?;
            let to = get_i("to")?.ok_or("range is missing `to`")?;
            let step = get_i("step")?.unwrap_or(1);
            if step <= 0 {
                return Err(format!("range step {step} must be positive"));
            }
            if from > to {
                return Err(format!("sweep range {from}..={to} is empty"));
            }
            Ok((from..=to).step_by(step as usize).map(ParamValue::Int).collect())
        }
        Kind::Float => {
            for k in t.keys() {
                if !["start", "stop", "num", "scale"].contains(&k.as_str()) {
                    return Err(format!("number range takes start, stop, num, scale; got `{k}`"));
                }
            }
            let (start, stop) = (get_f("start")?, get_f("stop")?);
            let num = get_i("num")?.ok_or("range is missing `num`")?;
            if num < 1 {
                return Err(format!("sweep range has num = {num}, nothing to run"));
            }
            let log = match t.get("scale") {
                None => false,
                Some(Value::String(s)) if s == "linear" => false,
                Some(Value::String(s)) if s == "log" => true,
                Some(_) => return Err("range scale must be `linear` or `log`".into()),
            };
            if log && !(start > 0.0 && stop > 0.0) {
                return Err("log range needs positive start and stop".into());
            }
            let n = num as usize;
            Ok((0..n)
                .map(|i| {
                    let t = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                    let x = if log { (start.ln() + t * (stop.ln() - start.ln())).exp() } else { start + t * (stop - start) };
                    ParamValue::Float(x)
                })
                .collect())
        }
        _ => Err(format!("a {} parameter cannot take a range", kind.name())),
    }
}

fn check_tolerances(diag: &Diag, t: &Tolerances) -> Result<(), CliError> {
    for (key, v) in [
        ("sdp_tol", t.sdp_tol),
        ("bound_tol", t.bound_tol),
        ("kl_tol", t.kl_tol),
        ("perturbative_cutoff", t.perturbative_cutoff),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(diag.err("tolerances", key, format!("{v} must be positive and finite")));
        }
    }
    if t.sdp_max_iter == 0 {
        return Err(diag.err("tolerances", "sdp_max_iter", "must be at least 1"));
    }
    Ok(())
}

/// Number of qubits for the qubit code families.
pub fn qubit_count(family: &str, point: &Point) -> Option<usize> {
    let int = |k: &str| match point.code_param(k) {
        Some(ParamValue::Int(i)) if *i >= 0 => Some(*i as usize),
        _ => None,
    };
    match family {
        "trivial" => Some(1),
        "repetition" => int("n"),
        "leung4" => Some(4),
        "shor9" => Some(9),
        "steane7" => Some(7),
        "thermo" => int("N"),
        _ => None,
    }
}

impl ExperimentConfig {
    pub fn swept_axes(&self) -> Vec<&Axis> {
        self.axes.iter().filter(|a| a.is_swept()).collect()
    }

    pub fn has(&self, m: Method) -> bool {
        self.methods.contains(&m)
    }

    pub fn is_bosonic(&self) -> bool {
        matches!(self.code_family.as_str(), "cat" | "binomial" | "gkp")
    }

    /// Every sweep point, first axis outermost.
    pub fn points(&self) -> Vec<Point> {
        let mut combos: Vec<Vec<(String, ParamValue)>> = vec![vec![]];
        for axis in &self.axes {
            combos = combos
                .into_iter()
                .flat_map(|prefix| {
                    axis.values.iter().map(move |v| {
                        let mut next = prefix.clone();
                        next.push((axis.name.clone(), v.clone()));
                        next
                    })
                })
                .collect();
        }
        combos
            .into_iter()
            .enumerate()
            .map(|(index, params)| Point {
                index,
                code_family: self.code_family.clone(),
                channel_family: self.channel_family.clone(),
                params,
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.validate_with(&Diag { source: "" })
    }

    fn validate_with(&self, diag: &Diag) -> Result<(), CliError> {
        for axis in &self.axes {
            if axis.values.is_empty() {
                let (section, key) = axis.name.split_once('.').unwrap_or(("", &axis.name));
                return Err(diag.err(section, key, "sweep is empty"));
            }
            for v in &axis.values {
                if let ParamValue::Float(x) = v {
                    if !x.is_finite() {
                        let (section, key) = axis.name.split_once('.').unwrap_or(("", &axis.name));
                        return Err(diag.err(section, key, format!("value {x} is not finite")));
                    }
                }
            }
        }
        if self.code_family == "gkp" {
            let has = |k: &str| self.axes.iter().any(|a| a.name == format!("code.{k}"));
            if has("delta") == has("nbar") {
                return Err(diag.err("code", "", "gkp needs exactly one of `delta` or `nbar`"));
            }
        }
        if self.has(Method::Analytic) {
            let ok = matches!(
                (self.code_family.as_str(), self.channel_family.as_str()),
                ("thermo", "erasure") | ("gkp", "loss")
            );
            if !ok {
                return Err(diag.err(
                    "experiment",
                    "methods",
                    format!(
                        "no closed form for {} code under {} noise (analytic covers thermo+erasure and gkp+loss)",
                        self.code_family, self.channel_family
                    ),
                ));
            }
        }
        if self.has(Method::Sdp) {
            for point in self.points() {
                let dim = self.sdp_dimension(&point)?;
                if dim > MAX_SDP_DIM {
                    return Err(diag.err(
                        "experiment",
                        "methods",
                        format!("sdp refused: d_L·N = {dim} > {MAX_SDP_DIM} at point {}", describe(&point)),
                    ));
                }
            }
        }
        if self.output.svg.is_some() {
            let swept = self.swept_axes();
            match &self.output.x {
                Some(x) if !self.axes.iter().any(|a| a.name == *x) => {
                    return Err(diag.err("output", "x", format!("`{x}` is not a config parameter")));
                }
                None if !swept.is_empty() => {
                    return Err(diag.err("output", "x", "a plot needs one x axis; name a swept parameter"));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// `d_L · dim(out)` of the recovery Choi matrix at a point.
    pub fn sdp_dimension(&self, point: &Point) -> Result<usize, CliError> {
        let d_l = 2usize;
        let phys = match qubit_count(&self.code_family, point) {
            Some(n) if n < 40 => 1usize << n,
            Some(_) => usize::MAX / 4,
            None => bosonic_dimension(&self.code_family, point)?,
        };
        let out = match (self.channel_family.as_str(), qubit_count(&self.code_family, point)) {
            ("erasure", Some(n)) => {
                let l = match point.channel_param("l") {
                    Some(ParamValue::Int(l)) if *l >= 0 && (*l as usize) <= n => *l as usize,
                    _ => return Ok(usize::MAX / 4),
                };
                if l > 20 || n > 40 {
                    usize::MAX / 4
                } else {
                    3usize.pow(l as u32) << (n - l)
                }
            }
            _ => phys,
        };
        Ok(d_l.saturating_mul(out))
    }
}

fn bosonic_dimension(family: &str, point: &Point) -> Result<usize, CliError> {
    if let Some(ParamValue::Int(c)) = point.code_param("cutoff") {
        return Ok((*c).max(0) as usize + 1);
    }
    match family {
        "gkp" => {
            let delta = match (point.code_param("delta"), point.code_param("nbar")) {
                (Some(d), _) => d.as_f64().unwrap_or(f64::NAN),
                (None, Some(n)) => qecfid::codes::gkp_delta_for_mean(n.as_f64().unwrap_or(f64::NAN))
                    .map_err(|e| CliError::Config(format!("gkp n̄ at {}: {e}", describe(point))))?,
                _ => f64::NAN,
            };
            build_gkp_square(delta, None, None, false)
                .map(|c| c.physical_dim())
                .map_err(|e| CliError::Config(format!("gkp at {}: {e}", describe(point))))
        }
        _ => crate::runner::build_code(point)
            .map(|c| c.physical_dim())
            .map_err(|e| CliError::Config(format!("code at {}: {e}", describe(point)))),
    }
}

/// `code.N=6, channel.p=1` style summary of a point.
pub fn describe(point: &Point) -> String {
    point
        .params
        .iter()
        .map(|(n, v)| match v {
            ParamValue::Int(i) => format!("{n}={i}"),
            ParamValue::Float(x) => format!("{n}={x}"),
            ParamValue::Bool(b) => format!("{n}={b}"),
            ParamValue::Text(s) => format!("{n}={s}"),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

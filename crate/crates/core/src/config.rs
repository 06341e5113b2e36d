//! Experiment configuration.
//!
//! The file is TOML restricted to `key = value` pairs (numbers, strings,
//! booleans, arrays), `#` comments and `[section]` or dotted keys. Every
//! violation is collected and reported together; unknown keys are errors.
//!
//! ```toml
//! [grid]
//! dim = 1
//! n = 4096
//! length = 65536.0
//!
//! [model]
//! alpha = 1.0
//! reaction = "logistic"   # or "cubic" with `a = ...`
//!
//! [datum]
//! kind = "gaussian"
//! amplitude = 0.5
//! width = 32.0
//!
//! [time]
//! t_end = 20.0
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datum::InitialDatum;
use crate::dynamics::{Scheme, StepperConfig};
use crate::error::{Error, Result};
use crate::reaction::ReactionSpec;
use crate::spectral::Grid;

/// Relative output directories are resolved against this variable when set.
pub const OUTPUT_ROOT_ENV: &str = "FKPP_OUTPUT_ROOT";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    /// Fit window; `None` means `[t_end/3, t_stop]`.
    pub window: Option<(f64, f64)>,
    /// Time of the tail-exponent fit.
    pub t_ref: f64,
    /// Time of the tail constant fed to the ODE prediction; `None` means
    /// `t_ref`. The constant `k_t e^{−κt}` settles later than the exponent.
    pub prediction_t_ref: Option<f64>,
    /// Radial window of the tail fit; `None` means `[L/128, L/16]`.
    pub tail_window: Option<(f64, f64)>,
    /// Inner radius of the invariant annulus; `None` picks one from the run.
    pub beta: Option<f64>,
    pub u_floor: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            window: None,
            t_ref: 1.0,
            prediction_t_ref: None,
            tail_window: None,
            beta: None,
            u_floor: crate::diagnostics::DEFAULT_U_FLOOR,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub dim: usize,
    pub n: usize,
    pub length: f64,
    pub alpha: f64,
    pub reaction: ReactionSpec,
    pub datum: InitialDatum,
    /// Relative amplitude of seeded multiplicative noise on the datum.
    pub perturbation: f64,
    pub seed: u64,
    pub dt: f64,
    pub scheme: Scheme,
    pub dealias: bool,
    pub t_end: f64,
    pub containment: bool,
    pub snapshot_cadence: f64,
    pub diagnostics_cadence: f64,
    pub levels: Vec<f64>,
    pub rays: usize,
    pub output_dir: PathBuf,
    pub analysis: AnalysisConfig,
}

impl ExperimentConfig {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.dim, self.n, self.length)
    }

    pub fn stepper(&self) -> StepperConfig {
        StepperConfig {
            dt: self.dt,
            scheme: self.scheme,
            dealias: self.dealias,
        }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        parse_config(&text)
    }

    /// `output_dir`, placed under `$FKPP_OUTPUT_ROOT` when that is set and
    /// the directory is relative.
    pub fn resolved_output_dir(&self) -> PathBuf {
        resolve_output(&self.output_dir, std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from))
    }
}

pub fn resolve_output(dir: &Path, root: Option<PathBuf>) -> PathBuf {
    match root {
        Some(root) if dir.is_relative() => root.join(dir),
        _ => dir.to_path_buf(),
    }
}

/// Typed access to one table; remembers which keys were consumed.
struct Section<'a> {
    name: &'static str,
    table: Option<&'a toml::Table>,
    used: BTreeSet<&'static str>,
}

impl<'a> Section<'a> {
    fn new(root: &'a toml::Table, name: &'static str, errors: &mut Vec<String>) -> Self {
        let table = match root.get(name) {
            None => None,
            Some(toml::Value::Table(t)) => Some(t),
            Some(_) => {
                errors.push(format!("`{name}` must be a section"));
                None
            }
        };
        Self {
            name,
            table,
            used: BTreeSet::new(),
        }
    }

    fn raw(&mut self, key: &'static str) -> Option<&'a toml::Value> {
        self.used.insert(key);
        self.table.and_then(|t| t.get(key))
    }

    fn path(&self, key: &str) -> String {
        format!("{}.{key}", self.name)
    }

    fn float(&mut self, key: &'static str, errors: &mut Vec<String>) -> Option<f64> {
        match self.raw(key)? {
            toml::Value::Float(v) => Some(*v),
            toml::Value::Integer(v) => Some(*v as f64),
            _ => {
                errors.push(format!("{} must be a number", self.path(key)));
                None
            }
        }
    }

    fn req_float(&mut self, key: &'static str, errors: &mut Vec<String>) -> Option<f64> {
        let present = self.table.is_some_and(|t| t.contains_key(key));
        if !present {
            self.used.insert(key);
            errors.push(format!("missing required key {}", self.path(key)));
            return None;
        }
        self.float(key, errors)
    }

    fn uint(&mut self, key: &'static str, errors: &mut Vec<String>) -> Option<u64> {
        match self.raw(key)? {
            toml::Value::Integer(v) if *v >= 0 => Some(*v as u64),
            _ => {
                errors.push(format!("{} must be a nonnegative integer", self.path(key)));
                None
            }
        }
    }

    fn req_uint(&mut self, key: &'static str, errors: &mut Vec<String>) -> Option<u64> {
        let present = self.table.is_some_and(|t| t.contains_key(key));
        if !present {
            self.used.insert(key);
            errors.push(format!("missing required key {}", self.path(key)));
            return None;
        }
        self.uint(key, errors)
    }

    fn string(&mut self, key: &'static str, errors: &mut Vec<String>) -> Option<String> {
        match self.raw(key)? {
            toml::Value::String(s) => Some(s.clone()),
            _ => {
                errors.push(format!("{} must be a string", self.path(key)));
                None
            }
        }
    }

    fn boolean(&mut self, key: &'static str, errors: &mut Vec<String>) -> Option<bool> {
        match self.raw(key)? {
            toml::Value::Boolean(b) => Some(*b),
            _ => {
                errors.push(format!("{} must be true or false", self.path(key)));
                None
            }
        }
    }

    fn floats(&mut self, key: &'static str, errors: &mut Vec<String>) -> Option<Vec<f64>> {
        let bad = |errors: &mut Vec<String>, p: String| {
            errors.push(format!("{p} must be an array of numbers"));
            None
        };
        match self.raw(key)? {
            toml::Value::Array(items) => {
                let mut out = Vec::with_capacity(items.len());
                for v in items {
                    match v {
                        toml::Value::Float(x) => out.push(*x),
                        toml::Value::Integer(x) => out.push(*x as f64),
                        _ => return bad(errors, self.path(key)),
                    }
                }
                Some(out)
            }
            _ => bad(errors, self.path(key)),
        }
    }

    fn pair(&mut self, key: &'static str, errors: &mut Vec<String>) -> Option<(f64, f64)> {
        let v = self.floats(key, errors)?;
        if v.len() != 2 {
            errors.push(format!("{} must have two entries", self.path(key)));
            return None;
        }
        Some((v[0], v[1]))
    }

    fn finish(self, errors: &mut Vec<String>) {
        if let Some(t) = self.table {
            for key in t.keys() {
                if !self.used.contains(key.as_str()) {
                    errors.push(format!("unknown key {}.{key}", self.name));
                }
            }
        }
    }
}

const SECTIONS: [&str; 6] = ["grid", "model", "datum", "time", "output", "analysis"];

fn parse_datum(s: &mut Section, errors: &mut Vec<String>) -> Option<InitialDatum> {
    let kind = match s.string("kind", errors) {
        Some(k) => k,
        None => {
            if s.table.is_some_and(|t| !t.contains_key("kind")) || s.table.is_none() {
                errors.push("missing required key datum.kind".into());
            }
            return None;
        }
    };
    let amplitude = s.float("amplitude", errors).unwrap_or(0.5);
    let center = match s.floats("center", errors) {
        None => [0.0, 0.0],
        Some(c) if c.len() == 2 => [c[0], c[1]],
        Some(c) if c.len() == 1 => [c[0], 0.0],
        Some(_) => {
            errors.push("datum.center must have one or two entries".into());
            [0.0, 0.0]
        }
    };
    match kind.as_str() {
        "gaussian" => Some(InitialDatum::Gaussian {
            amplitude,
            width: s.req_float("width", errors)?,
            center,
        }),
        "bump" => Some(InitialDatum::Bump {
            amplitude,
            radius: s.req_float("radius", errors)?,
            center,
        }),
        "cross" => Some(InitialDatum::Cross {
            amplitude,
            arm_length: s.req_float("arm_length", errors)?,
            arm_width: s.req_float("arm_width", errors)?,
        }),
        "offset_pair" => Some(InitialDatum::OffsetPair {
            amplitude,
            width: s.req_float("width", errors)?,
            offset: s.req_float("offset", errors)?,
        }),
        other => {
            errors.push(format!(
                "unknown datum kind `{other}` (expected gaussian, bump, cross or offset_pair)"
            ));
            None
        }
    }
}

fn is_power_of_two(n: u64) -> bool {
    n >= 8 && n.is_power_of_two()
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let root: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(vec![format!("syntax: {}", e.message())]))?;
    let mut errors = Vec::new();

    for key in root.keys() {
        if key != "name" && !SECTIONS.contains(&key.as_str()) {
            errors.push(format!("unknown key {key}"));
        }
    }
    let name = match root.get("name") {
        None => "run".to_string(),
        Some(toml::Value::String(s)) => s.clone(),
        Some(_) => {
            errors.push("name must be a string".into());
            "run".to_string()
        }
    };

    let mut g = Section::new(&root, "grid", &mut errors);
    let dim = g.req_uint("dim", &mut errors);
    let n = g.req_uint("n", &mut errors);
    let length = g.req_float("length", &mut errors);
    g.finish(&mut errors);
    if let Some(d) = dim {
        if d != 1 && d != 2 {
            errors.push(format!("grid.dim must be 1 or 2, got {d}"));
        }
    }
    if let Some(n) = n {
        if !is_power_of_two(n) {
            errors.push(format!("grid.n must be a power of two >= 8, got {n}"));
        }
    }
    if let Some(l) = length {
        if !(l > 0.0 && l.is_finite()) {
            errors.push(format!("grid.length must be positive, got {l}"));
        }
    }

    let mut m = Section::new(&root, "model", &mut errors);
    let alpha = m.req_float("alpha", &mut errors);
    let reaction_name = m.string("reaction", &mut errors).unwrap_or_else(|| "logistic".into());
    let rate = m.float("rate", &mut errors).unwrap_or(1.0);
    let cubic_a = m.float("a", &mut errors);
    m.finish(&mut errors);
    if let Some(a) = alpha {
        if !(a > 0.0 && a <= 2.0) {
            errors.push(format!("alpha must lie in (0,2], got {a}"));
        }
    }
    let reaction = match reaction_name.as_str() {
        "logistic" => {
            if cubic_a.is_some() {
                errors.push("model.a only applies to the cubic reaction".into());
            }
            Some(ReactionSpec::Logistic { rate })
        }
        "cubic" => Some(ReactionSpec::Cubic {
            rate,
            a: cubic_a.unwrap_or(0.0),
        }),
        other => {
            errors.push(format!("unknown reaction `{other}` (expected logistic or cubic)"));
            None
        }
    };
    let built = reaction.as_ref().and_then(|r| match r.build() {
        Ok(model) => Some(model),
        Err(e) => {
            errors.push(e.to_string());
            None
        }
    });

    let mut d = Section::new(&root, "datum", &mut errors);
    let datum = parse_datum(&mut d, &mut errors);
    let perturbation = d.float("perturbation", &mut errors).unwrap_or(0.0);
    d.finish(&mut errors);
    if !(0.0..1.0).contains(&perturbation) {
        errors.push(format!("datum.perturbation must lie in [0,1), got {perturbation}"));
    }

    let mut t = Section::new(&root, "time", &mut errors);
    let defaults = StepperConfig::default();
    let dt = t.float("dt", &mut errors).unwrap_or(defaults.dt);
    let scheme = match t.string("scheme", &mut errors) {
        None => defaults.scheme,
        Some(s) => s.parse().unwrap_or_else(|e: Error| {
            errors.push(e.to_string());
            defaults.scheme
        }),
    };
    let dealias = t.boolean("dealias", &mut errors).unwrap_or(false);
    let t_end = t.req_float("t_end", &mut errors);
    let containment = t.boolean("containment", &mut errors).unwrap_or(true);
    t.finish(&mut errors);
    if !(dt > 0.0) {
        errors.push(format!("time.dt must be positive, got {dt}"));
    } else if let Some(model) = &built {
        if let Err(e) = (StepperConfig { dt, scheme, dealias }).validate(model) {
            errors.push(e.to_string());
        }
    }
    if let Some(te) = t_end {
        if !(te > 0.0 && te.is_finite()) {
            errors.push(format!("time.t_end must be positive, got {te}"));
        }
    }

    let mut o = Section::new(&root, "output", &mut errors);
    let output_dir = o.string("dir", &mut errors).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(&name));
    let snapshot_cadence = o.float("snapshot_cadence", &mut errors).unwrap_or(0.5);
    let diagnostics_cadence = o.float("diagnostics_cadence", &mut errors).unwrap_or(0.1);
    let levels = o.floats("levels", &mut errors).unwrap_or_else(|| vec![0.5]);
    let seed = o.uint("seed", &mut errors).unwrap_or(0);
    let rays = o.uint("rays", &mut errors).unwrap_or(crate::levelsets::DEFAULT_RAYS as u64) as usize;
    o.finish(&mut errors);
    for (key, c) in [("snapshot_cadence", snapshot_cadence), ("diagnostics_cadence", diagnostics_cadence)] {
        if !(c > 0.0) {
            errors.push(format!("output.{key} must be positive, got {c}"));
        } else if dt > 0.0 && ((c / dt).round() * dt - c).abs() > 1e-9 * c.max(1.0) {
            errors.push(format!("output.{key} = {c} is not a multiple of dt = {dt}"));
        }
    }
    if levels.is_empty() {
        errors.push("output.levels must not be empty".into());
    }
    for h in &levels {
        if !(*h > 0.0 && *h < 1.0) {
            errors.push(format!("level {h} must lie in (0,1)"));
        }
    }
    if rays < 3 {
        errors.push(format!("output.rays must be at least 3, got {rays}"));
    }

    let mut a = Section::new(&root, "analysis", &mut errors);
    let dflt = AnalysisConfig::default();
    let analysis = AnalysisConfig {
        window: a.pair("window", &mut errors),
        t_ref: a.float("t_ref", &mut errors).unwrap_or(dflt.t_ref),
        prediction_t_ref: a.float("prediction_t_ref", &mut errors),
        tail_window: a.pair("tail_window", &mut errors),
        beta: a.float("beta", &mut errors),
        u_floor: a.float("u_floor", &mut errors).unwrap_or(dflt.u_floor),
    };
    a.finish(&mut errors);
    if let Some((t0, t1)) = analysis.window {
        if !(t0 >= 0.0 && t0 < t1) {
            errors.push(format!("analysis.window must satisfy 0 <= t0 < t1, got [{t0}, {t1}]"));
        }
    }
    if let Some((r0, r1)) = analysis.tail_window {
        if !(r0 > 0.0 && r0 < r1) {
            errors.push(format!("analysis.tail_window must satisfy 0 < r0 < r1, got [{r0}, {r1}]"));
        }
    }
    if !(analysis.t_ref > 0.0) {
        errors.push(format!("analysis.t_ref must be positive, got {}", analysis.t_ref));
    } else if dt > 0.0 && ((analysis.t_ref / dt).round() * dt - analysis.t_ref).abs() > 1e-9 {
        errors.push(format!("analysis.t_ref = {} is not a multiple of dt", analysis.t_ref));
    }
    if let Some(tp) = analysis.prediction_t_ref {
        if !(tp > 0.0) || (dt > 0.0 && ((tp / dt).round() * dt - tp).abs() > 1e-9) {
            errors.push(format!("analysis.prediction_t_ref = {tp} must be a positive multiple of dt"));
        }
    }
    if let Some(b) = analysis.beta {
        if !(b > 0.0) {
            errors.push(format!("analysis.beta must be positive, got {b}"));
        }
    }
    if !(analysis.u_floor > 0.0) {
        errors.push(format!("analysis.u_floor must be positive, got {}", analysis.u_floor));
    }

    if let (Some(dim), Some(n), Some(length), Some(datum)) = (dim, n, length, &datum) {
        if let Ok(grid) = Grid::new(dim as usize, n as usize, length) {
            if let Err(e) = datum.validate(&grid) {
                errors.push(e.to_string());
            }
        }
    }

    if !errors.is_empty() {
        return Err(Error::Config(errors));
    }
    Ok(ExperimentConfig {
        name,
        dim: dim.unwrap() as usize,
        n: n.unwrap() as usize,
        length: length.unwrap(),
        alpha: alpha.unwrap(),
        reaction: reaction.unwrap(),
        datum: datum.unwrap(),
        perturbation,
        seed,
        dt,
        scheme,
        dealias,
        t_end: t_end.unwrap(),
        containment,
        snapshot_cadence,
        diagnostics_cadence,
        levels,
        rays,
        output_dir,
        analysis,
    })
}

//! Run configuration.
//!
//! Files are TOML with sections; every setting is addressed by a flat
//! dotted key (`channel.beta`, `harq.max_rounds`, ...). Keys may be written
//! either inside `[section]` tables or as dotted keys at top level. Unknown
//! keys and out-of-range values are rejected at load time.
//!
//! Powers are given in dB and converted to linear scale when the domain
//! objects are built.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harq::PacketStart;
use crate::numerics::{db_to_linear, SearchGrid, Spacing};
use crate::rate_adapt::FeedbackTiming;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    StaticQuantizer,
    Alg1,
    HarqStatic,
    HarqUniform,
    Alg2,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::StaticQuantizer,
        Scheme::Alg1,
        Scheme::HarqStatic,
        Scheme::HarqUniform,
        Scheme::Alg2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::StaticQuantizer => "static-quantizer",
            Scheme::Alg1 => "alg1",
            Scheme::HarqStatic => "harq-static",
            Scheme::HarqUniform => "harq-uniform",
            Scheme::Alg2 => "alg2",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme `{s}`")))
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Action {
    Evaluate,
    Tune,
}

impl Action {
    pub fn name(self) -> &'static str {
        match self {
            Action::Evaluate => "evaluate",
            Action::Tune => "tune",
        }
    }
}

impl std::str::FromStr for Action {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "evaluate" => Ok(Action::Evaluate),
            "tune" => Ok(Action::Tune),
            other => Err(Error::Config(format!("unknown action `{other}`"))),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A log or linear grid as written in the config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub refinement_rounds: usize,
    pub log: bool,
}

impl GridSpec {
    pub fn to_grid(self) -> Result<SearchGrid> {
        let grid = SearchGrid {
            lower: self.min,
            upper: self.max,
            points: self.points,
            refinement_rounds: self.refinement_rounds,
            spacing: if self.log { Spacing::Log } else { Spacing::Linear },
        };
        grid.validate()?;
        Ok(grid)
    }

    fn from_grid(g: SearchGrid) -> Self {
        GridSpec {
            min: g.lower,
            max: g.upper,
            points: g.points,
            refinement_rounds: g.refinement_rounds,
            log: g.spacing == Spacing::Log,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSection {
    pub scheme: Option<Scheme>,
    pub action: Option<Action>,
    pub seed: Option<u64>,
    pub workers: usize,
    pub replications: usize,
    pub slots: usize,
    pub packets: usize,
    pub out: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkSection {
    pub snr_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizerSection {
    pub levels: usize,
    pub thresholds: Option<Vec<f64>>,
    pub grid: GridSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alg1Section {
    pub initial_rate: f64,
    pub delta: f64,
    pub timing: FeedbackTiming,
    pub rate_floor: f64,
    pub rate_grid: GridSpec,
    pub delta_grid: GridSpec,
    pub search_slots: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarqSection {
    pub rate: f64,
    pub max_rounds: usize,
    pub outage_target: f64,
    pub powers_db: Option<Vec<f64>>,
    pub packet_start: PacketStart,
    pub power_floor: f64,
    pub power_cap: f64,
    pub mc_packets: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alg2Section {
    pub initial_power_db: Option<f64>,
    pub d: Option<Vec<f64>>,
    pub d_up: Option<Vec<f64>>,
    pub d_grid: GridSpec,
    pub d_up_grid: GridSpec,
    pub initial_span_db: f64,
    pub initial_points: usize,
    pub search_packets: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureSection {
    pub fig1_snr_db: Vec<f64>,
    pub fig2_beta: Vec<f64>,
    pub fig2_snr_db: Vec<f64>,
    pub fig3_epsilon: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub run: RunSection,
    pub beta: f64,
    pub link: LinkSection,
    pub quantizer: QuantizerSection,
    pub alg1: Alg1Section,
    pub harq: HarqSection,
    pub alg2: Alg2Section,
    pub figures: FigureSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        let alg1 = crate::rate_adapt::Alg1Tuning::default();
        let alg2 = crate::harq::Alg2Tuning::default();
        let q = crate::rate_adapt::default_quantizer_grid();
        RunConfig {
            run: RunSection {
                scheme: None,
                action: None,
                seed: None,
                workers: 0,
                replications: 20,
                slots: alg1.final_slots,
                packets: alg2.validation_packets,
                out: None,
            },
            beta: 0.9,
            link: LinkSection { snr_db: 10.0 },
            quantizer: QuantizerSection {
                levels: 2,
                thresholds: None,
                grid: GridSpec::from_grid(q),
            },
            alg1: Alg1Section {
                initial_rate: 1.0,
                delta: 0.1,
                timing: FeedbackTiming::SameBlock,
                rate_floor: alg1.rate_floor,
                rate_grid: GridSpec::from_grid(alg1.rate_grid),
                delta_grid: GridSpec::from_grid(alg1.delta_grid),
                search_slots: alg1.search_slots,
            },
            harq: HarqSection {
                rate: 1.0,
                max_rounds: 2,
                outage_target: 1e-2,
                powers_db: None,
                packet_start: PacketStart::Continuous,
                power_floor: crate::harq::DEFAULT_POWER_FLOOR,
                power_cap: crate::harq::DEFAULT_POWER_CAP,
                mc_packets: crate::harq::DEFAULT_MC_PACKETS,
            },
            alg2: Alg2Section {
                initial_power_db: None,
                d: None,
                d_up: None,
                d_grid: GridSpec::from_grid(alg2.d_grid),
                d_up_grid: GridSpec::from_grid(alg2.d_up_grid),
                initial_span_db: 10.0,
                initial_points: alg2.initial_power_span.points,
                search_packets: alg2.search_packets,
            },
            figures: FigureSection {
                fig1_snr_db: (0..=10).map(|k| 2.0 * k as f64).collect(),
                fig2_beta: vec![0.2, 0.5, 0.8, 0.9, 0.95],
                fig2_snr_db: vec![4.0, 8.0, 12.0, 16.0],
                fig3_epsilon: vec![1e-1, 10f64.powf(-1.5), 1e-2, 10f64.powf(-2.5)],
            },
        }
    }
}

/// Setting value in its config-file form.
pub type Value = toml::Value;

/// Every key understood by [`RunConfig`], in canonical order.
pub const KEYS: &[&str] = &[
    "run.scheme",
    "run.action",
    "run.seed",
    "run.workers",
    "run.replications",
    "run.slots",
    "run.packets",
    "run.out",
    "channel.beta",
    "link.snr_db",
    "quantizer.levels",
    "quantizer.thresholds",
    "quantizer.grid_min",
    "quantizer.grid_max",
    "quantizer.grid_points",
    "quantizer.refinement_rounds",
    "quantizer.log_grid",
    "alg1.initial_rate",
    "alg1.delta",
    "alg1.timing",
    "alg1.rate_floor",
    "alg1.rate_min",
    "alg1.rate_max",
    "alg1.rate_points",
    "alg1.delta_min",
    "alg1.delta_max",
    "alg1.delta_points",
    "alg1.refinement_rounds",
    "alg1.search_slots",
    "harq.rate",
    "harq.max_rounds",
    "harq.outage_target",
    "harq.powers_db",
    "harq.packet_start",
    "harq.power_floor",
    "harq.power_cap",
    "harq.mc_packets",
    "alg2.initial_power_db",
    "alg2.d",
    "alg2.d_up",
    "alg2.d_min",
    "alg2.d_max",
    "alg2.d_points",
    "alg2.d_up_min",
    "alg2.d_up_max",
    "alg2.d_up_points",
    "alg2.refinement_rounds",
    "alg2.initial_span_db",
    "alg2.initial_points",
    "alg2.search_packets",
    "fig1.snr_db",
    "fig2.beta",
    "fig2.snr_db",
    "fig3.epsilon",
];

fn bad(key: &str, what: impl fmt::Display) -> Error {
    Error::Config(format!("{key}: {what}"))
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    let x = match v {
        Value::Float(f) => *f,
        Value::Integer(i) => *i as f64,
        _ => return Err(bad(key, "expected a number")),
    };
    if !x.is_finite() {
        return Err(bad(key, "must be finite"));
    }
    Ok(x)
}

fn as_usize(key: &str, v: &Value) -> Result<usize> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        Value::Integer(_) => Err(bad(key, "must be non-negative")),
        _ => Err(bad(key, "expected an integer")),
    }
}

fn as_u64(key: &str, v: &Value) -> Result<u64> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        // seeds above i64::MAX arrive as strings
        Value::String(s) => s.parse().map_err(|_| bad(key, "expected an unsigned integer")),
        _ => Err(bad(key, "expected an unsigned integer")),
    }
}

fn as_str<'a>(key: &str, v: &'a Value) -> Result<&'a str> {
    v.as_str().ok_or_else(|| bad(key, "expected a string"))
}

fn as_bool(key: &str, v: &Value) -> Result<bool> {
    v.as_bool().ok_or_else(|| bad(key, "expected true or false"))
}

fn as_f64_list(key: &str, v: &Value) -> Result<Vec<f64>> {
    let arr = v.as_array().ok_or_else(|| bad(key, "expected an array of numbers"))?;
    arr.iter().map(|x| as_f64(key, x)).collect()
}

fn positive(key: &str, x: f64) -> Result<f64> {
    if x > 0.0 {
        Ok(x)
    } else {
        Err(bad(key, format!("{x} must be positive")))
    }
}

fn at_least_one(key: &str, n: usize) -> Result<usize> {
    if n >= 1 {
        Ok(n)
    } else {
        Err(bad(key, "must be at least 1"))
    }
}

fn open_unit(key: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x < 1.0 {
        Ok(x)
    } else {
        Err(bad(key, format!("{x} must lie in (0, 1)")))
    }
}

fn float(x: f64) -> Value {
    Value::Float(x)
}

fn int(n: usize) -> Value {
    Value::Integer(n as i64)
}

fn floats(xs: &[f64]) -> Value {
    Value::Array(xs.iter().copied().map(Value::Float).collect())
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, Value>) -> Result<()> {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out)?,
            other => {
                if out.insert(key.clone(), other.clone()).is_some() {
                    return Err(bad(&key, "given twice"));
                }
            }
        }
    }
    Ok(())
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let mut flat = BTreeMap::new();
        flatten("", &table, &mut flat)?;
        RunConfig::from_flat(&flat)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::from_toml_str(&text)
    }

    /// Builds from flat dotted keys on top of the defaults.
    pub fn from_flat(flat: &BTreeMap<String, Value>) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (key, value) in flat {
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads back the `inputs` object of a JSON result document.
    pub fn from_json(inputs: &serde_json::Value) -> Result<Self> {
        let obj = inputs
            .as_object()
            .ok_or_else(|| Error::Config("inputs must be an object".into()))?;
        let mut flat = BTreeMap::new();
        for (k, v) in obj {
            if v.is_null() {
                continue;
            }
            let value: Value = serde_json::from_value(v.clone()).map_err(|e| bad(k, e))?;
            flat.insert(k.clone(), value);
        }
        RunConfig::from_flat(&flat)
    }

    /// Set one key. Range checks that involve several keys happen in
    /// [`RunConfig::validate`].
    pub fn set(&mut self, key: &str, v: &Value) -> Result<()> {
        match key {
            "run.scheme" => self.run.scheme = Some(as_str(key, v)?.parse()?),
            "run.action" => self.run.action = Some(as_str(key, v)?.parse()?),
            "run.seed" => self.run.seed = Some(as_u64(key, v)?),
            "run.workers" => self.run.workers = as_usize(key, v)?,
            "run.replications" => self.run.replications = at_least_one(key, as_usize(key, v)?)?,
            "run.slots" => self.run.slots = at_least_one(key, as_usize(key, v)?)?,
            "run.packets" => self.run.packets = at_least_one(key, as_usize(key, v)?)?,
            "run.out" => self.run.out = Some(as_str(key, v)?.to_string()),
            "channel.beta" => {
                let b = as_f64(key, v)?;
                if !(0.0..=1.0).contains(&b) {
                    return Err(bad(key, format!("{b} must lie in [0, 1]")));
                }
                self.beta = b;
            }
            "link.snr_db" => self.link.snr_db = as_f64(key, v)?,
            "quantizer.levels" => self.quantizer.levels = at_least_one(key, as_usize(key, v)?)?,
            "quantizer.thresholds" => self.quantizer.thresholds = Some(as_f64_list(key, v)?),
            "quantizer.grid_min" => self.quantizer.grid.min = as_f64(key, v)?,
            "quantizer.grid_max" => self.quantizer.grid.max = as_f64(key, v)?,
            "quantizer.grid_points" => self.quantizer.grid.points = as_usize(key, v)?,
            "quantizer.refinement_rounds" => self.quantizer.grid.refinement_rounds = as_usize(key, v)?,
            "quantizer.log_grid" => self.quantizer.grid.log = as_bool(key, v)?,
            "alg1.initial_rate" => self.alg1.initial_rate = positive(key, as_f64(key, v)?)?,
            "alg1.delta" => self.alg1.delta = open_unit(key, as_f64(key, v)?)?,
            "alg1.timing" => self.alg1.timing = as_str(key, v)?.parse().map_err(|e| bad(key, e))?,
            "alg1.rate_floor" => self.alg1.rate_floor = positive(key, as_f64(key, v)?)?,
            "alg1.rate_min" => self.alg1.rate_grid.min = as_f64(key, v)?,
            "alg1.rate_max" => self.alg1.rate_grid.max = as_f64(key, v)?,
            "alg1.rate_points" => self.alg1.rate_grid.points = as_usize(key, v)?,
            "alg1.delta_min" => self.alg1.delta_grid.min = as_f64(key, v)?,
            "alg1.delta_max" => self.alg1.delta_grid.max = as_f64(key, v)?,
            "alg1.delta_points" => self.alg1.delta_grid.points = as_usize(key, v)?,
            "alg1.refinement_rounds" => {
                let r = as_usize(key, v)?;
                self.alg1.rate_grid.refinement_rounds = r;
                self.alg1.delta_grid.refinement_rounds = r;
            }
            "alg1.search_slots" => self.alg1.search_slots = at_least_one(key, as_usize(key, v)?)?,
            "harq.rate" => self.harq.rate = positive(key, as_f64(key, v)?)?,
            "harq.max_rounds" => self.harq.max_rounds = at_least_one(key, as_usize(key, v)?)?,
            "harq.outage_target" => self.harq.outage_target = open_unit(key, as_f64(key, v)?)?,
            "harq.powers_db" => self.harq.powers_db = Some(as_f64_list(key, v)?),
            "harq.packet_start" => self.harq.packet_start = as_str(key, v)?.parse().map_err(|e| bad(key, e))?,
            "harq.power_floor" => self.harq.power_floor = positive(key, as_f64(key, v)?)?,
            "harq.power_cap" => self.harq.power_cap = positive(key, as_f64(key, v)?)?,
            "harq.mc_packets" => self.harq.mc_packets = at_least_one(key, as_usize(key, v)?)?,
            "alg2.initial_power_db" => self.alg2.initial_power_db = Some(as_f64(key, v)?),
            "alg2.d" => self.alg2.d = Some(as_f64_list(key, v)?),
            "alg2.d_up" => self.alg2.d_up = Some(as_f64_list(key, v)?),
            "alg2.d_min" => self.alg2.d_grid.min = as_f64(key, v)?,
            "alg2.d_max" => self.alg2.d_grid.max = as_f64(key, v)?,
            "alg2.d_points" => self.alg2.d_grid.points = as_usize(key, v)?,
            "alg2.d_up_min" => self.alg2.d_up_grid.min = as_f64(key, v)?,
            "alg2.d_up_max" => self.alg2.d_up_grid.max = as_f64(key, v)?,
            "alg2.d_up_points" => self.alg2.d_up_grid.points = as_usize(key, v)?,
            "alg2.refinement_rounds" => {
                let r = as_usize(key, v)?;
                self.alg2.d_grid.refinement_rounds = r;
                self.alg2.d_up_grid.refinement_rounds = r;
            }
            "alg2.initial_span_db" => self.alg2.initial_span_db = as_f64(key, v)?,
            "alg2.initial_points" => self.alg2.initial_points = at_least_one(key, as_usize(key, v)?)?,
            "alg2.search_packets" => self.alg2.search_packets = at_least_one(key, as_usize(key, v)?)?,
            "fig1.snr_db" => self.figures.fig1_snr_db = as_f64_list(key, v)?,
            "fig2.beta" => self.figures.fig2_beta = as_f64_list(key, v)?,
            "fig2.snr_db" => self.figures.fig2_snr_db = as_f64_list(key, v)?,
            "fig3.epsilon" => self.figures.fig3_epsilon = as_f64_list(key, v)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Cross-key checks.
    pub fn validate(&self) -> Result<()> {
        self.quantizer.grid.to_grid().map_err(|e| bad("quantizer.grid", e))?;
        self.alg1.rate_grid.to_grid().map_err(|e| bad("alg1.rate_*", e))?;
        self.alg1.delta_grid.to_grid().map_err(|e| bad("alg1.delta_*", e))?;
        self.alg2.d_grid.to_grid().map_err(|e| bad("alg2.d_*", e))?;
        self.alg2.d_up_grid.to_grid().map_err(|e| bad("alg2.d_up_*", e))?;
        if self.alg1.delta_grid.min <= 0.0 || self.alg1.delta_grid.max >= 1.0 {
            return Err(bad("alg1.delta_*", "adaptation coefficients must lie in (0, 1)"));
        }
        if self.alg2.d_grid.min < 0.0 || self.alg2.d_grid.max >= 1.0 {
            return Err(bad("alg2.d_*", "decrease coefficients must lie in [0, 1)"));
        }
        if self.alg2.d_up_grid.min < 0.0 {
            return Err(bad("alg2.d_up_*", "increase coefficients must be non-negative"));
        }
        if self.harq.power_floor >= self.harq.power_cap {
            return Err(bad("harq.power_floor", "must be below harq.power_cap"));
        }
        if self.alg2.initial_span_db < 0.0 {
            return Err(bad("alg2.initial_span_db", "must be non-negative"));
        }
        let m = self.harq.max_rounds;
        if let Some(p) = &self.harq.powers_db {
            if p.len() != m {
                return Err(bad("harq.powers_db", format!("need {m} entries, got {}", p.len())));
            }
        }
        for (key, list) in [("alg2.d", &self.alg2.d), ("alg2.d_up", &self.alg2.d_up)] {
            if let Some(l) = list {
                if l.len() != m {
                    return Err(bad(key, format!("need {m} entries, got {}", l.len())));
                }
            }
        }
        if let Some(t) = &self.quantizer.thresholds {
            if t.len() != self.quantizer.levels {
                return Err(bad("quantizer.thresholds", "length must equal quantizer.levels"));
            }
        }
        for (key, list) in [
            ("fig1.snr_db", &self.figures.fig1_snr_db),
            ("fig2.beta", &self.figures.fig2_beta),
            ("fig2.snr_db", &self.figures.fig2_snr_db),
            ("fig3.epsilon", &self.figures.fig3_epsilon),
        ] {
            if list.is_empty() {
                return Err(bad(key, "axis must not be empty"));
            }
        }
        if let Some(b) = self.figures.fig2_beta.iter().find(|b| !(0.0..=1.0).contains(*b)) {
            return Err(bad("fig2.beta", format!("{b} must lie in [0, 1]")));
        }
        if let Some(e) = self.figures.fig3_epsilon.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return Err(bad("fig3.epsilon", format!("{e} must lie in (0, 1)")));
        }
        Ok(())
    }

    /// Every setting as flat dotted keys (unset optional keys omitted).
    pub fn to_flat(&self) -> BTreeMap<String, Value> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: Value| {
            m.insert(k.to_string(), v);
        };
        if let Some(s) = self.run.scheme {
            put("run.scheme", Value::String(s.name().into()));
        }
        if let Some(a) = self.run.action {
            put("run.action", Value::String(a.name().into()));
        }
        if let Some(seed) = self.run.seed {
            put(
                "run.seed",
                i64::try_from(seed).map_or_else(|_| Value::String(seed.to_string()), Value::Integer),
            );
        }
        put("run.workers", int(self.run.workers));
        put("run.replications", int(self.run.replications));
        put("run.slots", int(self.run.slots));
        put("run.packets", int(self.run.packets));
        if let Some(o) = &self.run.out {
            put("run.out", Value::String(o.clone()));
        }
        put("channel.beta", float(self.beta));
        put("link.snr_db", float(self.link.snr_db));
        put("quantizer.levels", int(self.quantizer.levels));
        if let Some(t) = &self.quantizer.thresholds {
            put("quantizer.thresholds", floats(t));
        }
        put("quantizer.grid_min", float(self.quantizer.grid.min));
        put("quantizer.grid_max", float(self.quantizer.grid.max));
        put("quantizer.grid_points", int(self.quantizer.grid.points));
        put("quantizer.refinement_rounds", int(self.quantizer.grid.refinement_rounds));
        put("quantizer.log_grid", Value::Boolean(self.quantizer.grid.log));
        put("alg1.initial_rate", float(self.alg1.initial_rate));
        put("alg1.delta", float(self.alg1.delta));
        put(
            "alg1.timing",
            Value::String(
                match self.alg1.timing {
                    FeedbackTiming::SameBlock => "same-block",
                    FeedbackTiming::NextBlock => "next-block",
                }
                .into(),
            ),
        );
        put("alg1.rate_floor", float(self.alg1.rate_floor));
        put("alg1.rate_min", float(self.alg1.rate_grid.min));
        put("alg1.rate_max", float(self.alg1.rate_grid.max));
        put("alg1.rate_points", int(self.alg1.rate_grid.points));
        put("alg1.delta_min", float(self.alg1.delta_grid.min));
        put("alg1.delta_max", float(self.alg1.delta_grid.max));
        put("alg1.delta_points", int(self.alg1.delta_grid.points));
        put("alg1.refinement_rounds", int(self.alg1.rate_grid.refinement_rounds));
        put("alg1.search_slots", int(self.alg1.search_slots));
        put("harq.rate", float(self.harq.rate));
        put("harq.max_rounds", int(self.harq.max_rounds));
        put("harq.outage_target", float(self.harq.outage_target));
        if let Some(p) = &self.harq.powers_db {
            put("harq.powers_db", floats(p));
        }
        put(
            "harq.packet_start",
            Value::String(
                match self.harq.packet_start {
                    PacketStart::Continuous => "continuous",
                    PacketStart::Independent => "independent",
                }
                .into(),
            ),
        );
        put("harq.power_floor", float(self.harq.power_floor));
        put("harq.power_cap", float(self.harq.power_cap));
        put("harq.mc_packets", int(self.harq.mc_packets));
        if let Some(p) = self.alg2.initial_power_db {
            put("alg2.initial_power_db", float(p));
        }
        if let Some(d) = &self.alg2.d {
            put("alg2.d", floats(d));
        }
        if let Some(d) = &self.alg2.d_up {
            put("alg2.d_up", floats(d));
        }
        put("alg2.d_min", float(self.alg2.d_grid.min));
        put("alg2.d_max", float(self.alg2.d_grid.max));
        put("alg2.d_points", int(self.alg2.d_grid.points));
        put("alg2.d_up_min", float(self.alg2.d_up_grid.min));
        put("alg2.d_up_max", float(self.alg2.d_up_grid.max));
        put("alg2.d_up_points", int(self.alg2.d_up_grid.points));
        put("alg2.refinement_rounds", int(self.alg2.d_grid.refinement_rounds));
        put("alg2.initial_span_db", float(self.alg2.initial_span_db));
        put("alg2.initial_points", int(self.alg2.initial_points));
        put("alg2.search_packets", int(self.alg2.search_packets));
        put("fig1.snr_db", floats(&self.figures.fig1_snr_db));
        put("fig2.beta", floats(&self.figures.fig2_beta));
        put("fig2.snr_db", floats(&self.figures.fig2_snr_db));
        put("fig3.epsilon", floats(&self.figures.fig3_epsilon));
        m
    }

    /// Flat map as a JSON object (keys sorted).
    pub fn to_json(&self) -> serde_json::Value {
        let obj: serde_json::Map<String, serde_json::Value> = self
            .to_flat()
            .into_iter()
            .map(|(k, v)| (k, serde_json::to_value(v).unwrap_or(serde_json::Value::Null)))
            .collect();
        serde_json::Value::Object(obj)
    }

    /// Config-file text reproducing this configuration.
    pub fn to_toml_string(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.to_flat() {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    /// Link power (linear) from `link.snr_db`.
    pub fn link_power(&self) -> f64 {
        db_to_linear(self.link.snr_db)
    }

    pub fn harq_powers(&self) -> Option<Vec<f64>> {
        self.harq.powers_db.as_ref().map(|p| p.iter().copied().map(db_to_linear).collect())
    }

    pub fn alg1_tuning(&self) -> Result<crate::rate_adapt::Alg1Tuning> {
        Ok(crate::rate_adapt::Alg1Tuning {
            rate_grid: self.alg1.rate_grid.to_grid()?,
            delta_grid: self.alg1.delta_grid.to_grid()?,
            search_slots: self.alg1.search_slots,
            final_slots: self.run.slots,
            timing: self.alg1.timing,
            rate_floor: self.alg1.rate_floor,
        })
    }

    pub fn alg2_tuning(&self) -> Result<crate::harq::Alg2Tuning> {
        let span = db_to_linear(self.alg2.initial_span_db);
        let initial_power_span = if self.alg2.initial_points == 1 || span == 1.0 {
            SearchGrid {
                lower: 1.0,
                upper: 1.0,
                points: 1,
                refinement_rounds: 0,
                spacing: Spacing::Log,
            }
        } else {
            SearchGrid::log(1.0 / span, span, self.alg2.initial_points)?
        };
        Ok(crate::harq::Alg2Tuning {
            d_grid: self.alg2.d_grid.to_grid()?,
            d_up_grid: self.alg2.d_up_grid.to_grid()?,
            initial_power_span,
            search_packets: self.alg2.search_packets,
            validation_packets: self.run.packets,
            power_floor: self.harq.power_floor,
            power_cap: self.harq.power_cap,
            ..crate::harq::Alg2Tuning::default()
        })
    }

    pub fn static_power_search(&self) -> crate::harq::StaticPowerSearch {
        crate::harq::StaticPowerSearch {
            grid: None,
            power_floor: self.harq.power_floor,
            power_cap: self.harq.power_cap,
            mc_packets: self.harq.mc_packets,
        }
    }

    pub fn harq_config(&self) -> Result<crate::harq::HarqConfig> {
        crate::harq::HarqConfig::new(self.harq.rate, self.harq.max_rounds, self.harq.outage_target)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_dotted_keys_are_equivalent() {
        let a = RunConfig::from_toml_str("[channel]\nbeta = 0.5\n[harq]\nmax_rounds = 3\n").unwrap();
        let b = RunConfig::from_toml_str("channel.beta = 0.5\nharq.max_rounds = 3\n").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.beta, 0.5);
        assert_eq!(a.harq.max_rounds, 3);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = RunConfig::from_toml_str("[channel]\nbetta = 0.5\n").unwrap_err();
        assert!(err.to_string().contains("channel.betta"), "{err}");
    }

    #[test]
    fn ranges_checked() {
        assert!(RunConfig::from_toml_str("channel.beta = 1.5").is_err());
        assert!(RunConfig::from_toml_str("harq.outage_target = 0").is_err());
        assert!(RunConfig::from_toml_str("harq.max_rounds = 0").is_err());
        assert!(RunConfig::from_toml_str("alg1.delta = 1.0").is_err());
        assert!(RunConfig::from_toml_str("harq.rate = \"one\"").is_err());
        assert!(RunConfig::from_toml_str("harq.max_rounds = 2\nharq.powers_db = [1.0]").is_err());
        assert!(RunConfig::from_toml_str("run.scheme = \"xyz\"").is_err());
        assert!(RunConfig::from_toml_str("fig3.epsilon = []").is_err());
    }

    #[test]
    fn keys_list_is_complete() {
        let flat = RunConfig::default().to_flat();
        for key in flat.keys() {
            assert!(KEYS.contains(&key.as_str()), "{key}");
        }
        let mut cfg = RunConfig::default();
        for key in KEYS {
            let err = cfg.set(key, &Value::Boolean(true));
            assert!(!matches!(&err, Err(e) if e.to_string().starts_with("unknown key")), "{key}");
        }
    }

    #[test]
    fn json_round_trip() {
        let text = r#"
            [run]
            scheme = "alg2"
            action = "evaluate"
            seed = 18446744073709551615
            [harq]
            powers_db = [10.0, 17.5]
            [alg2]
            d = [0.1, 0.2]
            d_up = [0.3, 0.4]
            initial_power_db = 12
        "#;
        // u64::MAX is not a TOML integer; strings carry large seeds
        assert!(RunConfig::from_toml_str(text).is_err());
        let cfg = RunConfig::from_toml_str(&text.replace("18446744073709551615", "\"18446744073709551615\"")).unwrap();
        assert_eq!(cfg.run.seed, Some(u64::MAX));
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg);
    }

    #[test]
    fn db_conversion() {
        let cfg = RunConfig::from_toml_str("link.snr_db = 10\nharq.powers_db = [0, 20]").unwrap();
        assert!((cfg.link_power() - 10.0).abs() < 1e-12);
        let p = cfg.harq_powers().unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12 && (p[1] - 100.0).abs() < 1e-10);
    }
}

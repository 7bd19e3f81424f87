//! Run configuration.
//!
//! A config file is flat `section.key = value` text (valid TOML; nested
//! tables are flattened to dotted keys). Every key can also be given on the
//! command line as `--section.key value`, which wins over the file.
//! [`RunConfig::entries`] lists every key with its current value.

use std::collections::BTreeMap;
use std::path::Path;

use cram_core::{Connectivity, PipelineConfig, PolarityMode, SizeMetric};
use toml::Value;

use crate::error::{Result, SimError};
use crate::synth::SynthConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub iou_thresholds: Vec<f64>,
    /// Amplitude and substep grids for the robustness sweep. An empty list
    /// means "use the base diffusion setting".
    pub sweep_amplitudes: Vec<f64>,
    pub sweep_substeps: Vec<u32>,
    pub connectivity: Connectivity,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            iou_thresholds: vec![0.3, 0.5, 0.7],
            sweep_amplitudes: Vec::new(),
            sweep_substeps: Vec::new(),
            connectivity: Connectivity::Eight,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    pub width: usize,
    pub height: usize,
    pub max_substeps: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            width: 64,
            height: 64,
            max_substeps: cram_core::diffusion::DEFAULT_PROBE_BUDGET,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventWindow {
    pub t_start: u32,
    pub t_end: u32,
    pub polarity: PolarityMode,
}

impl Default for EventWindow {
    fn default() -> Self {
        EventWindow {
            t_start: 0,
            t_end: u32::MAX,
            polarity: PolarityMode::Any,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub width: usize,
    pub height: usize,
    pub pipeline: PipelineConfig,
    pub blank_max_ones: usize,
    pub eval: EvalConfig,
    pub synth: SynthConfig,
    pub probe: ProbeConfig,
    pub events: EventWindow,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            width: cram_core::frame::DEFAULT_WIDTH,
            height: cram_core::frame::DEFAULT_HEIGHT,
            pipeline: PipelineConfig::default(),
            blank_max_ones: 0,
            eval: EvalConfig::default(),
            synth: SynthConfig::default(),
            probe: ProbeConfig::default(),
            events: EventWindow::default(),
        }
    }
}

fn bad(key: &str, expected: &str, v: &Value) -> SimError {
    SimError::Config(format!("{key}: expected {expected}, got {v}"))
}

fn as_uint(key: &str, v: &Value) -> Result<u64> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        _ => Err(bad(key, "a non-negative integer", v)),
    }
}

fn as_usize(key: &str, v: &Value) -> Result<usize> {
    as_uint(key, v).map(|n| n as usize)
}

fn as_u32(key: &str, v: &Value) -> Result<u32> {
    u32::try_from(as_uint(key, v)?).map_err(|_| bad(key, "a 32-bit integer", v))
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(bad(key, "a number", v)),
    }
}

fn as_bool(key: &str, v: &Value) -> Result<bool> {
    v.as_bool().ok_or_else(|| bad(key, "true or false", v))
}

fn as_str<'a>(key: &str, v: &'a Value) -> Result<&'a str> {
    v.as_str().ok_or_else(|| bad(key, "a string", v))
}

fn as_list<T>(key: &str, v: &Value, item: impl Fn(&str, &Value) -> Result<T>) -> Result<Vec<T>> {
    match v {
        Value::Array(items) => items.iter().map(|x| item(key, x)).collect(),
        _ => Err(bad(key, "an array", v)),
    }
}

fn int(n: impl TryInto<i64>) -> Value {
    Value::Integer(n.try_into().unwrap_or(i64::MAX))
}

fn floats(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| Value::Float(x)).collect())
}

impl RunConfig {
    /// Every configurable key with its current value, in file order.
    pub fn entries(&self) -> Vec<(&'static str, Value)> {
        let p = &self.pipeline;
        let d = &p.diffusion;
        let rp = &p.rp;
        let s = &self.synth;
        vec![
            ("frame.width", int(self.width)),
            ("frame.height", int(self.height)),
            ("frame.ring", int(p.ring)),
            ("diffusion.enabled", Value::Boolean(p.restore)),
            ("diffusion.alpha", Value::Float(d.alpha)),
            ("diffusion.amplitude", Value::Float(d.amplitude)),
            ("diffusion.substeps_per_pulse", int(d.substeps_per_pulse)),
            ("diffusion.pulses", int(d.pulses)),
            ("diffusion.vth", Value::Float(d.vth)),
            (
                "diffusion.redigitize_between_pulses",
                Value::Boolean(d.redigitize_between_pulses),
            ),
            ("projection.dac_code", int(rp.projection.dac_code)),
            ("projection.lambda", Value::Float(rp.projection.lambda)),
            ("rp.enabled", Value::Boolean(p.consolidate)),
            ("rp.size_min", int(rp.size_min)),
            (
                "rp.size_metric",
                Value::String(
                    match rp.size_metric {
                        SizeMetric::Area => "area",
                        SizeMetric::MaxSide => "max_side",
                    }
                    .into(),
                ),
            ),
            ("rp.slot_r", int(rp.slot_r)),
            ("rp.slot_c", int(rp.slot_c)),
            ("rp.max_iters", int(rp.max_iters)),
            (
                "cost.full_axis_projection",
                int(p.costs.full_axis_projection),
            ),
            ("cost.region_projection", int(p.costs.region_projection)),
            ("cost.controller_object", int(p.costs.controller_object)),
            ("cost.controller_fixed", int(p.costs.controller_fixed)),
            ("blank.max_ones", int(self.blank_max_ones)),
            ("eval.iou_thresholds", floats(&self.eval.iou_thresholds)),
            ("eval.sweep_amplitudes", floats(&self.eval.sweep_amplitudes)),
            (
                "eval.sweep_substeps",
                Value::Array(self.eval.sweep_substeps.iter().map(|&n| int(n)).collect()),
            ),
            (
                "eval.connectivity",
                int(match self.eval.connectivity {
                    Connectivity::Four => 4,
                    Connectivity::Eight => 8,
                }),
            ),
            ("synth.frames", int(s.frames)),
            ("synth.seed", int(s.seed)),
            ("synth.objects_min", int(s.objects_min)),
            ("synth.objects_max", int(s.objects_max)),
            ("synth.object_size_min", int(s.object_size_min)),
            ("synth.object_size_max", int(s.object_size_max)),
            ("synth.occupancy", Value::Float(s.occupancy)),
            ("synth.min_gap", int(s.min_gap)),
            ("synth.noise_density", Value::Float(s.noise_density)),
            ("synth.fragment_prob", Value::Float(s.fragment_prob)),
            ("synth.fragment_gap", int(s.fragment_gap)),
            ("probe.width", int(self.probe.width)),
            ("probe.height", int(self.probe.height)),
            ("probe.max_substeps", int(self.probe.max_substeps)),
            ("events.t_start", int(self.events.t_start)),
            ("events.t_end", int(self.events.t_end)),
            (
                "events.polarity",
                Value::String(
                    match self.events.polarity {
                        PolarityMode::Any => "any",
                        PolarityMode::PositiveOnly => "positive_only",
                    }
                    .into(),
                ),
            ),
        ]
    }

    /// The effective configuration as loadable config-file text.
    pub fn to_text(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn set(&mut self, key: &str, v: &Value) -> Result<()> {
        let p = &mut self.pipeline;
        match key {
            "frame.width" => self.width = as_usize(key, v)?,
            "frame.height" => self.height = as_usize(key, v)?,
            "frame.ring" => p.ring = as_usize(key, v)?,
            "diffusion.enabled" => p.restore = as_bool(key, v)?,
            "diffusion.alpha" => p.diffusion.alpha = as_f64(key, v)?,
            "diffusion.amplitude" => p.diffusion.amplitude = as_f64(key, v)?,
            "diffusion.substeps_per_pulse" => p.diffusion.substeps_per_pulse = as_u32(key, v)?,
            "diffusion.pulses" => p.diffusion.pulses = as_u32(key, v)?,
            "diffusion.vth" => p.diffusion.vth = as_f64(key, v)?,
            "diffusion.redigitize_between_pulses" => {
                p.diffusion.redigitize_between_pulses = as_bool(key, v)?
            }
            "projection.dac_code" => {
                p.rp.projection.dac_code =
                    u8::try_from(as_uint(key, v)?).map_err(|_| bad(key, "a 4-bit code", v))?
            }
            "projection.lambda" => p.rp.projection.lambda = as_f64(key, v)?,
            "rp.enabled" => p.consolidate = as_bool(key, v)?,
            "rp.size_min" => p.rp.size_min = as_usize(key, v)?,
            "rp.size_metric" => {
                p.rp.size_metric = match as_str(key, v)? {
                    "area" => SizeMetric::Area,
                    "max_side" => SizeMetric::MaxSide,
                    _ => return Err(bad(key, "\"area\" or \"max_side\"", v)),
                }
            }
            "rp.slot" => {
                let slot = as_usize(key, v)?;
                p.rp.slot_r = slot;
                p.rp.slot_c = slot;
            }
            "rp.slot_r" => p.rp.slot_r = as_usize(key, v)?,
            "rp.slot_c" => p.rp.slot_c = as_usize(key, v)?,
            "rp.max_iters" => p.rp.max_iters = as_u32(key, v)?,
            "cost.full_axis_projection" => p.costs.full_axis_projection = as_uint(key, v)?,
            "cost.region_projection" => p.costs.region_projection = as_uint(key, v)?,
            "cost.controller_object" => p.costs.controller_object = as_uint(key, v)?,
            "cost.controller_fixed" => p.costs.controller_fixed = as_uint(key, v)?,
            "blank.max_ones" => self.blank_max_ones = as_usize(key, v)?,
            "eval.iou_thresholds" => self.eval.iou_thresholds = as_list(key, v, as_f64)?,
            "eval.sweep_amplitudes" => self.eval.sweep_amplitudes = as_list(key, v, as_f64)?,
            "eval.sweep_substeps" => self.eval.sweep_substeps = as_list(key, v, as_u32)?,
            "eval.connectivity" => {
                self.eval.connectivity = match as_uint(key, v)? {
                    4 => Connectivity::Four,
                    8 => Connectivity::Eight,
                    _ => return Err(bad(key, "4 or 8", v)),
                }
            }
            "synth.frames" => self.synth.frames = as_usize(key, v)?,
            "synth.seed" => self.synth.seed = as_uint(key, v)?,
            "synth.objects_min" => self.synth.objects_min = as_usize(key, v)?,
            "synth.objects_max" => self.synth.objects_max = as_usize(key, v)?,
            "synth.object_size_min" => self.synth.object_size_min = as_usize(key, v)?,
            "synth.object_size_max" => self.synth.object_size_max = as_usize(key, v)?,
            "synth.occupancy" => self.synth.occupancy = as_f64(key, v)?,
            "synth.min_gap" => self.synth.min_gap = as_usize(key, v)?,
            "synth.noise_density" => self.synth.noise_density = as_f64(key, v)?,
            "synth.fragment_prob" => self.synth.fragment_prob = as_f64(key, v)?,
            "synth.fragment_gap" => self.synth.fragment_gap = as_usize(key, v)?,
            "probe.width" => self.probe.width = as_usize(key, v)?,
            "probe.height" => self.probe.height = as_usize(key, v)?,
            "probe.max_substeps" => self.probe.max_substeps = as_uint(key, v)?,
            "events.t_start" => self.events.t_start = as_u32(key, v)?,
            "events.t_end" => self.events.t_end = as_u32(key, v)?,
            "events.polarity" => {
                self.events.polarity = match as_str(key, v)? {
                    "any" => PolarityMode::Any,
                    "positive_only" => PolarityMode::PositiveOnly,
                    _ => return Err(bad(key, "\"any\" or \"positive_only\"", v)),
                }
            }
            _ => return Err(SimError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let max = crate::pnm::MAX_DIMENSION;
        for (name, dim) in [
            ("frame", self.width),
            ("frame", self.height),
            ("probe", self.probe.width),
            ("probe", self.probe.height),
        ] {
            if dim == 0 || dim > max {
                return Err(SimError::Config(format!(
                    "{name} dimension {dim} outside 1..={max}"
                )));
            }
        }
        self.pipeline.validate()?;
        cram_core::pipeline::validate_thresholds(&self.eval.iou_thresholds)?;
        if self.eval.iou_thresholds.is_empty() {
            return Err(SimError::Config("eval.iou_thresholds is empty".into()));
        }
        if self.eval.sweep_amplitudes.is_empty() != self.eval.sweep_substeps.is_empty() {
            return Err(SimError::Config(
                "eval.sweep_amplitudes and eval.sweep_substeps must both be set or both be empty"
                    .into(),
            ));
        }
        if self.events.t_start > self.events.t_end {
            return Err(SimError::Config(
                "events.t_start is after events.t_end".into(),
            ));
        }
        self.synth.validate(self.width, self.height)
    }

    /// Defaults, then the file (if any), then command-line overrides.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
            for (k, v) in parse_text(&text)? {
                cfg.set(&k, &v)?;
            }
        }
        for (k, raw) in overrides {
            cfg.set(k, &parse_scalar(raw))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses config text into dotted keys.
pub fn parse_text(text: &str) -> Result<BTreeMap<String, Value>> {
    let table: toml::Table =
        toml::from_str(text).map_err(|e| SimError::Config(format!("config file: {e}")))?;
    let mut out = BTreeMap::new();
    flatten("", &Value::Table(table), &mut out);
    Ok(out)
}

fn flatten(prefix: &str, v: &Value, out: &mut BTreeMap<String, Value>) {
    match v {
        Value::Table(t) => {
            for (k, child) in t {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, child, out);
            }
        }
        other => {
            out.insert(prefix.to_string(), other.clone());
        }
    }
}

/// Reads a command-line value as a config value; anything that is not a
/// valid value literal is taken as a bare string.
pub fn parse_scalar(raw: &str) -> Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

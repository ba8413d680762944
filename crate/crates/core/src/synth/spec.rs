//! Declarative architecture descriptions.
//!
//! An architecture is a list of modules, a list of port-to-port routing
//! edges, and an ordered parameter table. The table order fixes the column
//! layout of every [`ParamMatrix`](super::ParamMatrix) for that architecture.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Steepness of the exponential mapping curve.
const EXP_SKEW: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
pub enum ArchitectureName {
    #[default]
    Voice,
    VoiceFM,
    ParametricSynth,
}

impl ArchitectureName {
    pub const ALL: [ArchitectureName; 3] = [
        ArchitectureName::Voice,
        ArchitectureName::VoiceFM,
        ArchitectureName::ParametricSynth,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ArchitectureName::Voice => "Voice",
            ArchitectureName::VoiceFM => "VoiceFM",
            ArchitectureName::ParametricSynth => "ParametricSynth",
        }
    }
}

impl fmt::Display for ArchitectureName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ArchitectureName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "voice" => Ok(ArchitectureName::Voice),
            "voicefm" => Ok(ArchitectureName::VoiceFM),
            "parametricsynth" | "parametric" => Ok(ArchitectureName::ParametricSynth),
            _ => Err(Error::UnknownArchitecture(s.to_string())),
        }
    }
}

impl<'de> Deserialize<'de> for ArchitectureName {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Normalized-to-natural mapping of a parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Curve {
    Linear,
    /// Geometric: `min * (max / min)^x`. Requires `min > 0`.
    LogFrequency,
    /// `min + (max - min) * (e^(s x) - 1) / (e^s - 1)`, dense near `min`.
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub module: String,
    pub min: f64,
    pub max: f64,
    pub curve: Curve,
}

impl ParamSpec {
    pub fn qualified_name(&self) -> String {
        format!("{}.{}", self.module, self.name)
    }

    pub fn denormalize(&self, x: f64) -> f64 {
        let span = self.max - self.min;
        match self.curve {
            Curve::Linear => self.min + span * x,
            Curve::LogFrequency => self.min * (self.max / self.min).powf(x),
            Curve::Exponential => self.min + span * (EXP_SKEW * x).exp_m1() / EXP_SKEW.exp_m1(),
        }
    }

    pub fn normalize(&self, v: f64) -> f64 {
        let span = self.max - self.min;
        let x = match self.curve {
            Curve::Linear => (v - self.min) / span,
            Curve::LogFrequency => (v / self.min).ln() / (self.max / self.min).ln(),
            Curve::Exponential => ((v - self.min) / span * EXP_SKEW.exp_m1()).ln_1p() / EXP_SKEW,
        };
        x.clamp(0.0, 1.0)
    }

    fn validate(&self) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(Error::InvalidArchitecture(format!(
                "parameter {} needs finite min < max (got {}..{})",
                self.qualified_name(),
                self.min,
                self.max
            )));
        }
        if self.curve == Curve::LogFrequency && self.min <= 0.0 {
            return Err(Error::InvalidArchitecture(format!(
                "log-frequency parameter {} needs min > 0",
                self.qualified_name()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModuleKind {
    Keyboard,
    Adsr,
    Lfo,
    ModulationMixer { inputs: usize, outputs: usize },
    SineVco,
    SquareSawVco,
    FmSineVco,
    FmSquareSawVco,
    Noise,
    AudioMixer { inputs: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleSpec {
    pub id: String,
    #[serde(flatten)]
    pub kind: ModuleKind,
}

/// Signal rate of a port.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rate {
    /// One value per row (e.g. the keyboard note).
    Scalar,
    /// Control-rate buffer.
    Control,
    /// Audio-rate buffer.
    Audio,
}

/// Value range an input port clamps its signal to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Range {
    Unipolar,
    Bipolar,
    Unbounded,
}

impl Range {
    #[inline]
    pub fn clamp(self, v: f32) -> f32 {
        match self {
            Range::Unipolar => v.clamp(0.0, 1.0),
            Range::Bipolar => v.clamp(-1.0, 1.0),
            Range::Unbounded => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PortDef {
    pub name: String,
    pub rate: Rate,
    pub range: Range,
    pub required: bool,
}

impl PortDef {
    fn new(name: impl Into<String>, rate: Rate, range: Range, required: bool) -> Self {
        Self {
            name: name.into(),
            rate,
            range,
            required,
        }
    }
}

const VCO_PARAMS: [&str; 3] = ["tuning", "mod_depth", "initial_phase"];
const FM_PARAMS: [&str; 8] = [
    "tuning",
    "mod_depth",
    "initial_phase",
    "ratio",
    "detune",
    "mod_phase",
    "index",
    "feedback",
];

impl ModuleKind {
    /// Parameter names this module expects, in canonical order.
    pub fn param_names(&self) -> Vec<String> {
        let fixed = |names: &[&str]| names.iter().map(|s| s.to_string()).collect();
        match self {
            ModuleKind::Keyboard => fixed(&["midi_f0", "duration"]),
            ModuleKind::Adsr => fixed(&["attack", "decay", "sustain", "release", "alpha"]),
            ModuleKind::Lfo => fixed(&[
                "frequency",
                "mod_depth",
                "initial_phase",
                "sin",
                "tri",
                "saw",
                "rsaw",
                "sqr",
            ]),
            ModuleKind::ModulationMixer { inputs, outputs } => (0..*inputs)
                .flat_map(|s| (0..*outputs).map(move |d| format!("gain_{s}_{d}")))
                .collect(),
            ModuleKind::SineVco => fixed(&VCO_PARAMS),
            ModuleKind::SquareSawVco => {
                let mut v: Vec<String> = fixed(&VCO_PARAMS);
                v.push("shape".into());
                v
            }
            ModuleKind::FmSineVco => fixed(&FM_PARAMS),
            ModuleKind::FmSquareSawVco => {
                let mut v: Vec<String> = fixed(&FM_PARAMS);
                v.push("shape".into());
                v
            }
            ModuleKind::Noise => Vec::new(),
            ModuleKind::AudioMixer { inputs } => (0..*inputs).map(|i| format!("level_{i}")).collect(),
        }
    }

    pub fn inputs(&self) -> Vec<PortDef> {
        use Range::*;
        use Rate::*;
        let osc = || {
            vec![
                PortDef::new("f0", Scalar, Unbounded, true),
                PortDef::new("pitch", Control, Bipolar, false),
                PortDef::new("amp", Control, Unipolar, false),
                PortDef::new("env", Control, Unipolar, false),
            ]
        };
        match self {
            ModuleKind::Keyboard => vec![],
            ModuleKind::Adsr => vec![PortDef::new("note_s", Scalar, Unbounded, true)],
            ModuleKind::Lfo => vec![
                PortDef::new("rate", Control, Unipolar, false),
                PortDef::new("amp", Control, Unipolar, false),
            ],
            ModuleKind::ModulationMixer { inputs, .. } => (0..*inputs)
                .map(|i| PortDef::new(format!("in{i}"), Control, Unbounded, false))
                .collect(),
            ModuleKind::SineVco | ModuleKind::SquareSawVco => osc(),
            ModuleKind::FmSineVco | ModuleKind::FmSquareSawVco => {
                let mut v = osc();
                v.push(PortDef::new("index", Control, Unipolar, false));
                v.push(PortDef::new("index_env", Control, Unipolar, false));
                v.push(PortDef::new("sweep", Control, Unipolar, false));
                v
            }
            ModuleKind::Noise => vec![
                PortDef::new("amp", Control, Unipolar, false),
                PortDef::new("env", Control, Unipolar, false),
            ],
            ModuleKind::AudioMixer { inputs } => (0..*inputs)
                .map(|i| PortDef::new(format!("in{i}"), Audio, Unbounded, false))
                .collect(),
        }
    }

    pub fn outputs(&self) -> Vec<PortDef> {
        use Range::*;
        use Rate::*;
        match self {
            ModuleKind::Keyboard => vec![
                PortDef::new("midi_f0", Scalar, Unbounded, false),
                PortDef::new("note_s", Scalar, Unbounded, false),
            ],
            ModuleKind::Adsr => vec![PortDef::new("out", Control, Unipolar, false)],
            ModuleKind::Lfo => vec![PortDef::new("out", Control, Bipolar, false)],
            ModuleKind::ModulationMixer { outputs, .. } => (0..*outputs)
                .map(|i| PortDef::new(format!("out{i}"), Control, Unbounded, false))
                .collect(),
            _ => vec![PortDef::new("out", Audio, Bipolar, false)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
}

/// Full description of a synthesizer graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureSpec {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub name: ArchitectureName,
    pub modules: Vec<ModuleSpec>,
    pub routing: Vec<Edge>,
    /// Port whose audio is the synthesizer output, as `module.port`.
    pub output: String,
    pub param_table: Vec<ParamSpec>,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

/// `module.port` split into its parts.
pub(crate) fn split_port(s: &str) -> Result<(&str, &str)> {
    s.split_once('.')
        .filter(|(m, p)| !m.is_empty() && !p.is_empty())
        .ok_or_else(|| Error::InvalidArchitecture(format!("`{s}` is not of the form module.port")))
}

impl ArchitectureSpec {
    /// Number of synthesis parameters (columns of a parameter matrix).
    pub fn num_params(&self) -> usize {
        self.param_table.len()
    }

    pub fn param_index(&self, module: &str, name: &str) -> Option<usize> {
        self.param_table
            .iter()
            .position(|p| p.module == module && p.name == name)
    }

    pub fn module(&self, id: &str) -> Option<&ModuleSpec> {
        self.modules.iter().find(|m| m.id == id)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ArchitectureSpec = serde_json::from_str(text)
            .map_err(|e| Error::InvalidArchitecture(format!("parse error: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Checks parameter coverage, port references, rates, and acyclicity.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArchitecture(msg));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("unsupported schema version {}", self.schema_version));
        }
        let mut ids = HashSet::new();
        for m in &self.modules {
            if m.id.contains('.') || !ids.insert(m.id.as_str()) {
                return bad(format!("module id `{}` is duplicated or contains '.'", m.id));
            }
        }
        // parameter coverage
        let mut seen = HashSet::new();
        for p in &self.param_table {
            p.validate()?;
            let Some(m) = self.module(&p.module) else {
                return bad(format!("parameter {} names unknown module", p.qualified_name()));
            };
            if !m.kind.param_names().contains(&p.name) {
                return bad(format!("module `{}` has no parameter `{}`", m.id, p.name));
            }
            if !seen.insert((p.module.as_str(), p.name.as_str())) {
                return bad(format!("parameter {} listed twice", p.qualified_name()));
            }
        }
        for m in &self.modules {
            for n in m.kind.param_names() {
                if !seen.contains(&(m.id.as_str(), n.as_str())) {
                    return bad(format!("parameter {}.{n} missing from param_table", m.id));
                }
            }
        }
        // routing
        let index: HashMap<&str, usize> = self
            .modules
            .iter()
            .enumerate()
            .map(|(i, m)| (m.id.as_str(), i))
            .collect();
        let lookup = |s: &str, outputs: bool| -> Result<(usize, PortDef)> {
            let (mid, port) = split_port(s)?;
            let &i = index
                .get(mid)
                .ok_or_else(|| Error::InvalidArchitecture(format!("unknown module in `{s}`")))?;
            let kind = &self.modules[i].kind;
            let ports = if outputs { kind.outputs() } else { kind.inputs() };
            ports
                .into_iter()
                .find(|p| p.name == port)
                .map(|p| (i, p))
                .ok_or_else(|| Error::InvalidArchitecture(format!("unknown port `{s}`")))
        };
        let mut fed = HashSet::new();
        let mut adj = vec![Vec::new(); self.modules.len()];
        let mut indeg = vec![0usize; self.modules.len()];
        for e in &self.routing {
            let (src, sp) = lookup(&e.from, true)?;
            let (dst, dp) = lookup(&e.to, false)?;
            if sp.rate != dp.rate {
                return bad(format!("rate mismatch on edge {} -> {}", e.from, e.to));
            }
            if !fed.insert(e.to.as_str()) {
                return bad(format!("input `{}` has more than one source", e.to));
            }
            adj[src].push(dst);
            indeg[dst] += 1;
        }
        for m in &self.modules {
            for p in m.kind.inputs() {
                if p.required && !fed.contains(format!("{}.{}", m.id, p.name).as_str()) {
                    return bad(format!("required input {}.{} is unconnected", m.id, p.name));
                }
            }
        }
        let (_, out) = lookup(&self.output, true)?;
        if out.rate != Rate::Audio {
            return bad(format!("output `{}` is not an audio port", self.output));
        }
        if self.topological_order_inner(&adj, indeg).is_none() {
            return bad("routing graph contains a cycle".into());
        }
        Ok(())
    }

    fn topological_order_inner(&self, adj: &[Vec<usize>], mut indeg: Vec<usize>) -> Option<Vec<usize>> {
        // Kahn's algorithm; ties broken by declaration order.
        let mut ready: Vec<usize> = (0..indeg.len()).rev().filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(indeg.len());
        while let Some(i) = ready.pop() {
            order.push(i);
            let mut next = Vec::new();
            for &j in &adj[i] {
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    next.push(j);
                }
            }
            next.sort_unstable_by(|a, b| b.cmp(a));
            ready.extend(next);
            ready.sort_unstable_by(|a, b| b.cmp(a));
        }
        (order.len() == indeg.len()).then_some(order)
    }

    /// Module indices in evaluation order. Assumes a validated spec.
    pub(crate) fn topological_order(&self) -> Vec<usize> {
        let index: HashMap<&str, usize> = self
            .modules
            .iter()
            .enumerate()
            .map(|(i, m)| (m.id.as_str(), i))
            .collect();
        let mut adj = vec![Vec::new(); self.modules.len()];
        let mut indeg = vec![0usize; self.modules.len()];
        for e in &self.routing {
            let s = index[split_port(&e.from).expect("validated").0];
            let d = index[split_port(&e.to).expect("validated").0];
            adj[s].push(d);
            indeg[d] += 1;
        }
        self.topological_order_inner(&adj, indeg)
            .expect("validated spec is acyclic")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(curve: Curve, min: f64, max: f64) -> ParamSpec {
        ParamSpec {
            name: "x".into(),
            module: "m".into(),
            min,
            max,
            curve,
        }
    }

    #[test]
    fn curves_hit_endpoints() {
        for c in [Curve::Linear, Curve::LogFrequency, Curve::Exponential] {
            let s = p(c, 0.1, 20.0);
            assert!((s.denormalize(0.0) - 0.1).abs() < 1e-12);
            assert!((s.denormalize(1.0) - 20.0).abs() < 1e-9);
        }
    }

    #[test]
    fn exponential_favors_short_values() {
        let s = p(Curve::Exponential, 0.001, 2.0);
        assert!(s.denormalize(0.5) < 0.5 * (0.001 + 2.0));
    }

    #[test]
    fn name_parsing() {
        assert_eq!("voice".parse::<ArchitectureName>().unwrap(), ArchitectureName::Voice);
        assert_eq!("voice-fm".parse::<ArchitectureName>().unwrap(), ArchitectureName::VoiceFM);
        assert_eq!(
            "ParametricSynth".parse::<ArchitectureName>().unwrap(),
            ArchitectureName::ParametricSynth
        );
        assert!(matches!(
            "moog".parse::<ArchitectureName>(),
            Err(Error::UnknownArchitecture(_))
        ));
    }
}

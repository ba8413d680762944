use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use super::envelope::{fill_adsr, AdsrParams};
use super::lfo::{fill_lfo, LfoParams};
use super::modmix::mix_column;
use super::noise::fill_noise;
use super::spec::{split_port, ArchitectureSpec, ModuleKind, Range};
use super::vco::{run_fm, run_vco, FmDrive, FmParams, Wave};
use super::{num_samples, AudioBatch, ParamMatrix, DEFAULT_DURATION_S, DEFAULT_SAMPLE_RATE};
use crate::error::{Error, Result};
use crate::rng::CounterRng;
use crate::tensor::Matrix;

/// Audio samples per control sample.
pub const CONTROL_DECIMATION: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderConfig {
    pub sample_rate_hz: u32,
    pub duration_s: f64,
    pub seed: u64,
    /// Global index of the first row. Noise for a row is keyed by
    /// `(seed, row_offset + i)`, so sub-batches can be rendered separately.
    pub row_offset: u64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            sample_rate_hz: DEFAULT_SAMPLE_RATE,
            duration_s: DEFAULT_DURATION_S,
            seed: 0,
            row_offset: 0,
        }
    }
}

impl RenderConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RenderReport {
    /// Rows (batch-local) in which an oscillator hit the Nyquist clamp.
    pub nyquist_clamped_rows: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
struct Binding {
    node: usize,
    port: usize,
}

#[derive(Debug)]
struct Node {
    kind: ModuleKind,
    /// Parameter-table columns in the kind's canonical order.
    params: Vec<usize>,
    inputs: Vec<Option<Binding>>,
    ranges: Vec<Range>,
}

enum Signal {
    Scalar(f64),
    Control(Vec<f32>),
    Audio(Vec<f32>),
}

/// Compiled synthesizer: an evaluation order over the architecture graph.
#[derive(Debug)]
pub struct Synth {
    arch: Arc<ArchitectureSpec>,
    order: Vec<usize>,
    nodes: Vec<Node>,
    output: Binding,
}

/// Linear interpolation of a control buffer up to audio rate.
#[derive(Clone, Copy)]
struct Upsampled<'a> {
    buf: Option<&'a [f32]>,
    default: f64,
}

impl Upsampled<'_> {
    #[inline]
    fn at(&self, i: usize) -> f64 {
        match self.buf {
            None => self.default,
            Some(b) => {
                let c = i / CONTROL_DECIMATION;
                let frac = (i % CONTROL_DECIMATION) as f32 / CONTROL_DECIMATION as f32;
                f64::from(b[c] + (b[c + 1] - b[c]) * frac)
            }
        }
    }
}

struct RowContext<'a> {
    row: &'a [f64],
    row_id: u64,
    noise: CounterRng,
    n_audio: usize,
    n_ctrl: usize,
    sample_rate: f64,
    duration_s: f64,
}

impl Synth {
    pub fn new(arch: Arc<ArchitectureSpec>) -> Result<Self> {
        arch.validate()?;
        let index: HashMap<&str, usize> = arch
            .modules
            .iter()
            .enumerate()
            .map(|(i, m)| (m.id.as_str(), i))
            .collect();
        let resolve_out = |s: &str| -> Binding {
            let (m, p) = split_port(s).expect("validated");
            let node = index[m];
            let port = arch.modules[node]
                .kind
                .outputs()
                .iter()
                .position(|d| d.name == p)
                .expect("validated");
            Binding { node, port }
        };
        let mut nodes: Vec<Node> = arch
            .modules
            .iter()
            .map(|m| {
                let params = m
                    .kind
                    .param_names()
                    .iter()
                    .map(|n| arch.param_index(&m.id, n).expect("validated"))
                    .collect();
                let defs = m.kind.inputs();
                Node {
                    kind: m.kind.clone(),
                    params,
                    inputs: vec![None; defs.len()],
                    ranges: defs.iter().map(|d| d.range).collect(),
                }
            })
            .collect();
        for e in &arch.routing {
            let src = resolve_out(&e.from);
            let (m, p) = split_port(&e.to).expect("validated");
            let dst = index[m];
            let port = arch.modules[dst]
                .kind
                .inputs()
                .iter()
                .position(|d| d.name == p)
                .expect("validated");
            nodes[dst].inputs[port] = Some(src);
        }
        let output = resolve_out(&arch.output);
        Ok(Self {
            order: arch.topological_order(),
            output,
            nodes,
            arch,
        })
    }

    pub fn arch(&self) -> &Arc<ArchitectureSpec> {
        &self.arch
    }

    pub fn render(&self, params: &ParamMatrix, cfg: &RenderConfig) -> Result<AudioBatch> {
        self.render_with_report(params, cfg).map(|(a, _)| a)
    }

    pub fn render_with_report(
        &self,
        params: &ParamMatrix,
        cfg: &RenderConfig,
    ) -> Result<(AudioBatch, RenderReport)> {
        if !Arc::ptr_eq(params.arch(), &self.arch) && **params.arch() != *self.arch {
            return Err(Error::shape(format!(
                "parameters are for {}, synthesizer is {}",
                params.arch().name,
                self.arch.name
            )));
        }
        if cfg.sample_rate_hz == 0 || !(cfg.duration_s > 0.0 && cfg.duration_s.is_finite()) {
            return Err(Error::invalid("sample rate and duration must be positive"));
        }
        if params.values().as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("parameter matrix contains non-finite values"));
        }
        let n = num_samples(cfg.sample_rate_hz, cfg.duration_s);
        if n == 0 {
            return Err(Error::invalid("duration is shorter than one sample"));
        }
        let k = params.rows();
        let mut out = Matrix::<f32>::zeros(k, n);
        let clamped: Vec<bool> = out
            .as_mut_slice()
            .par_chunks_mut(n)
            .enumerate()
            .map(|(r, buf)| self.render_row(params.row(r), cfg.row_offset + r as u64, cfg, buf))
            .collect();
        let report = RenderReport {
            nyquist_clamped_rows: clamped
                .iter()
                .enumerate()
                .filter_map(|(i, &c)| c.then_some(i))
                .collect(),
        };
        Ok((AudioBatch::from_parts(out, cfg.sample_rate_hz), report))
    }

    /// Renders one parameter row into `out`. Returns whether any oscillator
    /// clamped its frequency.
    pub fn render_row(&self, row: &[f64], row_id: u64, cfg: &RenderConfig, out: &mut [f32]) -> bool {
        let n_audio = out.len();
        let ctx = RowContext {
            row,
            row_id,
            noise: CounterRng::from_key(cfg.seed),
            n_audio,
            n_ctrl: n_audio.div_ceil(CONTROL_DECIMATION) + 1,
            sample_rate: cfg.sample_rate_hz as f64,
            duration_s: n_audio as f64 / cfg.sample_rate_hz as f64,
        };
        let mut signals: Vec<Vec<Signal>> = (0..self.nodes.len()).map(|_| Vec::new()).collect();
        let mut clamped = false;
        for &m in &self.order {
            let (sig, c) = self.eval(m, &ctx, &signals);
            clamped |= c;
            signals[m] = sig;
        }
        match &signals[self.output.node][self.output.port] {
            Signal::Audio(a) => {
                for (o, &x) in out.iter_mut().zip(a) {
                    *o = x.tanh();
                }
            }
            _ => unreachable!("output port is audio-rate"),
        }
        clamped
    }

    #[inline]
    fn nat(&self, node: &Node, ctx: &RowContext, j: usize) -> f64 {
        let col = node.params[j];
        self.arch.param_table[col].denormalize(ctx.row[col])
    }

    fn scalar_in(node: &Node, signals: &[Vec<Signal>], port: usize) -> Option<f64> {
        node.inputs[port].map(|b| match &signals[b.node][b.port] {
            Signal::Scalar(v) => *v,
            _ => unreachable!("validated rate"),
        })
    }

    /// Control input clamped to the port's range.
    fn control_in(node: &Node, signals: &[Vec<Signal>], port: usize) -> Option<Vec<f32>> {
        node.inputs[port].map(|b| match &signals[b.node][b.port] {
            Signal::Control(v) => {
                let range = node.ranges[port];
                v.iter().map(|&x| range.clamp(x)).collect()
            }
            _ => unreachable!("validated rate"),
        })
    }

    fn audio_in<'s>(node: &Node, signals: &'s [Vec<Signal>], port: usize) -> Option<&'s [f32]> {
        node.inputs[port].map(|b| match &signals[b.node][b.port] {
            Signal::Audio(v) => v.as_slice(),
            _ => unreachable!("validated rate"),
        })
    }

    fn eval(&self, m: usize, ctx: &RowContext, signals: &[Vec<Signal>]) -> (Vec<Signal>, bool) {
        let node = &self.nodes[m];
        let p = |j| self.nat(node, ctx, j);
        let ctrl_rate = ctx.sample_rate / CONTROL_DECIMATION as f64;
        match &node.kind {
            ModuleKind::Keyboard => (
                vec![Signal::Scalar(p(0)), Signal::Scalar(p(1).min(ctx.duration_s))],
                false,
            ),
            ModuleKind::Adsr => {
                let note = Self::scalar_in(node, signals, 0).unwrap_or(ctx.duration_s);
                let params = AdsrParams {
                    attack_s: p(0),
                    decay_s: p(1),
                    sustain: p(2),
                    release_s: p(3),
                    alpha: p(4),
                };
                let mut buf = vec![0.0; ctx.n_ctrl];
                fill_adsr(&params, note, ctrl_rate, &mut buf);
                (vec![Signal::Control(buf)], false)
            }
            ModuleKind::Lfo => {
                let params = LfoParams {
                    freq_hz: p(0),
                    mod_depth: p(1),
                    initial_phase: p(2),
                    shape_weights: [p(3), p(4), p(5), p(6), p(7)],
                };
                let rate = Self::control_in(node, signals, 0);
                let amp = Self::control_in(node, signals, 1);
                let mut buf = vec![0.0; ctx.n_ctrl];
                fill_lfo(&params, rate.as_deref(), amp.as_deref(), ctrl_rate, &mut buf);
                (vec![Signal::Control(buf)], false)
            }
            ModuleKind::ModulationMixer { inputs, outputs } => {
                let zeros = vec![0.0f32; ctx.n_ctrl];
                let owned: Vec<Option<Vec<f32>>> =
                    (0..*inputs).map(|s| Self::control_in(node, signals, s)).collect();
                let srcs: Vec<&[f32]> = owned
                    .iter()
                    .map(|o| o.as_deref().unwrap_or(&zeros))
                    .collect();
                let outs = (0..*outputs)
                    .map(|d| {
                        let mut buf = vec![0.0; ctx.n_ctrl];
                        mix_column(&srcs, |s| p(s * outputs + d), &mut buf);
                        Signal::Control(buf)
                    })
                    .collect();
                (outs, false)
            }
            ModuleKind::SineVco
            | ModuleKind::SquareSawVco
            | ModuleKind::FmSineVco
            | ModuleKind::FmSquareSawVco => self.eval_oscillator(node, ctx, signals),
            ModuleKind::Noise => {
                let amp = Self::control_in(node, signals, 0);
                let env = Self::control_in(node, signals, 1);
                let gain = gain_fn(amp.as_deref(), env.as_deref());
                let mut buf = vec![0.0f32; ctx.n_audio];
                fill_noise(&ctx.noise.child(m as u64), ctx.row_id, &mut buf);
                for (i, v) in buf.iter_mut().enumerate() {
                    *v *= gain(i) as f32;
                }
                (vec![Signal::Audio(buf)], false)
            }
            ModuleKind::AudioMixer { inputs } => {
                let mut buf = vec![0.0f32; ctx.n_audio];
                let norm = 1.0 / (*inputs).max(1) as f64;
                for i in 0..*inputs {
                    if let Some(src) = Self::audio_in(node, signals, i) {
                        let g = (p(i) * norm) as f32;
                        for (o, &x) in buf.iter_mut().zip(src) {
                            *o += g * x;
                        }
                    }
                }
                (vec![Signal::Audio(buf)], false)
            }
        }
    }

    fn eval_oscillator(&self, node: &Node, ctx: &RowContext, signals: &[Vec<Signal>]) -> (Vec<Signal>, bool) {
        let p = |j| self.nat(node, ctx, j);
        let f0 = Self::scalar_in(node, signals, 0).unwrap_or(69.0);
        let pitch = Self::control_in(node, signals, 1);
        let amp = Self::control_in(node, signals, 2);
        let env = Self::control_in(node, signals, 3);
        let (tuning, depth, phase) = (p(0), p(1), p(2));
        let pitch_up = Upsampled {
            buf: pitch.as_deref(),
            default: 0.0,
        };
        let midi_at = move |i| f0 + tuning + depth * pitch_up.at(i);
        let gain = gain_fn(amp.as_deref(), env.as_deref());
        let mut buf = vec![0.0f32; ctx.n_audio];
        let sink = |i: usize, v: f64| buf[i] = (v * gain(i)) as f32;
        let clamped = match node.kind {
            ModuleKind::SineVco => run_vco(Wave::Sine, phase, ctx.n_audio, ctx.sample_rate, midi_at, sink),
            ModuleKind::SquareSawVco => run_vco(
                Wave::SquareSaw(p(3)),
                phase,
                ctx.n_audio,
                ctx.sample_rate,
                midi_at,
                sink,
            ),
            _ => {
                let fm = FmParams {
                    carrier: super::VcoParams {
                        tuning,
                        mod_depth: depth,
                        initial_phase: phase,
                    },
                    ratio: p(3),
                    detune: p(4),
                    mod_phase: p(5),
                    index: p(6),
                    feedback: p(7),
                    shape: matches!(node.kind, ModuleKind::FmSquareSawVco).then(|| p(8)),
                };
                let index_mod = Self::control_in(node, signals, 4);
                let index_env = Self::control_in(node, signals, 5);
                let sweep = Self::control_in(node, signals, 6);
                let im = Upsampled {
                    buf: index_mod.as_deref(),
                    default: 0.0,
                };
                let ie = Upsampled {
                    buf: index_env.as_deref(),
                    default: 1.0,
                };
                let sw = Upsampled {
                    buf: sweep.as_deref(),
                    default: 0.0,
                };
                let drive = FmDrive {
                    index_at: move |i| ie.at(i) * (1.0 + im.at(i)),
                    sweep_at: move |i| sw.at(i),
                };
                run_fm(&fm, ctx.n_audio, ctx.sample_rate, midi_at, drive, sink)
            }
        };
        (vec![Signal::Audio(buf)], clamped)
    }
}

fn gain_fn<'a>(amp: Option<&'a [f32]>, env: Option<&'a [f32]>) -> impl Fn(usize) -> f64 + 'a {
    let a = Upsampled { buf: amp, default: 1.0 };
    let e = Upsampled { buf: env, default: 1.0 };
    move |i| a.at(i) * e.at(i)
}

/// Renders `params` with a freshly compiled [`Synth`].
pub fn render(arch: &Arc<ArchitectureSpec>, params: &ParamMatrix, cfg: &RenderConfig) -> Result<AudioBatch> {
    Synth::new(arch.clone())?.render(params, cfg)
}

use super::layers::{
    batch_norm, corr2, dense, haar_weights, invariant_pool, softmax_cross_entropy, Corr2Params, Corr2Shape, NormStats,
};
use super::tape::{Tape, Var};
use crate::error::{bail, Error, Result};
use crate::harmonics::Bandwidth;
use crate::rng::{stream_rng, Stream};
use crate::scalar::Real;
use crate::signals::{S2Signal, S2, So3};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// One layer of a [`ModelSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LayerSpec {
    /// Second-order correlation S² → SO(3).
    Corr2S2 { channels: usize, bandwidth: usize, kernel_bandwidth: usize },
    /// Second-order correlation SO(3) → SO(3).
    Corr2So3 { channels: usize, bandwidth: usize, kernel_bandwidth: usize },
    Relu,
    BatchNorm,
    /// Haar integral per channel.
    InvariantLayer,
    FullyConnected { outputs: usize },
    /// Marks the output as class scores; logits are reported before it.
    Softmax,
}

impl LayerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LayerSpec::Corr2S2 { .. } => "corr2_s2",
            LayerSpec::Corr2So3 { .. } => "corr2_so3",
            LayerSpec::Relu => "relu",
            LayerSpec::BatchNorm => "batch_norm",
            LayerSpec::InvariantLayer => "invariant_layer",
            LayerSpec::FullyConnected { .. } => "fully_connected",
            LayerSpec::Softmax => "softmax",
        }
    }
}

fn default_oversample() -> usize {
    1
}

fn default_true() -> bool {
    true
}

fn default_lambda() -> f64 {
    0.5
}

/// Architecture of an equivariant classifier on S² inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub input_bandwidth: usize,
    pub input_channels: usize,
    pub layers: Vec<LayerSpec>,
    /// Product-grid oversampling of the quadratic terms (1 = pointwise on the output grid).
    #[serde(default = "default_oversample")]
    pub oversample: usize,
    /// `false` freezes `λ = 1` and drops the second-order kernels.
    #[serde(default = "default_true")]
    pub second_order: bool,
    #[serde(default = "default_lambda")]
    pub lambda_init: f64,
}

/// Shape of the activations between layers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stage {
    S2 { bandwidth: Bandwidth, channels: usize },
    So3 { bandwidth: Bandwidth, channels: usize },
    Flat { features: usize },
}

impl Stage {
    fn channels(&self) -> usize {
        match *self {
            Stage::S2 { channels, .. } | Stage::So3 { channels, .. } => channels,
            Stage::Flat { features } => features,
        }
    }

    /// Values per example.
    pub fn len(&self) -> usize {
        match *self {
            Stage::S2 { bandwidth, channels } => bandwidth.s2_len() * channels,
            Stage::So3 { bandwidth, channels } => bandwidth.so3_len() * channels,
            Stage::Flat { features } => features,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn bw(b: usize, what: &str) -> Result<Bandwidth> {
    Bandwidth::new(b).map_err(|_| Error::InvalidSpec(format!("{what} must be positive")))
}

impl ModelSpec {
    /// Check the domain chain and return the activation shape after each layer.
    pub fn validate(&self) -> Result<Vec<Stage>> {
        if self.input_channels == 0 {
            bail!(InvalidSpec, "input_channels must be positive");
        }
        if self.oversample == 0 {
            bail!(InvalidSpec, "oversample must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.lambda_init) {
            bail!(InvalidSpec, "lambda_init must lie in [0, 1]");
        }
        let mut stage = Stage::S2 { bandwidth: bw(self.input_bandwidth, "input_bandwidth")?, channels: self.input_channels };
        let mut stages = Vec::with_capacity(self.layers.len());
        let mut pooled = false;
        let mut seen_fc = false;
        for (i, layer) in self.layers.iter().enumerate() {
            let at = |msg: &str| Error::InvalidSpec(format!("layer {i} ({}): {msg}", layer.name()));
            stage = match (layer, stage) {
                (LayerSpec::Corr2S2 { channels, bandwidth, kernel_bandwidth }, Stage::S2 { bandwidth: b, .. }) => {
                    let bk = bw(*kernel_bandwidth, "kernel_bandwidth")?;
                    if bk > b {
                        return Err(at(&format!("kernel band limit {bk} exceeds input {b}")));
                    }
                    if *channels == 0 {
                        return Err(at("channels must be positive"));
                    }
                    Stage::So3 { bandwidth: bw(*bandwidth, "bandwidth")?, channels: *channels }
                }
                (LayerSpec::Corr2S2 { .. }, _) => return Err(at("only the first spatial layer may consume S²")),
                (LayerSpec::Corr2So3 { channels, bandwidth, kernel_bandwidth }, Stage::So3 { bandwidth: b, .. }) => {
                    let bk = bw(*kernel_bandwidth, "kernel_bandwidth")?;
                    if bk > b {
                        return Err(at(&format!("kernel band limit {bk} exceeds input {b}")));
                    }
                    if *channels == 0 {
                        return Err(at("channels must be positive"));
                    }
                    Stage::So3 { bandwidth: bw(*bandwidth, "bandwidth")?, channels: *channels }
                }
                (LayerSpec::Corr2So3 { .. }, _) => return Err(at("needs an SO(3) input")),
                (LayerSpec::Relu | LayerSpec::BatchNorm, Stage::S2 { .. }) => {
                    return Err(at("the first layer must be an S² correlation"))
                }
                (LayerSpec::Relu | LayerSpec::BatchNorm, s) => s,
                (LayerSpec::InvariantLayer, Stage::So3 { channels, .. }) => {
                    pooled = true;
                    Stage::Flat { features: channels }
                }
                (LayerSpec::InvariantLayer, _) => return Err(at("must follow an SO(3) layer and appear once")),
                (LayerSpec::FullyConnected { outputs }, Stage::Flat { .. }) => {
                    if *outputs == 0 {
                        return Err(at("outputs must be positive"));
                    }
                    seen_fc = true;
                    Stage::Flat { features: *outputs }
                }
                (LayerSpec::FullyConnected { .. }, _) => return Err(at("must come after the invariant layer")),
                (LayerSpec::Softmax, Stage::Flat { .. }) if i + 1 == self.layers.len() => stage,
                (LayerSpec::Softmax, _) => return Err(at("must be the final layer, after the invariant layer")),
            };
            stages.push(stage);
        }
        if !pooled {
            bail!(InvalidSpec, "the model needs exactly one invariant layer");
        }
        if !seen_fc {
            bail!(InvalidSpec, "the model needs a fully connected layer after the invariant layer");
        }
        Ok(stages)
    }

    /// Canonical JSON serialization (field order fixed by the type).
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }

    /// First eight bytes of SHA-256 over [`Self::canonical_json`], little-endian.
    pub fn fingerprint(&self) -> u64 {
        super::checkpoint::fingerprint_of(self)
    }

    pub fn classes(&self) -> Result<usize> {
        Ok(self.validate()?.last().expect("validated spec has layers").channels())
    }
}

/// A named slice of the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamBlock {
    pub layer: usize,
    pub name: &'static str,
    pub offset: usize,
    pub len: usize,
}

/// Per-layer trainable parameter counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamReport {
    pub rows: Vec<ParamRow>,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamRow {
    pub layer: usize,
    pub kind: &'static str,
    pub count: usize,
}

impl std::fmt::Display for ParamReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for r in &self.rows {
            writeln!(f, "{:>3}  {:<16} {:>10}", r.layer, r.kind, r.count)?;
        }
        write!(f, "     {:<16} {:>10}", "total", self.total)
    }
}

/// Whether normalization layers use batch statistics or running averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Everything recorded by one forward pass.
pub struct Recorded<T> {
    pub tape: Tape<T>,
    pub params: Vec<Var>,
    pub logits: Var,
    /// Invariant features right after the invariant layer.
    pub features: Var,
    pub batch_stats: Vec<(usize, NormStats<T>)>,
}

/// Momentum of the running normalization statistics.
pub const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct Model<T> {
    spec: ModelSpec,
    stages: Vec<Stage>,
    blocks: Vec<ParamBlock>,
    params: Vec<T>,
    /// Running mean and variance of each normalization layer, `[mean | var]` per layer.
    buffers: Vec<T>,
    buffer_offsets: Vec<(usize, usize)>,
}

impl<T: Real> Model<T> {
    /// Build and initialize from a seed (`Stream::Init`).
    pub fn new(spec: ModelSpec, seed: u64) -> Result<Self> {
        let stages = spec.validate()?;
        let mut blocks = Vec::new();
        let mut buffer_offsets = Vec::new();
        let mut total = 0;
        let mut buf_total = 0;
        let mut push = |layer: usize, name: &'static str, len: usize, blocks: &mut Vec<ParamBlock>| {
            blocks.push(ParamBlock { layer, name, offset: total, len });
            total += len;
        };
        let mut prev = Stage::S2 { bandwidth: Bandwidth::new(spec.input_bandwidth)?, channels: spec.input_channels };
        for (i, layer) in spec.layers.iter().enumerate() {
            match layer {
                LayerSpec::Corr2S2 { channels, kernel_bandwidth, .. } | LayerSpec::Corr2So3 { channels, kernel_bandwidth, .. } => {
                    let bk = Bandwidth::new(*kernel_bandwidth)?;
                    let per = if matches!(layer, LayerSpec::Corr2S2 { .. }) { bk.s2_coeffs() } else { bk.so3_coeffs() };
                    let n = prev.channels() * channels * per;
                    push(i, "w1", n, &mut blocks);
                    if spec.second_order {
                        push(i, "w2a", n, &mut blocks);
                        push(i, "w2b", n, &mut blocks);
                        push(i, "mix", 1, &mut blocks);
                    }
                    push(i, "bias", *channels, &mut blocks);
                }
                LayerSpec::BatchNorm => {
                    push(i, "gamma", prev.channels(), &mut blocks);
                    push(i, "beta", prev.channels(), &mut blocks);
                    buffer_offsets.push((i, buf_total));
                    buf_total += 2 * prev.channels();
                }
                LayerSpec::FullyConnected { outputs } => {
                    push(i, "weight", prev.channels() * outputs, &mut blocks);
                    push(i, "bias", *outputs, &mut blocks);
                }
                LayerSpec::Relu | LayerSpec::InvariantLayer | LayerSpec::Softmax => {}
            }
            prev = stages[i];
        }
        let mut model = Self {
            spec,
            stages,
            blocks,
            params: vec![T::zero(); total],
            buffers: vec![T::zero(); buf_total],
            buffer_offsets,
        };
        model.initialize(seed);
        Ok(model)
    }

    /// Kernel coefficients ~ N(0, 1/(fan_in·B_k²)); FC He-uniform; `λ = lambda_init`;
    /// biases and β zero; γ one; running variance one.
    pub fn initialize(&mut self, seed: u64) {
        let mut rng = stream_rng(seed, Stream::Init, 0);
        for b in self.blocks.clone() {
            let fan_in = self.input_channels_of(b.layer);
            let layer = &self.spec.layers[b.layer];
            let slot = &mut self.params[b.offset..b.offset + b.len];
            match (layer, b.name) {
                (LayerSpec::Corr2S2 { kernel_bandwidth, .. } | LayerSpec::Corr2So3 { kernel_bandwidth, .. }, "w1" | "w2a" | "w2b") => {
                    let std = 1.0 / ((fan_in * kernel_bandwidth * kernel_bandwidth) as f64).sqrt();
                    slot.iter_mut().for_each(|p| *p = T::lit(rng.sample::<f64, _>(StandardNormal) * std));
                }
                (_, "mix") => slot[0] = T::lit(self.spec.lambda_init),
                (_, "gamma") => slot.iter_mut().for_each(|p| *p = T::one()),
                (LayerSpec::FullyConnected { .. }, "weight") => {
                    let bound = (6.0 / fan_in as f64).sqrt();
                    slot.iter_mut().for_each(|p| *p = T::lit(rng.random_range(-bound..bound)));
                }
                _ => slot.iter_mut().for_each(|p| *p = T::zero()),
            }
        }
        for &(_, off) in &self.buffer_offsets {
            let c = self.buffer_channels(off);
            self.buffers[off..off + c].iter_mut().for_each(|v| *v = T::zero());
            self.buffers[off + c..off + 2 * c].iter_mut().for_each(|v| *v = T::one());
        }
    }

    fn input_channels_of(&self, layer: usize) -> usize {
        if layer == 0 {
            self.spec.input_channels
        } else {
            self.stages[layer - 1].channels()
        }
    }

    fn buffer_channels(&self, offset: usize) -> usize {
        let k = self.buffer_offsets.iter().position(|&(_, o)| o == offset).expect("known offset");
        let layer = self.buffer_offsets[k].0;
        self.input_channels_of(layer)
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn blocks(&self) -> &[ParamBlock] {
        &self.blocks
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn set_params(&mut self, p: &[T]) -> Result<()> {
        if p.len() != self.params.len() {
            bail!(ShapeMismatch, "{} parameters given, model has {}", p.len(), self.params.len());
        }
        self.params.copy_from_slice(p);
        Ok(())
    }

    pub fn buffers(&self) -> &[T] {
        &self.buffers
    }

    pub fn set_buffers(&mut self, b: &[T]) -> Result<()> {
        if b.len() != self.buffers.len() {
            bail!(ShapeMismatch, "{} buffer values given, model has {}", b.len(), self.buffers.len());
        }
        self.buffers.copy_from_slice(b);
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn param_report(&self) -> ParamReport {
        let mut rows: Vec<ParamRow> = Vec::new();
        for b in &self.blocks {
            match rows.last_mut() {
                Some(r) if r.layer == b.layer => r.count += b.len,
                _ => rows.push(ParamRow { layer: b.layer, kind: self.spec.layers[b.layer].name(), count: b.len }),
            }
        }
        ParamReport { rows, total: self.params.len() }
    }

    pub fn classes(&self) -> usize {
        self.stages.last().expect("validated").channels()
    }

    /// Values per input example.
    pub fn input_len(&self) -> usize {
        Bandwidth::new(self.spec.input_bandwidth).expect("validated").s2_len() * self.spec.input_channels
    }

    fn block(&self, layer: usize, name: &str) -> Option<usize> {
        self.blocks.iter().position(|b| b.layer == layer && b.name == name)
    }

    /// Record a forward pass over a flat `[batch][channel][grid]` input.
    pub fn record(&self, x: &[T], mode: Mode) -> Result<Recorded<T>> {
        let per = self.input_len();
        if per == 0 || x.len() % per != 0 || x.is_empty() {
            bail!(ShapeMismatch, "input of {} values is not a whole batch of {per}-value examples", x.len());
        }
        let batch = x.len() / per;
        let mut tape = Tape::new();
        let params: Vec<Var> = self
            .blocks
            .iter()
            .map(|b| tape.leaf(self.params[b.offset..b.offset + b.len].to_vec()))
            .collect();
        let mut h = tape.constant(x.to_vec());
        let mut prev = Stage::S2 { bandwidth: Bandwidth::new(self.spec.input_bandwidth)?, channels: self.spec.input_channels };
        let mut features = None;
        let mut batch_stats = Vec::new();
        for (i, layer) in self.spec.layers.iter().enumerate() {
            let stage = self.stages[i];
            let p = |name: &str| self.block(i, name).map(|k| params[k]);
            h = match layer {
                LayerSpec::Corr2S2 { .. } | LayerSpec::Corr2So3 { .. } => {
                    let (Stage::S2 { bandwidth: bin, channels: cin } | Stage::So3 { bandwidth: bin, channels: cin }) = prev else {
                        unreachable!("validated chain")
                    };
                    let Stage::So3 { bandwidth: bout, channels: cout } = stage else { unreachable!("validated chain") };
                    let (LayerSpec::Corr2S2 { kernel_bandwidth, .. } | LayerSpec::Corr2So3 { kernel_bandwidth, .. }) = layer else {
                        unreachable!()
                    };
                    let shape = Corr2Shape {
                        batch,
                        in_channels: cin,
                        out_channels: cout,
                        in_bandwidth: bin,
                        out_bandwidth: bout,
                        kernel_bandwidth: Bandwidth::new(*kernel_bandwidth)?,
                        oversample: self.spec.oversample,
                    };
                    let cp = Corr2Params {
                        w1: p("w1").expect("w1 block"),
                        second: if self.spec.second_order {
                            Some((p("w2a").expect("block"), p("w2b").expect("block"), p("mix").expect("block")))
                        } else {
                            None
                        },
                        bias: p("bias").expect("bias block"),
                    };
                    if matches!(layer, LayerSpec::Corr2S2 { .. }) {
                        corr2::<T, S2>(&mut tape, h, cp, shape)?
                    } else {
                        corr2::<T, So3>(&mut tape, h, cp, shape)?
                    }
                }
                LayerSpec::Relu => tape.relu(h),
                LayerSpec::BatchNorm => {
                    let q = match prev {
                        Stage::So3 { bandwidth, .. } => Arc::new(haar_weights::<T>(bandwidth)),
                        _ => Arc::new(vec![T::one()]),
                    };
                    let c = prev.channels();
                    let off = self.buffer_offsets.iter().find(|(l, _)| *l == i).expect("buffer").1;
                    let running = (mode == Mode::Eval)
                        .then(|| (&self.buffers[off..off + c], &self.buffers[off + c..off + 2 * c]));
                    let (out, stats) =
                        batch_norm(&mut tape, h, p("gamma").expect("block"), p("beta").expect("block"), c, q, running);
                    if mode == Mode::Train {
                        batch_stats.push((i, stats));
                    }
                    out
                }
                LayerSpec::InvariantLayer => {
                    let Stage::So3 { bandwidth, .. } = prev else { unreachable!("validated chain") };
                    let out = invariant_pool(&mut tape, h, bandwidth);
                    features = Some(out);
                    out
                }
                LayerSpec::FullyConnected { outputs } => {
                    dense(&mut tape, h, p("weight").expect("block"), p("bias").expect("block"), prev.channels(), *outputs)?
                }
                LayerSpec::Softmax => h,
            };
            if tape.value(h).iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { layer: i, name: layer.name().to_string() });
            }
            prev = stage;
        }
        Ok(Recorded { tape, params, logits: h, features: features.expect("validated"), batch_stats })
    }

    /// Logits `[batch][classes]` in evaluation mode.
    pub fn logits(&self, x: &[T]) -> Result<Vec<T>> {
        let r = self.record(x, Mode::Eval)?;
        Ok(r.tape.value(r.logits).to_vec())
    }

    /// Logits for a batch of signals, one row per signal.
    pub fn forward(&self, batch: &[S2Signal<T>]) -> Result<Vec<Vec<T>>> {
        let x = self.stack_inputs(batch)?;
        let k = self.classes();
        Ok(self.logits(&x)?.chunks(k).map(<[T]>::to_vec).collect())
    }

    /// Invariant features after the invariant layer, evaluation mode.
    pub fn features(&self, x: &[T]) -> Result<Vec<T>> {
        let r = self.record(x, Mode::Eval)?;
        Ok(r.tape.value(r.features).to_vec())
    }

    pub fn stack_inputs(&self, batch: &[S2Signal<T>]) -> Result<Vec<T>> {
        let mut x = Vec::with_capacity(batch.len() * self.input_len());
        for s in batch {
            if s.bandwidth().get() != self.spec.input_bandwidth || s.channels() != self.spec.input_channels {
                bail!(
                    ShapeMismatch,
                    "input at {} with {} channels, model expects B={} with {}",
                    s.bandwidth(),
                    s.channels(),
                    self.spec.input_bandwidth,
                    self.spec.input_channels
                );
            }
            x.extend_from_slice(s.samples());
        }
        Ok(x)
    }

    /// Mean cross-entropy and its gradient over all parameters.
    pub fn loss_and_grad(&self, x: &[T], labels: &[usize], mode: Mode) -> Result<(T, Vec<T>, Vec<(usize, NormStats<T>)>)> {
        let (loss, grad, stats, _) = self.loss_grad_logits(x, labels, mode)?;
        Ok((loss, grad, stats))
    }

    /// As [`Self::loss_and_grad`], also returning the logits of the pass.
    pub fn loss_grad_logits(
        &self,
        x: &[T],
        labels: &[usize],
        mode: Mode,
    ) -> Result<(T, Vec<T>, Vec<(usize, NormStats<T>)>, Vec<T>)> {
        let Recorded { mut tape, params, logits, batch_stats, .. } = self.record(x, mode)?;
        let loss = softmax_cross_entropy(&mut tape, logits, labels, self.classes())?;
        tape.backward(loss)?;
        let mut grad = Vec::with_capacity(self.params.len());
        for v in &params {
            grad.extend(tape.grad(*v));
        }
        Ok((tape.value(loss)[0], grad, batch_stats, tape.value(logits).to_vec()))
    }

    /// Exponential moving average of normalization statistics.
    pub fn update_running_stats(&mut self, stats: &[(usize, NormStats<T>)]) {
        let m = T::lit(BN_MOMENTUM);
        for (layer, s) in stats {
            let off = self.buffer_offsets.iter().find(|(l, _)| l == layer).expect("buffer").1;
            let c = s.mean.len();
            for k in 0..c {
                let rm = &mut self.buffers[off + k];
                *rm = (T::one() - m) * *rm + m * s.mean[k];
                let rv = &mut self.buffers[off + c + k];
                *rv = (T::one() - m) * *rv + m * s.var[k];
            }
        }
    }
}

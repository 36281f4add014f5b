use super::conv::{conv_on_tape, receptive_field, row_mean_from, StackLayer};
use super::shell::{discretize_so3, shell_volterra2, ShellSignal, ShellVolterraLayer};
use crate::equivariant_ops::{S2Kernel, S2VolterraLayer};
use crate::error::{bail, Error, Result};
use crate::harmonics::Bandwidth;
use crate::network::{fingerprint_of, softmax, Adam, Checkpoint, Tape, Var};
use crate::rng::{stream_rng, Stream};
use crate::scalar::Real;
use crate::signals::integrate_so3;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// An ordered run of voxels along a tract, with a class label.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence<T> {
    pub voxels: Vec<ShellSignal<T>>,
    pub label: usize,
}

fn default_stride() -> usize {
    2
}

fn default_lambda() -> f64 {
    0.5
}

/// Intra-voxel equivariant feature extractor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeadSpec {
    pub channels: usize,
    /// Band limit of the SO(3) output.
    pub bandwidth: usize,
    pub kernel_bandwidth: usize,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Haar-pool each channel (rotation invariant) instead of discretizing the group.
    #[serde(default)]
    pub pool: bool,
    /// Euler-grid subsampling stride when not pooling.
    #[serde(default = "default_stride")]
    pub stride: usize,
}

/// What the sequence model is trained to output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Objective {
    /// Class logits from the positions not touched by padding.
    Classify { classes: usize },
    /// Predict the next voxel's features from the causal context (squared error).
    Forecast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DilatedSpec {
    pub bandwidth: usize,
    pub shells: usize,
    pub head: HeadSpec,
    pub stack: Vec<StackLayer>,
    pub objective: Objective,
}

impl DilatedSpec {
    pub fn validate(&self) -> Result<()> {
        let b = Bandwidth::new(self.bandwidth).map_err(|_| Error::InvalidSpec("bandwidth must be positive".into()))?;
        if self.shells == 0 {
            bail!(InvalidSpec, "shells must be positive");
        }
        let h = &self.head;
        if h.channels == 0 || h.bandwidth == 0 || h.kernel_bandwidth == 0 {
            bail!(InvalidSpec, "head channels and band limits must be positive");
        }
        if h.kernel_bandwidth > b.get() {
            bail!(InvalidSpec, "head kernel band limit {} exceeds input {}", h.kernel_bandwidth, b);
        }
        if !(0.0..=1.0).contains(&h.lambda) {
            bail!(InvalidSpec, "head lambda must lie in [0, 1]");
        }
        if !h.pool && (h.stride == 0 || (2 * h.bandwidth) % h.stride != 0) {
            bail!(InvalidSpec, "stride {} does not divide the grid size {}", h.stride, 2 * h.bandwidth);
        }
        for (i, l) in self.stack.iter().enumerate() {
            if l.kernel == 0 || l.dilation == 0 || l.channels == 0 {
                bail!(InvalidSpec, "stack layer {i}: kernel, dilation and channels must be at least 1");
            }
        }
        if let Objective::Classify { classes: 0 } = self.objective {
            bail!(InvalidSpec, "classes must be positive");
        }
        Ok(())
    }

    /// Length of the per-voxel feature vector.
    pub fn feature_len(&self) -> usize {
        let h = &self.head;
        if h.pool {
            h.channels
        } else {
            let m = 2 * h.bandwidth / h.stride;
            h.channels * m * m * m
        }
    }

    pub fn outputs(&self) -> usize {
        match self.objective {
            Objective::Classify { classes } => classes,
            Objective::Forecast => self.feature_len(),
        }
    }

    pub fn receptive_field(&self) -> usize {
        receptive_field(&self.stack)
    }

    pub fn fingerprint(&self) -> u64 {
        fingerprint_of(self)
    }

    /// Trainable parameters of the inter-voxel stack and readout.
    pub fn param_count(&self) -> usize {
        let mut c = self.feature_len();
        let mut n = 0;
        for l in &self.stack {
            n += l.kernel * l.channels * c + l.channels;
            c = l.channels;
        }
        n + c * self.outputs() + self.outputs()
    }
}

/// Dilated VolterraNet: a frozen equivariant shell head applied to each voxel,
/// then a trainable causal dilated stack and a linear readout.
#[derive(Debug, Clone, PartialEq)]
pub struct DilatedModel<T> {
    spec: DilatedSpec,
    seed: u64,
    head: ShellVolterraLayer<T>,
    params: Vec<T>,
    /// Per-feature `[mean | std]` used to standardize head outputs.
    norm: Vec<T>,
}

impl<T: Real> DilatedModel<T> {
    /// Head kernels from `(seed, Kernel, ·)`, trainable weights from `(seed, Init, ·)`.
    pub fn new(spec: DilatedSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let head = Self::build_head(&spec, seed)?;
        let mut rng = stream_rng(seed, Stream::Init, 2);
        let mut params = Vec::with_capacity(spec.param_count());
        let mut c = spec.feature_len();
        for l in &spec.stack {
            let bound = (6.0 / (l.kernel * c) as f64).sqrt();
            params.extend((0..l.kernel * l.channels * c).map(|_| T::lit(rng.random_range(-bound..bound))));
            params.extend((0..l.channels).map(|_| T::zero()));
            c = l.channels;
        }
        let bound = (6.0 / c as f64).sqrt();
        params.extend((0..c * spec.outputs()).map(|_| T::lit(rng.random_range(-bound..bound))));
        params.extend((0..spec.outputs()).map(|_| T::zero()));
        let f = spec.feature_len();
        let mut norm = vec![T::zero(); f];
        norm.extend(vec![T::one(); f]);
        Ok(Self { spec, seed, head, params, norm })
    }

    fn build_head(spec: &DilatedSpec, seed: u64) -> Result<ShellVolterraLayer<T>> {
        let bk = Bandwidth::new(spec.head.kernel_bandwidth)?;
        let std = T::lit(1.0 / spec.head.kernel_bandwidth as f64);
        let layers = (0..spec.shells)
            .map(|r| {
                let mut rng = stream_rng(seed, Stream::Kernel, r as u64);
                let c = spec.head.channels;
                let w1 = S2Kernel::random(1, c, bk, std, &mut rng);
                let wa = S2Kernel::random(1, c, bk, std, &mut rng);
                let wb = S2Kernel::random(1, c, bk, std, &mut rng);
                Ok(S2VolterraLayer::new(w1, wa, wb, T::lit(spec.head.lambda))?.with_oversample(2))
            })
            .collect::<Result<Vec<_>>>()?;
        ShellVolterraLayer::new(layers, vec![T::one(); spec.shells])
    }

    pub fn spec(&self) -> &DilatedSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn head(&self) -> &ShellVolterraLayer<T> {
        &self.head
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn normalizer(&self) -> &[T] {
        &self.norm
    }

    /// Offset of the readout bias block in [`Self::params`].
    pub fn readout_bias_offset(&self) -> usize {
        self.params.len() - self.spec.outputs()
    }

    /// Raw head features of one voxel: the shell Volterra output either Haar-pooled
    /// (exactly rotation invariant) or passed through ReLU and discretized.
    pub fn voxel_features(&self, v: &ShellSignal<T>) -> Result<Vec<T>> {
        if v.bandwidth().get() != self.spec.bandwidth || v.n_shells() != self.spec.shells {
            bail!(
                ShapeMismatch,
                "voxel at {} with {} shells, model expects B={} with {}",
                v.bandwidth(),
                v.n_shells(),
                self.spec.bandwidth,
                self.spec.shells
            );
        }
        let y = shell_volterra2(v, &self.head, Bandwidth::new(self.spec.head.bandwidth)?)?;
        if self.spec.head.pool {
            Ok(integrate_so3(&y))
        } else {
            discretize_so3(&y.map(|x| x.max(T::zero())), self.spec.head.stride)
        }
    }

    /// Raw head features of a whole sequence, `[len][feature_len]`.
    pub fn sequence_features(&self, seq: &Sequence<T>) -> Result<Vec<T>> {
        if seq.voxels.is_empty() {
            bail!(InvalidArgument, "sequence must hold at least one voxel");
        }
        let mut out = Vec::with_capacity(seq.voxels.len() * self.spec.feature_len());
        for v in &seq.voxels {
            out.extend(self.voxel_features(v)?);
        }
        Ok(out)
    }

    /// Fit the standardization to raw features (label independent).
    pub fn fit_normalizer(&mut self, feats: &[Vec<T>]) {
        let f = self.spec.feature_len();
        let mut n = 0usize;
        let mut mean = vec![0.0f64; f];
        let mut sq = vec![0.0f64; f];
        for s in feats {
            for row in s.chunks(f) {
                n += 1;
                for (k, v) in row.iter().enumerate() {
                    mean[k] += v.as_f64();
                    sq[k] += v.as_f64() * v.as_f64();
                }
            }
        }
        if n == 0 {
            return;
        }
        for k in 0..f {
            let m = mean[k] / n as f64;
            let var = (sq[k] / n as f64 - m * m).max(0.0);
            self.norm[k] = T::lit(m);
            self.norm[f + k] = T::lit(var.sqrt().max(1e-8));
        }
    }

    pub fn normalize(&self, raw: &[T]) -> Vec<T> {
        let f = self.spec.feature_len();
        raw.iter().enumerate().map(|(i, v)| (*v - self.norm[i % f]) / self.norm[f + i % f]).collect()
    }

    /// Records the stack and readout on normalized features; returns per-position outputs `[len][outputs]`.
    fn record(&self, tape: &mut Tape<T>, z: Var, vars: &[Var]) -> Result<Var> {
        let mut h = z;
        let mut c = self.spec.feature_len();
        for (i, l) in self.spec.stack.iter().enumerate() {
            h = conv_on_tape(tape, h, vars[2 * i], vars[2 * i + 1], c, l.channels, l.kernel, l.dilation);
            h = tape.relu(h);
            c = l.channels;
        }
        let k = vars.len();
        crate::network::dense_on_tape(tape, h, vars[k - 2], vars[k - 1], c, self.spec.outputs())
    }

    fn leaves(&self, tape: &mut Tape<T>) -> Vec<Var> {
        let mut c = self.spec.feature_len();
        let mut off = 0;
        let mut vars = Vec::new();
        let mut take = |n: usize, tape: &mut Tape<T>| {
            let v = tape.leaf(self.params[off..off + n].to_vec());
            off += n;
            v
        };
        for l in &self.spec.stack {
            vars.push(take(l.kernel * l.channels * c, tape));
            vars.push(take(l.channels, tape));
            c = l.channels;
        }
        vars.push(take(c * self.spec.outputs(), tape));
        vars.push(take(self.spec.outputs(), tape));
        vars
    }

    /// First position whose output sees no padding (the last one if the sequence is short).
    fn first_valid(&self, len: usize) -> usize {
        (self.spec.receptive_field() - 1).min(len - 1)
    }

    /// Model outputs on normalized features: class logits, or flattened per-position forecasts.
    pub fn outputs_from_features(&self, z: &[T]) -> Result<Vec<T>> {
        let f = self.spec.feature_len();
        if z.is_empty() || z.len() % f != 0 {
            bail!(ShapeMismatch, "feature buffer of {} values is not a sequence of {f}-vectors", z.len());
        }
        let mut tape = Tape::new();
        let vars = self.leaves(&mut tape);
        let zv = tape.constant(z.to_vec());
        let y = self.record(&mut tape, zv, &vars)?;
        Ok(match self.spec.objective {
            Objective::Classify { classes } => {
                let m = row_mean_from(&mut tape, y, classes, self.first_valid(z.len() / f));
                tape.value(m).to_vec()
            }
            Objective::Forecast => tape.value(y).to_vec(),
        })
    }

    /// Outputs for a raw sequence.
    pub fn forward(&self, seq: &Sequence<T>) -> Result<Vec<T>> {
        let z = self.normalize(&self.sequence_features(seq)?);
        self.outputs_from_features(&z)
    }

    /// Class probabilities for a sequence (classification objective).
    pub fn predict_proba(&self, seq: &Sequence<T>) -> Result<Vec<T>> {
        Ok(softmax(&self.forward(seq)?))
    }

    /// Mean loss over sequences of normalized features, with its gradient.
    pub fn loss_and_grad(&self, feats: &[Vec<T>], labels: &[usize]) -> Result<(T, Vec<T>)> {
        if feats.is_empty() {
            bail!(InvalidArgument, "no sequences to train on");
        }
        let f = self.spec.feature_len();
        let mut tape = Tape::new();
        let vars = self.leaves(&mut tape);
        let mut total: Option<Var> = None;
        for (n, z) in feats.iter().enumerate() {
            let len = z.len() / f;
            let loss = match self.spec.objective {
                Objective::Classify { classes } => {
                    let zv = tape.constant(z.clone());
                    let y = self.record(&mut tape, zv, &vars)?;
                    let m = row_mean_from(&mut tape, y, classes, self.first_valid(len));
                    let y = labels.get(n).copied().ok_or_else(|| Error::ShapeMismatch("missing label".into()))?;
                    crate::network::cross_entropy_on_tape(&mut tape, m, &[y], classes)?
                }
                Objective::Forecast => {
                    if len < 2 {
                        continue;
                    }
                    let zv = tape.constant(z[..(len - 1) * f].to_vec());
                    let y = self.record(&mut tape, zv, &vars)?;
                    let target = tape.constant(z[f..].to_vec());
                    let e = tape.sub(y, target);
                    let sq = tape.square(e);
                    tape.mean(sq)
                }
            };
            total = Some(match total {
                None => loss,
                Some(t) => tape.add(t, loss),
            });
        }
        let Some(total) = total else { bail!(InvalidArgument, "forecasting needs sequences of length at least 2") };
        let loss = tape.scale(total, T::one() / T::from_usize_lossy(feats.len()));
        tape.backward(loss)?;
        let grad = vars.iter().flat_map(|v| tape.grad(*v)).collect();
        Ok((tape.value(loss)[0], grad))
    }

    /// Full-batch Adam for `epochs` steps; returns the loss before each step.
    pub fn fit(&mut self, feats: &[Vec<T>], labels: &[usize], epochs: usize, lr: f64) -> Result<Vec<f64>> {
        let mut adam = Adam::new(self.params.len(), lr);
        let mut hist = Vec::with_capacity(epochs);
        for _ in 0..epochs {
            let (loss, g) = self.loss_and_grad(feats, labels)?;
            adam.step(&mut self.params, &g)?;
            hist.push(loss.as_f64());
        }
        Ok(hist)
    }

    /// Checkpoint holding the trainable parameters and the normalizer; the head is rebuilt from the seed.
    pub fn to_checkpoint(&self, epoch: u64) -> Checkpoint {
        Checkpoint::raw(
            serde_json::to_string(&self.spec).expect("spec serializes"),
            self.spec.fingerprint(),
            self.params.iter().map(|v| v.as_f64()).collect(),
            self.norm.iter().map(|v| v.as_f64()).collect(),
            self.seed,
            epoch,
        )
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let spec: DilatedSpec =
            serde_json::from_str(&ck.spec_json).map_err(|e| Error::Corrupt(format!("embedded spec: {e}")))?;
        let expected = spec.fingerprint();
        if expected != ck.fingerprint {
            return Err(Error::Fingerprint { expected, found: ck.fingerprint });
        }
        let mut m = Self::new(spec, ck.seed)?;
        if ck.params.len() != m.params.len() || ck.buffers.len() != m.norm.len() {
            bail!(Corrupt, "checkpoint sizes do not match its spec");
        }
        m.params = ck.params.iter().map(|&v| T::lit(v)).collect();
        m.norm = ck.buffers.iter().map(|&v| T::lit(v)).collect();
        Ok(m)
    }
}

/// Root-mean-square difference of two models' outputs over probe feature sequences.
/// A stand-in for a model-space distance; zero iff outputs agree on the probe.
pub fn model_distance_on_features<T: Real>(a: &DilatedModel<T>, b: &DilatedModel<T>, probe: &[Vec<T>]) -> Result<f64> {
    if a.spec != b.spec {
        return Err(Error::Fingerprint { expected: a.spec.fingerprint(), found: b.spec.fingerprint() });
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for z in probe {
        let (ya, yb) = (a.outputs_from_features(z)?, b.outputs_from_features(z)?);
        sum += ya.iter().zip(&yb).map(|(p, q)| (p.as_f64() - q.as_f64()).powi(2)).sum::<f64>();
        n += ya.len();
    }
    if n == 0 {
        bail!(InvalidArgument, "empty probe set");
    }
    Ok((sum / n as f64).sqrt())
}

/// [`model_distance_on_features`] on raw sequences. Each model uses its own
/// head and normalizer, so the models must share a spec.
pub fn model_distance<T: Real>(a: &DilatedModel<T>, b: &DilatedModel<T>, probe: &[Sequence<T>]) -> Result<f64> {
    if a.spec != b.spec {
        return Err(Error::Fingerprint { expected: a.spec.fingerprint(), found: b.spec.fingerprint() });
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for s in probe {
        let (ya, yb) = (a.forward(s)?, b.forward(s)?);
        sum += ya.iter().zip(&yb).map(|(p, q)| (p.as_f64() - q.as_f64()).powi(2)).sum::<f64>();
        n += ya.len();
    }
    if n == 0 {
        bail!(InvalidArgument, "empty probe set");
    }
    Ok((sum / n as f64).sqrt())
}

/// [`model_distance`] between two checkpoints.
pub fn model_distance_checkpoints(a: &Checkpoint, b: &Checkpoint, probe: &[Sequence<f64>]) -> Result<f64> {
    if a.fingerprint != b.fingerprint {
        return Err(Error::Fingerprint { expected: a.fingerprint, found: b.fingerprint });
    }
    model_distance(&DilatedModel::from_checkpoint(a)?, &DilatedModel::from_checkpoint(b)?, probe)
}

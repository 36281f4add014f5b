//! TOML run configuration shared by `train`, `permtest` and `info`.

use homcorr::dilated::{DilatedSpec, HeadSpec, Objective, StackLayer};
use homcorr::network::{LayerSpec, ModelSpec};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Input domain of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    /// Single-shell spherical signals; classifier built from correlation layers.
    S2,
    /// Signals on the rotation group. Accepted by the parser, rejected by validation.
    So3,
    /// Multi-shell voxel sequences; dilated sequence model.
    S2xr,
}

fn d_lambda() -> f64 {
    0.5
}
fn d_true() -> bool {
    true
}
fn d_one() -> usize {
    1
}
fn d_lr() -> f64 {
    0.02
}
fn d_batch() -> usize {
    20
}
fn d_epochs() -> usize {
    30
}
fn d_stride() -> usize {
    2
}
fn d_nperm() -> usize {
    99
}
fn d_perm_epochs() -> usize {
    40
}

/// Spherical classifier: correlation layers with ReLU, then invariant pooling,
/// optional batch normalization and a dense head sized from the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// Output band limit of each correlation layer.
    pub bandwidths: Vec<usize>,
    pub kernel_bandwidths: Vec<usize>,
    pub channels: Vec<usize>,
    #[serde(default = "d_lambda")]
    pub lambda_init: f64,
    #[serde(default = "d_true")]
    pub second_order: bool,
    #[serde(default = "d_one")]
    pub oversample: usize,
    #[serde(default = "d_true")]
    pub batch_norm: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    #[serde(default = "d_lr")]
    pub lr: f64,
    #[serde(default = "d_batch")]
    pub batch_size: usize,
    #[serde(default = "d_epochs")]
    pub epochs: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self { lr: d_lr(), batch_size: d_batch(), epochs: d_epochs() }
    }
}

/// Sequence model: frozen equivariant head per voxel, then a causal dilated stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DilatedSection {
    pub head_channels: usize,
    pub head_bandwidth: usize,
    pub head_kernel_bandwidth: usize,
    #[serde(default = "d_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub pool: bool,
    #[serde(default = "d_stride")]
    pub stride: usize,
    pub stack: Vec<StackLayer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PermSection {
    #[serde(default = "d_nperm")]
    pub n_perm: usize,
    /// Full-batch optimizer steps per class-conditional model.
    #[serde(default = "d_perm_epochs")]
    pub epochs: usize,
    #[serde(default = "d_lr")]
    pub lr: f64,
}

impl Default for PermSection {
    fn default() -> Self {
        Self { n_perm: d_nperm(), epochs: d_perm_epochs(), lr: d_lr() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub space: Space,
    #[serde(default)]
    pub seed: u64,
    /// Dataset file; relative paths resolve against the config file's directory.
    pub dataset: PathBuf,
    pub checkpoint: PathBuf,
    pub model: Option<ModelSection>,
    pub dilated: Option<DilatedSection>,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub permtest: PermSection,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, crate::CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| crate::CliError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text).map_err(|e| crate::CliError::Usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.dataset, &mut cfg.checkpoint] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Structural checks that need no data.
    pub fn validate(&self) -> Result<(), String> {
        if !(self.train.lr.is_finite() && self.train.lr > 0.0) || !(self.permtest.lr.is_finite() && self.permtest.lr > 0.0) {
            return Err("learning rates must be positive".into());
        }
        if self.train.batch_size == 0 {
            return Err("train.batch_size must be positive".into());
        }
        match self.space {
            Space::So3 => Err("space = \"so3\" is not supported: datasets hold spherical signals; \
                               rotation-group layers appear after the first correlation"
                .into()),
            Space::S2 => {
                let m = self.model.as_ref().ok_or("space = \"s2\" needs a [model] section")?;
                if self.dilated.is_some() {
                    return Err("[dilated] belongs to space = \"s2xr\"".into());
                }
                if m.bandwidths.is_empty()
                    || m.bandwidths.len() != m.channels.len()
                    || m.bandwidths.len() != m.kernel_bandwidths.len()
                {
                    return Err("model.bandwidths, kernel_bandwidths and channels need one equal, non-zero length".into());
                }
                let first = *m.bandwidths.iter().chain(&m.kernel_bandwidths).max().unwrap_or(&1);
                self.model_spec(first, 2).validate().map(|_| ()).map_err(|e| e.to_string())
            }
            Space::S2xr => {
                self.dilated.as_ref().ok_or("space = \"s2xr\" needs a [dilated] section")?;
                if self.model.is_some() {
                    return Err("[model] belongs to space = \"s2\"".into());
                }
                let d = self.dilated.as_ref().expect("checked");
                let b = d.head_bandwidth.max(d.head_kernel_bandwidth).max(1);
                self.dilated_spec(b, 1, Objective::Classify { classes: 2 }).validate().map_err(|e| e.to_string())
            }
        }
    }

    /// Spherical classifier for inputs at `input_bandwidth` with `classes` outputs.
    pub fn model_spec(&self, input_bandwidth: usize, classes: usize) -> ModelSpec {
        let m = self.model.as_ref().expect("validated: model section");
        let mut layers = Vec::new();
        for (i, ((&b, &bk), &c)) in m.bandwidths.iter().zip(&m.kernel_bandwidths).zip(&m.channels).enumerate() {
            layers.push(if i == 0 {
                LayerSpec::Corr2S2 { channels: c, bandwidth: b, kernel_bandwidth: bk }
            } else {
                LayerSpec::Corr2So3 { channels: c, bandwidth: b, kernel_bandwidth: bk }
            });
            layers.push(LayerSpec::Relu);
        }
        layers.push(LayerSpec::InvariantLayer);
        if m.batch_norm {
            layers.push(LayerSpec::BatchNorm);
        }
        layers.push(LayerSpec::FullyConnected { outputs: classes });
        ModelSpec {
            input_bandwidth,
            input_channels: 1,
            layers,
            oversample: m.oversample,
            second_order: m.second_order,
            lambda_init: m.lambda_init,
        }
    }

    pub fn dilated_spec(&self, bandwidth: usize, shells: usize, objective: Objective) -> DilatedSpec {
        let d = self.dilated.as_ref().expect("validated: dilated section");
        DilatedSpec {
            bandwidth,
            shells,
            head: HeadSpec {
                channels: d.head_channels,
                bandwidth: d.head_bandwidth,
                kernel_bandwidth: d.head_kernel_bandwidth,
                lambda: d.lambda,
                pool: d.pool,
                stride: d.stride,
            },
            stack: d.stack.clone(),
            objective,
        }
    }
}

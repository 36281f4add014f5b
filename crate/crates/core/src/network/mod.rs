//! Reverse-mode tape, VolterraNet layers and models, Adam, training and checkpoints.

mod checkpoint;
mod layers;
mod mlp;
mod model;
mod optim;
mod tape;
mod train;

pub use checkpoint::{fingerprint_of, fingerprint_of_json, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub(crate) use layers::{dense as dense_on_tape, softmax_cross_entropy as cross_entropy_on_tape};
pub use layers::{softmax, NormStats};
pub use mlp::{Mlp, MlpSpec};
pub use model::{
    LayerSpec, Mode, Model, ModelSpec, ParamBlock, ParamReport, ParamRow, Recorded, Stage, BN_MOMENTUM,
};
pub use optim::Adam;
pub use tape::{Adjoint, BackwardFn, Tape, Var};
pub use train::{accuracy, argmax_rows, predict, Classifier, EpochStats, TrainConfig, Trainer};

#[cfg(test)]
mod tests;

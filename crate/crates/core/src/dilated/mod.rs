//! Sequences of signals on S² × R⁺: causal dilated convolution, per-shell
//! Volterra layers, SO(3) discretization, the dilated sequence model, a model
//! distance and the label-permutation test built on it.

mod conv;
mod io;
mod model;
mod permtest;
mod shell;

pub use conv::{dilated_conv1d, receptive_field, StackLayer};
pub use io::{read_sequences, write_sequences, SequenceSet, SEQUENCE_MAGIC, SEQUENCE_VERSION};
pub use model::{
    model_distance, model_distance_checkpoints, model_distance_on_features, DilatedModel, DilatedSpec, HeadSpec, Objective,
    Sequence,
};
pub use permtest::{
    p_values, permutation_test, permutation_test_on_features, PermTestConfig, PermTestReport, DISTANCE_METRIC,
};
pub use shell::{discretize_so3, shell_radii, shell_volterra2, ShellSignal, ShellVolterraLayer};

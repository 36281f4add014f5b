use super::model::{model_distance_on_features, DilatedModel, DilatedSpec, Objective, Sequence};
use crate::error::{bail, Result};
use crate::rng::{stream_rng, Stream};
use crate::scalar::Real;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

fn default_n_perm() -> usize {
    99
}

fn default_epochs() -> usize {
    40
}

fn default_lr() -> f64 {
    0.02
}

/// Permutation-test settings; the retraining budget is fixed per model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PermTestConfig {
    #[serde(default = "default_n_perm")]
    pub n_perm: usize,
    pub seed: u64,
    /// Full-batch Adam steps per class-conditional model.
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermTestReport {
    pub observed_d: f64,
    pub n_perm: usize,
    /// `(1 + #{d ≤ d_j}) / (1 + n_perm)`.
    pub p_smoothed: f64,
    /// `#{d ≤ d_j} / n_perm`.
    pub p_raw: f64,
    pub d_perm: Vec<f64>,
    /// Name of the model distance used.
    pub metric: String,
}

/// Smoothed and raw permutation p-values.
pub fn p_values(observed: f64, d_perm: &[f64]) -> (f64, f64) {
    let hits = d_perm.iter().filter(|d| observed <= **d).count() as f64;
    let n = d_perm.len() as f64;
    ((1.0 + hits) / (1.0 + n), if n > 0.0 { hits / n } else { 1.0 })
}

/// Name reported for the output-discrepancy distance.
pub const DISTANCE_METRIC: &str = "rms_output_discrepancy";

fn two_classes(labels: &[usize]) -> Result<(usize, usize)> {
    let mut classes: Vec<usize> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() != 2 {
        bail!(DegenerateClass, "permutation test needs exactly two classes, found {}", classes.len());
    }
    for &c in &classes {
        let n = labels.iter().filter(|&&l| l == c).count();
        if n < 2 {
            bail!(DegenerateClass, "class {c} has {n} sequence(s); at least 2 are needed");
        }
    }
    Ok((classes[0], classes[1]))
}

/// Train one class-conditional forecaster per group from the shared initialization
/// and measure their distance on the full probe set.
fn statistic<T: Real>(base: &DilatedModel<T>, z: &[Vec<T>], assign: &[usize], a: usize, cfg: &PermTestConfig) -> Result<f64> {
    let fit = |keep: bool| -> Result<DilatedModel<T>> {
        let group: Vec<Vec<T>> = z.iter().zip(assign).filter(|(_, l)| (**l == a) == keep).map(|(s, _)| s.clone()).collect();
        let mut m = base.clone();
        m.fit(&group, &[], cfg.epochs, cfg.lr)?;
        Ok(m)
    };
    let (ma, mb) = (fit(true)?, fit(false)?);
    model_distance_on_features(&ma, &mb, z)
}

/// Permutation test on normalized head features (one `[len][feature]` buffer per sequence).
/// The observed labels are shuffled with `(seed, Permutation, j)` for replicate `j`.
pub fn permutation_test_on_features<T: Real>(
    base: &DilatedModel<T>,
    z: &[Vec<T>],
    labels: &[usize],
    cfg: &PermTestConfig,
) -> Result<PermTestReport> {
    if z.len() != labels.len() {
        bail!(ShapeMismatch, "{} sequences with {} labels", z.len(), labels.len());
    }
    if cfg.n_perm < 19 {
        bail!(InvalidArgument, "n_perm must be at least 19, got {}", cfg.n_perm);
    }
    if base.spec().objective != Objective::Forecast {
        bail!(InvalidSpec, "class-conditional models need the forecast objective");
    }
    let (a, _) = two_classes(labels)?;
    let observed_d = statistic(base, z, labels, a, cfg)?;
    let d_perm = (1..=cfg.n_perm as u64)
        .into_par_iter()
        .map(|j| {
            let mut perm = labels.to_vec();
            perm.shuffle(&mut stream_rng(cfg.seed, Stream::Permutation, j));
            statistic(base, z, &perm, a, cfg)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (p_smoothed, p_raw) = p_values(observed_d, &d_perm);
    Ok(PermTestReport { observed_d, n_perm: cfg.n_perm, p_smoothed, p_raw, d_perm, metric: DISTANCE_METRIC.into() })
}

/// Full pipeline: frozen head features for every sequence, a label-independent
/// standardization, then [`permutation_test_on_features`].
pub fn permutation_test<T: Real>(spec: &DilatedSpec, seqs: &[Sequence<T>], cfg: &PermTestConfig) -> Result<PermTestReport> {
    let labels: Vec<usize> = seqs.iter().map(|s| s.label).collect();
    two_classes(&labels)?;
    let mut base = DilatedModel::<T>::new(spec.clone(), cfg.seed)?;
    let raw = seqs.par_iter().map(|s| base.sequence_features(s)).collect::<Result<Vec<_>>>()?;
    base.fit_normalizer(&raw);
    let z: Vec<Vec<T>> = raw.iter().map(|r| base.normalize(r)).collect();
    permutation_test_on_features(&base, &z, &labels, cfg)
}

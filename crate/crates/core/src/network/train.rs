use super::model::{Mode, Model};
use super::optim::Adam;
use crate::error::{bail, Result};
use crate::rng::{stream_rng, Stream};
use crate::scalar::Real;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

/// Anything trainable by [`Trainer`]: a flat parameter vector and a batched
/// cross-entropy gradient over flat `[batch][input_len]` inputs.
pub trait Classifier<T: Real>: Sync {
    fn input_len(&self) -> usize;
    fn classes(&self) -> usize;
    fn params(&self) -> &[T];
    fn params_mut(&mut self) -> &mut [T];
    /// Training-mode loss, gradient and logits; may update internal state (running statistics).
    fn train_grad(&mut self, x: &[T], labels: &[usize]) -> Result<(T, Vec<T>, Vec<T>)>;
    /// Evaluation-mode logits `[batch][classes]`.
    fn logits(&self, x: &[T]) -> Result<Vec<T>>;
}

impl<T: Real> Classifier<T> for Model<T> {
    fn input_len(&self) -> usize {
        Model::input_len(self)
    }
    fn classes(&self) -> usize {
        Model::classes(self)
    }
    fn params(&self) -> &[T] {
        Model::params(self)
    }
    fn params_mut(&mut self) -> &mut [T] {
        Model::params_mut(self)
    }
    fn train_grad(&mut self, x: &[T], labels: &[usize]) -> Result<(T, Vec<T>, Vec<T>)> {
        let (loss, grad, stats, logits) = self.loss_grad_logits(x, labels, Mode::Train)?;
        self.update_running_stats(&stats);
        Ok((loss, grad, logits))
    }
    fn logits(&self, x: &[T]) -> Result<Vec<T>> {
        Model::logits(self, x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

/// Loss and accuracy of one epoch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub train_accuracy: f64,
}

/// Index of the largest value in each row.
pub fn argmax_rows<T: Real>(logits: &[T], classes: usize) -> Vec<usize> {
    logits
        .chunks(classes)
        .map(|r| {
            r.iter().enumerate().fold(0, |best, (i, v)| if *v > r[best] { i } else { best })
        })
        .collect()
}

/// Mini-batch Adam over a shuffled dataset. The shuffle of epoch `e` comes
/// from `(seed, Shuffle, e)`, so a resumed run follows the same schedule.
#[derive(Debug, Clone)]
pub struct Trainer<T> {
    pub config: TrainConfig,
    pub adam: Adam<T>,
    /// Epochs completed.
    pub epoch: usize,
}

impl<T: Real> Trainer<T> {
    pub fn new(config: TrainConfig, n_params: usize) -> Result<Self> {
        if config.batch_size == 0 {
            bail!(InvalidArgument, "batch_size must be positive");
        }
        if !(config.lr.is_finite() && config.lr > 0.0) {
            bail!(InvalidArgument, "learning rate must be positive");
        }
        let adam = Adam::new(n_params, config.lr);
        Ok(Self { config, adam, epoch: 0 })
    }

    /// One optimizer step on one batch; returns the batch loss.
    pub fn step<C: Classifier<T>>(&mut self, model: &mut C, x: &[T], labels: &[usize]) -> Result<T> {
        let (loss, grad, _) = model.train_grad(x, labels)?;
        self.adam.step(model.params_mut(), &grad)?;
        Ok(loss)
    }

    pub fn run_epoch<C: Classifier<T>>(&mut self, model: &mut C, x: &[T], labels: &[usize]) -> Result<EpochStats> {
        let per = model.input_len();
        if x.len() != labels.len() * per {
            bail!(ShapeMismatch, "{} inputs of {per} values expected, buffer holds {}", labels.len(), x.len());
        }
        if labels.is_empty() {
            bail!(InvalidArgument, "cannot train on an empty dataset");
        }
        let mut order: Vec<usize> = (0..labels.len()).collect();
        order.shuffle(&mut stream_rng(self.config.seed, Stream::Shuffle, self.epoch as u64));
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for idx in order.chunks(self.config.batch_size) {
            let bx: Vec<T> = idx.iter().flat_map(|&i| x[i * per..(i + 1) * per].iter().copied()).collect();
            let by: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
            let (loss, grad, logits) = model.train_grad(&bx, &by)?;
            self.adam.step(model.params_mut(), &grad)?;
            loss_sum += loss.as_f64() * idx.len() as f64;
            correct += argmax_rows(&logits, model.classes()).iter().zip(&by).filter(|(p, y)| p == y).count();
        }
        self.epoch += 1;
        Ok(EpochStats {
            epoch: self.epoch,
            loss: loss_sum / labels.len() as f64,
            train_accuracy: correct as f64 / labels.len() as f64,
        })
    }

    /// Run the remaining epochs, calling `log` after each.
    pub fn fit<C: Classifier<T>>(
        &mut self,
        model: &mut C,
        x: &[T],
        labels: &[usize],
        mut log: impl FnMut(&EpochStats),
    ) -> Result<Vec<EpochStats>> {
        let mut hist = Vec::new();
        while self.epoch < self.config.epochs {
            let s = self.run_epoch(model, x, labels)?;
            log(&s);
            hist.push(s);
        }
        Ok(hist)
    }
}

/// Predicted classes, evaluated in chunks of `batch` examples.
pub fn predict<T: Real, C: Classifier<T>>(model: &C, x: &[T], batch: usize) -> Result<Vec<usize>> {
    let per = model.input_len();
    if per == 0 || x.len() % per != 0 {
        bail!(ShapeMismatch, "input buffer of {} values is not a multiple of {per}", x.len());
    }
    let mut out = Vec::with_capacity(x.len() / per);
    for chunk in x.chunks(per * batch.max(1)) {
        out.extend(argmax_rows(&model.logits(chunk)?, model.classes()));
    }
    Ok(out)
}

/// Fraction of correctly classified examples; 0 on an empty set.
pub fn accuracy<T: Real, C: Classifier<T>>(model: &C, x: &[T], labels: &[usize], batch: usize) -> Result<f64> {
    if labels.is_empty() {
        return Ok(0.0);
    }
    let pred = predict(model, x, batch)?;
    if pred.len() != labels.len() {
        bail!(ShapeMismatch, "{} predictions for {} labels", pred.len(), labels.len());
    }
    Ok(pred.iter().zip(labels).filter(|(p, y)| p == y).count() as f64 / labels.len() as f64)
}

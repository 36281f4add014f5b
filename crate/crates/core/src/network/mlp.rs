//! Fully connected baseline on flattened grid samples (not rotation aware).

use super::layers::{dense, softmax_cross_entropy};
use super::tape::Tape;
use super::train::Classifier;
use crate::error::{bail, Result};
use crate::rng::{stream_rng, Stream};
use crate::scalar::Real;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpSpec {
    pub inputs: usize,
    pub hidden: Vec<usize>,
    pub classes: usize,
}

impl MlpSpec {
    fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.inputs];
        w.extend(&self.hidden);
        w.push(self.classes);
        w
    }

    pub fn param_count(&self) -> usize {
        self.widths().windows(2).map(|p| p[0] * p[1] + p[1]).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    spec: MlpSpec,
    params: Vec<T>,
}

impl<T: Real> Mlp<T> {
    /// He-uniform weights, zero biases.
    pub fn new(spec: MlpSpec, seed: u64) -> Result<Self> {
        if spec.inputs == 0 || spec.classes == 0 || spec.hidden.contains(&0) {
            bail!(InvalidSpec, "MLP widths must be positive");
        }
        let mut rng = stream_rng(seed, Stream::Init, 1);
        let mut params = Vec::with_capacity(spec.param_count());
        for p in spec.widths().windows(2) {
            let bound = (6.0 / p[0] as f64).sqrt();
            params.extend((0..p[0] * p[1]).map(|_| T::lit(rng.random_range(-bound..bound))));
            params.extend((0..p[1]).map(|_| T::zero()));
        }
        Ok(Self { spec, params })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    fn run(&self, x: &[T], labels: Option<&[usize]>) -> Result<(Vec<T>, Option<(T, Vec<T>)>)> {
        if x.is_empty() || x.len() % self.spec.inputs != 0 {
            bail!(ShapeMismatch, "MLP input of {} values is not a batch of {}", x.len(), self.spec.inputs);
        }
        let mut tape = Tape::new();
        let mut h = tape.constant(x.to_vec());
        let widths = self.spec.widths();
        let mut off = 0;
        let mut vars = Vec::new();
        for (k, p) in widths.windows(2).enumerate() {
            let w = tape.leaf(self.params[off..off + p[0] * p[1]].to_vec());
            off += p[0] * p[1];
            let b = tape.leaf(self.params[off..off + p[1]].to_vec());
            off += p[1];
            vars.extend([w, b]);
            h = dense(&mut tape, h, w, b, p[0], p[1])?;
            if k + 2 < widths.len() {
                h = tape.relu(h);
            }
        }
        let logits = tape.value(h).to_vec();
        let Some(labels) = labels else { return Ok((logits, None)) };
        let loss = softmax_cross_entropy(&mut tape, h, labels, self.spec.classes)?;
        tape.backward(loss)?;
        let grad = vars.iter().flat_map(|v| tape.grad(*v)).collect();
        Ok((logits, Some((tape.value(loss)[0], grad))))
    }
}

impl<T: Real> Classifier<T> for Mlp<T> {
    fn input_len(&self) -> usize {
        self.spec.inputs
    }
    fn classes(&self) -> usize {
        self.spec.classes
    }
    fn params(&self) -> &[T] {
        &self.params
    }
    fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }
    fn train_grad(&mut self, x: &[T], labels: &[usize]) -> Result<(T, Vec<T>, Vec<T>)> {
        let (logits, lg) = self.run(x, Some(labels))?;
        let (loss, grad) = lg.expect("labels given");
        Ok((loss, grad, logits))
    }
    fn logits(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(self.run(x, None)?.0)
    }
}

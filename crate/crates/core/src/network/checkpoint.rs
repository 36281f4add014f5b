//! `HCKP` checkpoint container (little-endian):
//!
//! ```text
//! "HCKP" | u32 version | u64 fingerprint | u64 seed | u64 rng_counter | u64 epoch
//! | u64 adam_t | f64 lr | u64 spec_len | spec JSON bytes
//! | u64 n_params | u64 n_buffers | u64 n_moments
//! | f64 params | f64 buffers | f64 m | f64 v
//! ```

use super::model::{Model, ModelSpec};
use super::optim::Adam;
use crate::error::{bail, Error, Result};
use crate::scalar::Real;
use crate::signals::{read_exact_or_corrupt, read_f64s, read_u32};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::io::{Read, Write};
use std::path::Path;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"HCKP";
pub const CHECKPOINT_VERSION: u32 = 1;

/// First eight bytes (little-endian) of SHA-256 over the compact JSON of `spec`.
pub fn fingerprint_of<S: Serialize>(spec: &S) -> u64 {
    fingerprint_of_json(&serde_json::to_string(spec).expect("spec serializes"))
}

/// Fingerprint of already serialized spec JSON.
pub fn fingerprint_of_json(json: &str) -> u64 {
    let digest = Sha256::digest(json.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Saved training state of any architecture described by a JSON spec.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub fingerprint: u64,
    /// Canonical JSON of the architecture.
    pub spec_json: String,
    pub params: Vec<f64>,
    pub buffers: Vec<f64>,
    pub adam_t: u64,
    pub lr: f64,
    pub adam_m: Vec<f64>,
    pub adam_v: Vec<f64>,
    /// Master seed; every stream is rederived from it.
    pub seed: u64,
    /// Position in the master stream (epochs consumed for shuffling).
    pub rng_counter: u64,
    pub epoch: u64,
}

fn cast<T: Real>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.as_f64()).collect()
}

fn uncast<T: Real>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| T::lit(x)).collect()
}

impl Checkpoint {
    /// Capture a model with its optimizer state.
    pub fn of_model<T: Real>(model: &Model<T>, adam: Option<&Adam<T>>, seed: u64, epoch: u64) -> Self {
        let spec_json = model.spec().canonical_json();
        let (adam_t, lr, adam_m, adam_v) = match adam {
            Some(a) => (a.t, a.lr, cast(&a.m), cast(&a.v)),
            None => (0, 0.0, Vec::new(), Vec::new()),
        };
        Self {
            fingerprint: model.spec().fingerprint(),
            spec_json,
            params: cast(model.params()),
            buffers: cast(model.buffers()),
            adam_t,
            lr,
            adam_m,
            adam_v,
            seed,
            rng_counter: epoch,
            epoch,
        }
    }

    /// Checkpoint of an arbitrary architecture without optimizer state.
    pub fn raw(spec_json: String, fingerprint: u64, params: Vec<f64>, buffers: Vec<f64>, seed: u64, epoch: u64) -> Self {
        Self {
            fingerprint,
            spec_json,
            params,
            buffers,
            adam_t: 0,
            lr: 0.0,
            adam_m: Vec::new(),
            adam_v: Vec::new(),
            seed,
            rng_counter: epoch,
            epoch,
        }
    }

    pub fn spec(&self) -> Result<ModelSpec> {
        serde_json::from_str(&self.spec_json).map_err(|e| Error::Corrupt(format!("embedded spec: {e}")))
    }

    /// Rebuild the model stored in this checkpoint.
    pub fn model<T: Real>(&self) -> Result<Model<T>> {
        self.model_for(&self.spec()?)
    }

    /// Rebuild into `spec`, failing if the checkpoint was made for another spec.
    pub fn model_for<T: Real>(&self, spec: &ModelSpec) -> Result<Model<T>> {
        let expected = spec.fingerprint();
        if expected != self.fingerprint {
            return Err(Error::Fingerprint { expected, found: self.fingerprint });
        }
        let mut m = Model::new(spec.clone(), self.seed)?;
        m.set_params(&uncast(&self.params))?;
        m.set_buffers(&uncast(&self.buffers))?;
        Ok(m)
    }

    /// Optimizer state, if one was saved.
    pub fn adam<T: Real>(&self) -> Result<Option<Adam<T>>> {
        if self.adam_m.is_empty() {
            return Ok(None);
        }
        Adam::from_state(self.lr, self.adam_t, uncast(&self.adam_m), uncast(&self.adam_v)).map(Some)
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        if self.adam_m.len() != self.adam_v.len() {
            bail!(ShapeMismatch, "moment vectors differ in length");
        }
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        for v in [self.fingerprint, self.seed, self.rng_counter, self.epoch, self.adam_t] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.lr.to_le_bytes())?;
        w.write_all(&(self.spec_json.len() as u64).to_le_bytes())?;
        w.write_all(self.spec_json.as_bytes())?;
        for n in [self.params.len(), self.buffers.len(), self.adam_m.len()] {
            w.write_all(&(n as u64).to_le_bytes())?;
        }
        for block in [&self.params, &self.buffers, &self.adam_m, &self.adam_v] {
            for x in block.iter() {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        read_exact_or_corrupt(r, &mut magic, "magic")?;
        if &magic != CHECKPOINT_MAGIC {
            bail!(Corrupt, "not a checkpoint (bad magic)");
        }
        let version = read_u32(r, "version")?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Version { found: version, expected: CHECKPOINT_VERSION });
        }
        let mut u64s = [0u64; 5];
        for v in &mut u64s {
            *v = read_u64(r)?;
        }
        let [fingerprint, seed, rng_counter, epoch, adam_t] = u64s;
        let lr = f64::from_bits(read_u64(r)?);
        let spec_len = read_len(r, 1 << 24)?;
        let mut spec = vec![0u8; spec_len];
        read_exact_or_corrupt(r, &mut spec, "spec")?;
        let spec_json = String::from_utf8(spec).map_err(|_| Error::Corrupt("spec is not UTF-8".into()))?;
        let n_params = read_len(r, 1 << 32)?;
        let n_buffers = read_len(r, 1 << 32)?;
        let n_moments = read_len(r, 1 << 32)?;
        let params = read_f64s(r, n_params, "parameters")?;
        let buffers = read_f64s(r, n_buffers, "buffers")?;
        let adam_m = read_f64s(r, n_moments, "first moments")?;
        let adam_v = read_f64s(r, n_moments, "second moments")?;
        let mut extra = [0u8; 1];
        if r.read(&mut extra)? != 0 {
            bail!(Corrupt, "trailing bytes after checkpoint");
        }
        let ck = Self { fingerprint, spec_json, params, buffers, adam_t, lr, adam_m, adam_v, seed, rng_counter, epoch };
        if fingerprint_of_json(&ck.spec_json) != fingerprint {
            bail!(Corrupt, "embedded spec does not match the stored fingerprint");
        }
        Ok(ck)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(&mut f)
    }
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact_or_corrupt(r, &mut b, "header")?;
    Ok(u64::from_le_bytes(b))
}

fn read_len<R: Read>(r: &mut R, cap: u64) -> Result<usize> {
    let n = read_u64(r)?;
    if n > cap {
        bail!(Corrupt, "implausible length {n}");
    }
    Ok(n as usize)
}

//! `HDAT` classification dataset container (little-endian):
//!
//! ```text
//! "HDAT" | u32 version | u32 bandwidth | u32 channels | u32 classes | u32 rotated
//! | u64 count | u32 labels[count] | f64 samples[count × channels × 2B × 2B]
//! ```

use super::Dataset;
use crate::error::{bail, Error, Result};
use crate::harmonics::Bandwidth;
use crate::signals::{read_exact_or_corrupt, read_f64s, read_u32};
use std::io::{Read, Write};

pub const DATASET_MAGIC: &[u8; 4] = b"HDAT";
pub const DATASET_VERSION: u32 = 1;

pub fn write_dataset<W: Write>(w: &mut W, d: &Dataset) -> Result<()> {
    if d.samples.len() != d.len() * d.example_len() {
        bail!(ShapeMismatch, "dataset holds {} samples for {} examples", d.samples.len(), d.len());
    }
    w.write_all(DATASET_MAGIC)?;
    for v in [DATASET_VERSION, d.bandwidth.get() as u32, d.channels as u32, d.classes as u32, d.rotated as u32] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&(d.len() as u64).to_le_bytes())?;
    for l in &d.labels {
        w.write_all(&(*l as u32).to_le_bytes())?;
    }
    for x in &d.samples {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_dataset<R: Read>(r: &mut R) -> Result<Dataset> {
    let mut magic = [0u8; 4];
    read_exact_or_corrupt(r, &mut magic, "magic")?;
    if &magic != DATASET_MAGIC {
        bail!(Corrupt, "not a dataset (bad magic)");
    }
    let version = read_u32(r, "version")?;
    if version != DATASET_VERSION {
        return Err(Error::Version { found: version, expected: DATASET_VERSION });
    }
    let b = read_u32(r, "bandwidth")? as usize;
    let channels = read_u32(r, "channels")? as usize;
    let classes = read_u32(r, "classes")? as usize;
    let rotated = read_u32(r, "rotated")? != 0;
    let bandwidth = Bandwidth::new(b).map_err(|_| Error::Corrupt("zero bandwidth".into()))?;
    if channels == 0 || b > 1 << 12 || channels > 1 << 16 {
        bail!(Corrupt, "implausible header (B={b}, channels={channels})");
    }
    let mut n = [0u8; 8];
    read_exact_or_corrupt(r, &mut n, "count")?;
    let count = u64::from_le_bytes(n);
    if count > 1 << 32 {
        bail!(Corrupt, "implausible example count {count}");
    }
    let count = count as usize;
    let mut labels = Vec::with_capacity(count);
    for _ in 0..count {
        let l = read_u32(r, "labels")? as usize;
        if l >= classes {
            bail!(Corrupt, "label {l} outside {classes} classes");
        }
        labels.push(l);
    }
    let samples = read_f64s(r, count * channels * bandwidth.s2_len(), "samples")?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        bail!(Corrupt, "trailing bytes after dataset");
    }
    Ok(Dataset { bandwidth, channels, classes, rotated, samples, labels })
}

//! `HSEQ` sequence dataset container (little-endian):
//!
//! ```text
//! "HSEQ" | u32 version | u32 bandwidth | u32 shells | u64 count | f64 radii[shells]
//! then per sequence: u32 label | u64 length | f64 samples[length × shells × 2B × 2B]
//! ```

use super::model::Sequence;
use super::shell::ShellSignal;
use crate::error::{bail, Error, Result};
use crate::harmonics::Bandwidth;
use crate::signals::{read_exact_or_corrupt, read_f64s, read_u32};
use std::io::{Read, Write};

pub const SEQUENCE_MAGIC: &[u8; 4] = b"HSEQ";
pub const SEQUENCE_VERSION: u32 = 1;

/// Sequences sharing one band limit and shell layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSet {
    pub bandwidth: Bandwidth,
    pub radii: Vec<f64>,
    pub sequences: Vec<Sequence<f64>>,
}

impl SequenceSet {
    pub fn shells(&self) -> usize {
        self.radii.len()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.sequences.iter().map(|s| s.label).collect()
    }

    fn check(&self) -> Result<()> {
        for (i, s) in self.sequences.iter().enumerate() {
            if s.voxels.is_empty() {
                bail!(InvalidArgument, "sequence {i} is empty");
            }
            if s.voxels.iter().any(|v| v.bandwidth() != self.bandwidth || v.n_shells() != self.shells()) {
                bail!(ShapeMismatch, "sequence {i} does not match {} with {} shells", self.bandwidth, self.shells());
            }
        }
        Ok(())
    }
}

pub fn write_sequences<W: Write>(w: &mut W, set: &SequenceSet) -> Result<()> {
    set.check()?;
    w.write_all(SEQUENCE_MAGIC)?;
    w.write_all(&SEQUENCE_VERSION.to_le_bytes())?;
    w.write_all(&(set.bandwidth.get() as u32).to_le_bytes())?;
    w.write_all(&(set.shells() as u32).to_le_bytes())?;
    w.write_all(&(set.sequences.len() as u64).to_le_bytes())?;
    for r in &set.radii {
        w.write_all(&r.to_le_bytes())?;
    }
    for s in &set.sequences {
        w.write_all(&(s.label as u32).to_le_bytes())?;
        w.write_all(&(s.voxels.len() as u64).to_le_bytes())?;
        for v in &s.voxels {
            for x in v.samples() {
                w.write_all(&x.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R, what: &str) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact_or_corrupt(r, &mut b, what)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_sequences<R: Read>(r: &mut R) -> Result<SequenceSet> {
    let mut magic = [0u8; 4];
    read_exact_or_corrupt(r, &mut magic, "magic")?;
    if &magic != SEQUENCE_MAGIC {
        bail!(Corrupt, "not a sequence dataset (bad magic)");
    }
    let version = read_u32(r, "version")?;
    if version != SEQUENCE_VERSION {
        return Err(Error::Version { found: version, expected: SEQUENCE_VERSION });
    }
    let b = read_u32(r, "bandwidth")? as usize;
    let bandwidth = Bandwidth::new(b).map_err(|_| Error::Corrupt("zero bandwidth".into()))?;
    let shells = read_u32(r, "shells")? as usize;
    if shells == 0 || shells > 1 << 16 || b > 1 << 12 {
        bail!(Corrupt, "implausible header (B={b}, shells={shells})");
    }
    let count = read_u64(r, "count")?;
    let radii = read_f64s(r, shells, "radii")?;
    let per = shells * bandwidth.s2_len();
    let mut sequences = Vec::new();
    for _ in 0..count {
        let label = read_u32(r, "label")? as usize;
        let len = read_u64(r, "length")?;
        if len == 0 || len > 1 << 24 {
            bail!(Corrupt, "implausible sequence length {len}");
        }
        let mut voxels = Vec::with_capacity(len as usize);
        for _ in 0..len {
            let s = read_f64s(r, per, "samples")?;
            voxels.push(ShellSignal::from_samples(bandwidth, shells, s).map_err(|e| Error::Corrupt(e.to_string()))?);
        }
        sequences.push(Sequence { voxels, label });
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        bail!(Corrupt, "trailing bytes after dataset");
    }
    Ok(SequenceSet { bandwidth, radii, sequences })
}

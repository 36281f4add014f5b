//! `HSIG` container: little-endian header `{magic "HSIG", version u32,
//! space u8 (0 = S², 1 = SO(3)), B u32, channels u32}` followed by `f64`
//! samples, channel-major, each channel in grid order.

use super::signal::{Domain, Signal, S2, So3};
use crate::error::{Error, Result};
use crate::harmonics::Bandwidth;
use crate::scalar::Real;
use std::io::{Read, Write};

pub const SIGNAL_MAGIC: &[u8; 4] = b"HSIG";
pub const SIGNAL_VERSION: u32 = 1;

/// A signal read from a container whose space is only known at runtime.
#[derive(Debug, Clone, PartialEq)]
pub enum AnySignal<T> {
    S2(Signal<T, S2>),
    So3(Signal<T, So3>),
}

pub(crate) fn read_exact_or_corrupt<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Corrupt(format!("truncated {what}")),
        _ => Error::Io(e),
    })
}

pub(crate) fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact_or_corrupt(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

pub(crate) fn read_f64s<R: Read>(r: &mut R, n: usize, what: &str) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; n * 8];
    read_exact_or_corrupt(r, &mut bytes, what)?;
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect())
}

pub fn write_signal<W: Write, T: Real, D: Domain>(w: &mut W, s: &Signal<T, D>) -> Result<()> {
    w.write_all(SIGNAL_MAGIC)?;
    w.write_all(&SIGNAL_VERSION.to_le_bytes())?;
    w.write_all(&[D::TAG])?;
    w.write_all(&(s.bandwidth().get() as u32).to_le_bytes())?;
    w.write_all(&(s.channels() as u32).to_le_bytes())?;
    let mut buf = Vec::with_capacity(s.samples().len() * 8);
    for x in s.samples() {
        buf.extend_from_slice(&x.as_f64().to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_any_signal<R: Read, T: Real>(r: &mut R) -> Result<AnySignal<T>> {
    let mut magic = [0u8; 4];
    read_exact_or_corrupt(r, &mut magic, "signal header")?;
    if &magic != SIGNAL_MAGIC {
        return Err(Error::Corrupt(format!("bad signal magic {magic:?}")));
    }
    let version = read_u32(r, "signal header")?;
    if version != SIGNAL_VERSION {
        return Err(Error::Version { found: version, expected: SIGNAL_VERSION });
    }
    let mut tag = [0u8; 1];
    read_exact_or_corrupt(r, &mut tag, "signal header")?;
    let b = read_u32(r, "signal header")? as usize;
    let channels = read_u32(r, "signal header")? as usize;
    let bw = Bandwidth::new(b).map_err(|_| Error::Corrupt("zero bandwidth".into()))?;
    if channels == 0 || b > 1024 {
        return Err(Error::Corrupt(format!("implausible header B={b} channels={channels}")));
    }
    let cast = |v: Vec<f64>| v.into_iter().map(T::lit).collect::<Vec<T>>();
    match tag[0] {
        S2::TAG => {
            let v = read_f64s(r, channels * S2::grid_len(bw), "signal samples")?;
            Ok(AnySignal::S2(Signal::new(bw, channels, cast(v))?))
        }
        So3::TAG => {
            let v = read_f64s(r, channels * So3::grid_len(bw), "signal samples")?;
            Ok(AnySignal::So3(Signal::new(bw, channels, cast(v))?))
        }
        t => Err(Error::Corrupt(format!("unknown space tag {t}"))),
    }
}

pub fn read_s2_signal<R: Read, T: Real>(r: &mut R) -> Result<Signal<T, S2>> {
    match read_any_signal(r)? {
        AnySignal::S2(s) => Ok(s),
        AnySignal::So3(_) => Err(Error::Corrupt("expected an S2 signal, found SO3".into())),
    }
}

pub fn read_so3_signal<R: Read, T: Real>(r: &mut R) -> Result<Signal<T, So3>> {
    match read_any_signal(r)? {
        AnySignal::So3(s) => Ok(s),
        AnySignal::S2(_) => Err(Error::Corrupt("expected an SO3 signal, found S2".into())),
    }
}

use super::{Rotation, S2Signal, So3Signal};
use crate::error::{bail, Result};
use crate::harmonics::{plan, sph_harm, wigner_big_d_all, Bandwidth, S2Spectrum, So3Spectrum};
use crate::rng::{stream_rng, Stream};
use crate::scalar::{parity, Cplx, Real};
use num_traits::Zero;
use rand::Rng;
use rand_distr::StandardNormal;

/// Spectrum of `g·f` for `f` with spectrum `spec`: each degree vector is
/// left-multiplied by `conj(D^l(g))`.
pub fn rotate_s2_spectrum<T: Real>(spec: &S2Spectrum<T>, g: &Rotation) -> S2Spectrum<T> {
    let b = spec.bandwidth();
    let (a, be, c) = g.angles::<T>();
    let ds = wigner_big_d_all(b.get() - 1, a, be, c);
    let mut out = S2Spectrum::zeros(b);
    for (l, d) in ds.iter().enumerate() {
        let rotated = d.conj().matvec(spec.degree(l));
        out.degree_mut(l).copy_from_slice(&rotated);
    }
    out
}

/// Spectrum of `g·f` on SO(3): each block is left-multiplied by `conj(D^l(g))`.
pub fn rotate_so3_spectrum<T: Real>(spec: &So3Spectrum<T>, g: &Rotation) -> So3Spectrum<T> {
    let b = spec.bandwidth();
    let (a, be, c) = g.angles::<T>();
    let blocks = wigner_big_d_all(b.get() - 1, a, be, c)
        .iter()
        .zip(spec.blocks())
        .map(|(d, blk)| d.conj().matmul(blk))
        .collect();
    So3Spectrum::from_blocks(b, blocks).expect("degrees preserved")
}

/// `(g·f)(x) = f(g⁻¹x)`, computed spectrally; exact for band-limited `f`.
pub fn rotate_s2<T: Real>(f: &S2Signal<T>, g: &Rotation) -> S2Signal<T> {
    let spectra: Vec<_> = f.spectra().iter().map(|s| rotate_s2_spectrum(s, g)).collect();
    S2Signal::from_spectra(f.bandwidth(), &spectra).expect("rotation keeps values finite")
}

/// Left translation `(g·f)(h) = f(g⁻¹h)`, computed spectrally.
pub fn rotate_so3<T: Real>(f: &So3Signal<T>, g: &Rotation) -> So3Signal<T> {
    let spectra: Vec<_> = f.spectra().iter().map(|s| rotate_so3_spectrum(s, g)).collect();
    So3Signal::from_spectra(f.bandwidth(), &spectra).expect("rotation keeps values finite")
}

/// `∫_{S²} f dω` per channel; total area `4π`.
pub fn integrate_s2<T: Real>(f: &S2Signal<T>) -> Vec<T> {
    let b = f.bandwidth();
    let p = plan::<T>(b);
    let n = b.nodes();
    (0..f.channels())
        .map(|c| {
            f.channel(c)
                .chunks(n)
                .enumerate()
                .map(|(j, row)| p.s2_cell(j) * row.iter().copied().sum::<T>())
                .sum()
        })
        .collect()
}

/// `∫_{SO(3)} f dμ` per channel; Haar mass one.
pub fn integrate_so3<T: Real>(f: &So3Signal<T>) -> Vec<T> {
    let b = f.bandwidth();
    let p = plan::<T>(b);
    let n = b.nodes();
    (0..f.channels())
        .map(|c| {
            let mut rows = vec![T::zero(); n];
            for (idx, row) in f.channel(c).chunks(n).enumerate() {
                let j = idx % n;
                rows[j] = rows[j] + row.iter().copied().sum::<T>();
            }
            rows.iter().enumerate().map(|(j, &s)| p.so3_cell(j) * s).sum()
        })
        .collect()
}

/// Evaluate one channel of a band-limited S² signal at an arbitrary point.
pub fn evaluate_s2<T: Real>(spec: &S2Spectrum<T>, theta: T, phi: T) -> Result<T> {
    if !(T::zero()..=T::PI()).contains(&theta) {
        bail!(InvalidArgument, "colatitude {theta} outside [0, π]");
    }
    let mut acc = Cplx::zero();
    for l in 0..spec.bandwidth().get() {
        for m in -(l as isize)..=(l as isize) {
            acc = acc + spec.get(l, m) * sph_harm(l, m, theta, phi)?;
        }
    }
    Ok(acc.re)
}

fn normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::lit(rng.sample::<f64, _>(StandardNormal))
}

/// Spectrum of a real, isotropic Gaussian signal: every coefficient has
/// `E|c|² = 1` (complex ones split it evenly between real and imaginary parts),
/// so the pointwise variance is `B²/4π` everywhere.
pub fn random_s2_spectrum<T: Real, R: Rng + ?Sized>(b: Bandwidth, rng: &mut R) -> S2Spectrum<T> {
    let mut s = S2Spectrum::zeros(b);
    for l in 0..b.get() {
        s.set(l, 0, Cplx::new(normal(rng), T::zero()));
        for m in 1..=l as isize {
            let z = Cplx::new(normal(rng), normal(rng)) * T::FRAC_1_SQRT_2();
            s.set(l, m, z);
            s.set(l, -m, z.conj() * parity::<T>(m));
        }
    }
    s
}

/// SO(3) analogue of [`random_s2_spectrum`]; pairs `(m, n)` with `(−m, −n)`.
pub fn random_so3_spectrum<T: Real, R: Rng + ?Sized>(b: Bandwidth, rng: &mut R) -> So3Spectrum<T> {
    let mut s = So3Spectrum::zeros(b);
    for l in 0..b.get() {
        let li = l as isize;
        let blk = s.block_mut(l);
        for m in 0..=li {
            for n in -li..=li {
                if m == 0 && n < 0 {
                    continue;
                }
                if m == 0 && n == 0 {
                    blk.set(0, 0, Cplx::new(normal(rng), T::zero()));
                    continue;
                }
                let z = Cplx::new(normal(rng), normal(rng)) * T::FRAC_1_SQRT_2();
                blk.set(m, n, z);
                blk.set(-m, -n, z.conj() * parity::<T>(m - n));
            }
        }
    }
    s
}

/// Deterministic band-limited S² signal; channel `c` draws from
/// `(seed, Signal, c)`.
pub fn random_bandlimited_s2<T: Real>(b: Bandwidth, channels: usize, seed: u64) -> S2Signal<T> {
    let spectra: Vec<_> = (0..channels.max(1))
        .map(|c| random_s2_spectrum(b, &mut stream_rng(seed, Stream::Signal, c as u64)))
        .collect();
    S2Signal::from_spectra(b, &spectra).expect("finite synthesis")
}

pub fn random_bandlimited_so3<T: Real>(b: Bandwidth, channels: usize, seed: u64) -> So3Signal<T> {
    let spectra: Vec<_> = (0..channels.max(1))
        .map(|c| random_so3_spectrum(b, &mut stream_rng(seed, Stream::Signal, c as u64)))
        .collect();
    So3Signal::from_spectra(b, &spectra).expect("finite synthesis")
}

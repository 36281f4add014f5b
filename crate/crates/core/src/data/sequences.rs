use super::bandlimited_from_fn;
use crate::dilated::{shell_radii, Sequence, SequenceSet, ShellSignal};
use crate::error::{bail, Result};
use crate::harmonics::Bandwidth;
use crate::rng::{split_seed, stream_rng, Stream};
use crate::signals::{random_bandlimited_s2, unit_vector, Rotation};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceParams {
    pub per_class: usize,
    pub length: usize,
    pub bandwidth: usize,
    pub shells: usize,
    pub noise: f64,
    /// Extra anisotropy of class 1 around the middle of the tract (0 = identical classes).
    pub separation: f64,
    pub seed: u64,
}

/// Two-class tract-like sequences. Each voxel holds a diffusion-like profile
/// `exp(−b_r (0.3 + a_s (x·u_s)²))` per shell radius `b_r`, along a gently
/// bending fibre direction `u_s` with a random orientation per sequence.
/// Class 1 gets extra anisotropy `separation · exp(−((s − L/2)/(L/5))²)`.
pub fn generate_sequences(p: &SequenceParams) -> Result<SequenceSet> {
    if p.length == 0 || p.shells == 0 {
        bail!(InvalidArgument, "length and shells must be positive");
    }
    if !(p.noise.is_finite() && p.noise >= 0.0 && p.separation.is_finite()) {
        bail!(InvalidArgument, "noise and separation must be finite, noise non-negative");
    }
    let b = Bandwidth::new(p.bandwidth)?;
    let radii = shell_radii(p.shells, 0.5, 2.0);
    let noise_scale = p.noise / (b.get() as f64 / (4.0 * std::f64::consts::PI).sqrt());
    let len = p.length as f64;
    let mut sequences = Vec::with_capacity(2 * p.per_class);
    for n in 0..2 * p.per_class {
        let label = n % 2;
        let g = Rotation::random(&mut stream_rng(p.seed, Stream::Rotation, n as u64));
        let jitter: f64 = stream_rng(p.seed, Stream::Content, n as u64).random_range(-1.0..1.0);
        let mut voxels = Vec::with_capacity(p.length);
        for s in 0..p.length {
            let u = g.apply(unit_vector(0.08 * s as f64, 0.0));
            let bump = (-((s as f64 - len / 2.0) / (len / 5.0)).powi(2)).exp();
            let a = 0.8 + 0.2 * jitter + if label == 1 { p.separation * bump } else { 0.0 };
            let mut samples = Vec::with_capacity(p.shells * b.s2_len());
            for (r, br) in radii.iter().enumerate() {
                let f = bandlimited_from_fn(b, |theta, phi| {
                    let x = unit_vector(theta, phi);
                    let c = x[0] * u[0] + x[1] * u[1] + x[2] * u[2];
                    (-br * (0.3 + a * c * c)).exp()
                });
                if p.noise > 0.0 {
                    let counter = ((n * p.length + s) * p.shells + r) as u64;
                    let e = random_bandlimited_s2::<f64>(b, 1, split_seed(p.seed, Stream::Noise, counter));
                    samples.extend(f.samples().iter().zip(e.samples()).map(|(v, e)| v + noise_scale * e));
                } else {
                    samples.extend_from_slice(f.samples());
                }
            }
            voxels.push(ShellSignal::from_samples(b, p.shells, samples)?);
        }
        sequences.push(Sequence { voxels, label });
    }
    Ok(SequenceSet { bandwidth: b, radii, sequences })
}

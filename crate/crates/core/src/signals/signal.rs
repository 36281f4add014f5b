use crate::error::{bail, Result};
use crate::harmonics::{
    sht_forward, sht_inverse, so3_ft_forward, so3_ft_inverse, Bandwidth, S2Spectrum, So3Spectrum,
};
use crate::scalar::Real;
use std::fmt::Debug;
use std::marker::PhantomData;

/// Sampling domain of a [`Signal`].
pub trait Domain: Copy + Debug + Default + PartialEq + Send + Sync + 'static {
    /// Space tag used by the binary container.
    const TAG: u8;
    const NAME: &'static str;
    fn grid_len(b: Bandwidth) -> usize;
}

/// The sphere, sampled θ-major on the `2B×2B` grid.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct S2;

/// The rotation group, sampled `[α][β][γ]` on the `2B×2B×2B` grid.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct So3;

impl Domain for S2 {
    const TAG: u8 = 0;
    const NAME: &'static str = "S2";
    fn grid_len(b: Bandwidth) -> usize {
        b.s2_len()
    }
}

impl Domain for So3 {
    const TAG: u8 = 1;
    const NAME: &'static str = "SO3";
    fn grid_len(b: Bandwidth) -> usize {
        b.so3_len()
    }
}

/// Real multichannel samples on an equiangular grid, stored channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal<T, D> {
    bandwidth: Bandwidth,
    channels: usize,
    samples: Vec<T>,
    domain: PhantomData<D>,
}

pub type S2Signal<T> = Signal<T, S2>;
pub type So3Signal<T> = Signal<T, So3>;

impl<T: Real, D: Domain> Signal<T, D> {
    pub fn new(bandwidth: Bandwidth, channels: usize, samples: Vec<T>) -> Result<Self> {
        if channels == 0 {
            bail!(InvalidArgument, "a signal needs at least one channel");
        }
        let want = channels * D::grid_len(bandwidth);
        if samples.len() != want {
            bail!(ShapeMismatch, "{} signal at {bandwidth} with {channels} channels needs {want} samples, got {}", D::NAME, samples.len());
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            bail!(InvalidArgument, "non-finite sample at index {i}");
        }
        Ok(Self { bandwidth, channels, samples, domain: PhantomData })
    }

    pub fn zeros(bandwidth: Bandwidth, channels: usize) -> Self {
        let n = channels.max(1) * D::grid_len(bandwidth);
        Self { bandwidth, channels: channels.max(1), samples: vec![T::zero(); n], domain: PhantomData }
    }

    pub fn constant(bandwidth: Bandwidth, channels: usize, value: T) -> Self {
        let mut s = Self::zeros(bandwidth, channels);
        s.samples.iter_mut().for_each(|x| *x = value);
        s
    }

    /// Stack single-channel signals of equal band limit.
    pub fn stack(parts: &[Self]) -> Result<Self> {
        let Some(first) = parts.first() else {
            bail!(InvalidArgument, "nothing to stack");
        };
        let mut samples = Vec::with_capacity(parts.iter().map(|p| p.samples.len()).sum());
        for p in parts {
            if p.bandwidth != first.bandwidth {
                bail!(ShapeMismatch, "cannot stack {} with {}", p.bandwidth, first.bandwidth);
            }
            samples.extend_from_slice(&p.samples);
        }
        let channels = parts.iter().map(|p| p.channels).sum();
        Ok(Self { bandwidth: first.bandwidth, channels, samples, domain: PhantomData })
    }

    #[inline]
    pub fn bandwidth(&self) -> Bandwidth {
        self.bandwidth
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Samples per channel.
    #[inline]
    pub fn grid_len(&self) -> usize {
        D::grid_len(self.bandwidth)
    }

    #[inline]
    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn channel(&self, c: usize) -> &[T] {
        let n = self.grid_len();
        &self.samples[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [T] {
        let n = self.grid_len();
        &mut self.samples[c * n..(c + 1) * n]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { samples: self.samples.iter().map(|&x| f(x)).collect(), ..self.clone() }
    }

    pub fn max_abs(&self) -> T {
        self.samples.iter().fold(T::zero(), |a, x| a.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.samples
            .iter()
            .zip(&other.samples)
            .fold(T::zero(), |a, (x, y)| a.max((*x - *y).abs()))
    }

    /// `max |a − b| / max(max |b|, tiny)`.
    pub fn rel_diff(&self, reference: &Self) -> T {
        self.max_abs_diff(reference) / reference.max_abs().max(T::min_positive_value())
    }

    pub fn cast<U: Real>(&self) -> Signal<U, D> {
        Signal {
            bandwidth: self.bandwidth,
            channels: self.channels,
            samples: self.samples.iter().map(|x| U::lit(x.as_f64())).collect(),
            domain: PhantomData,
        }
    }
}

impl<T: Real> S2Signal<T> {
    pub fn spectra(&self) -> Vec<S2Spectrum<T>> {
        (0..self.channels)
            .map(|c| sht_forward(self.bandwidth, self.channel(c)).expect("channel length matches grid"))
            .collect()
    }

    /// Synthesize on the grid of band limit `b` (at least the spectra's).
    pub fn from_spectra(b: Bandwidth, spectra: &[S2Spectrum<T>]) -> Result<Self> {
        if spectra.is_empty() {
            bail!(InvalidArgument, "no spectra given");
        }
        let samples = spectra.iter().flat_map(|s| sht_inverse(b, s)).collect();
        Self::new(b, spectra.len(), samples)
    }
}

impl<T: Real> So3Signal<T> {
    pub fn spectra(&self) -> Vec<So3Spectrum<T>> {
        (0..self.channels)
            .map(|c| so3_ft_forward(self.bandwidth, self.channel(c)).expect("channel length matches grid"))
            .collect()
    }

    pub fn from_spectra(b: Bandwidth, spectra: &[So3Spectrum<T>]) -> Result<Self> {
        if spectra.is_empty() {
            bail!(InvalidArgument, "no spectra given");
        }
        let samples = spectra.iter().flat_map(|s| so3_ft_inverse(b, s)).collect();
        Self::new(b, spectra.len(), samples)
    }
}

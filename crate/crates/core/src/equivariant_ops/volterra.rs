//! Second-order Volterra layers with a separable quadratic kernel.
//!
//! `out_o = λ (f ⋆ w₁)_o + (1 − λ) (f ⋆ w̃₂)_o ⊙ (f ⋆ w̄₂)_o + b_o`, where
//! `λ = clamp(mix, 0, 1)` and `⊙` is the pointwise product on SO(3).
//!
//! The product of two correlations at band limit `B_k` has band limit
//! `2B_k − 1`. With `oversample = 1` the product is taken on the output
//! grid as is. With `oversample ≥ 2` it is taken on a grid fine enough to
//! represent it exactly and then projected to the output band limit, which
//! keeps the layer exactly equivariant at any output band limit.

use super::corr::{corr_s2_spectral, corr_so3_spectral};
use super::kernel::{S2Kernel, So3Kernel};
use crate::error::{bail, Result};
use crate::harmonics::{so3_ft_forward_truncated, so3_ft_inverse, Bandwidth, So3Spectrum};
use crate::scalar::Real;
use crate::signals::{S2Signal, So3Signal};

/// Channel shape shared by the kernels of a layer.
pub trait KernelShape {
    fn in_channels(&self) -> usize;
    fn out_channels(&self) -> usize;
    fn bandwidth(&self) -> Bandwidth;
}

macro_rules! shape_impl {
    ($k:ident) => {
        impl<T: Real> KernelShape for $k<T> {
            fn in_channels(&self) -> usize {
                $k::in_channels(self)
            }
            fn out_channels(&self) -> usize {
                $k::out_channels(self)
            }
            fn bandwidth(&self) -> Bandwidth {
                $k::bandwidth(self)
            }
        }
    };
}
shape_impl!(S2Kernel);
shape_impl!(So3Kernel);

#[derive(Debug, Clone, PartialEq)]
pub struct VolterraLayer<T, K> {
    pub w1: K,
    pub w2a: K,
    pub w2b: K,
    /// Unconstrained mixing parameter; the effective weight is `clamp(mix, 0, 1)`.
    pub mix: T,
    /// Per-output-channel bias.
    pub bias: Vec<T>,
    pub oversample: usize,
}

pub type S2VolterraLayer<T> = VolterraLayer<T, S2Kernel<T>>;
pub type So3VolterraLayer<T> = VolterraLayer<T, So3Kernel<T>>;

impl<T: Real, K: KernelShape> VolterraLayer<T, K> {
    pub fn new(w1: K, w2a: K, w2b: K, mix: T) -> Result<Self> {
        for k in [&w2a, &w2b] {
            if k.in_channels() != w1.in_channels()
                || k.out_channels() != w1.out_channels()
                || k.bandwidth() != w1.bandwidth()
            {
                bail!(ShapeMismatch, "Volterra kernels must share channels and band limit");
            }
        }
        if !mix.is_finite() {
            bail!(InvalidArgument, "mixing weight must be finite");
        }
        let bias = vec![T::zero(); w1.out_channels()];
        Ok(Self { w1, w2a, w2b, mix, bias, oversample: 1 })
    }

    pub fn with_oversample(mut self, k: usize) -> Self {
        self.oversample = k.max(1);
        self
    }

    pub fn with_bias(mut self, bias: Vec<T>) -> Result<Self> {
        if bias.len() != self.w1.out_channels() {
            bail!(ShapeMismatch, "{} biases for {} output channels", bias.len(), self.w1.out_channels());
        }
        self.bias = bias;
        Ok(self)
    }

    /// Effective first-order weight `λ ∈ [0, 1]`.
    pub fn lambda(&self) -> T {
        self.mix.max(T::zero()).min(T::one())
    }

    pub fn in_channels(&self) -> usize {
        self.w1.in_channels()
    }

    pub fn out_channels(&self) -> usize {
        self.w1.out_channels()
    }

    pub fn kernel_bandwidth(&self) -> Bandwidth {
        self.w1.bandwidth()
    }
}

/// Grid on which the quadratic term is formed before projection to `out`, if any.
pub fn product_bandwidth(bk: Bandwidth, out: Bandwidth, oversample: usize) -> Option<Bandwidth> {
    let exact = 2 * bk.get() - 1;
    if oversample >= 2 && out.get() < exact {
        Some(Bandwidth::new(oversample * bk.get()).expect("positive"))
    } else {
        None
    }
}

/// Samples of `A ⊙ B` (or its projection) on the `out` grid.
pub(crate) fn product_on_grid<T: Real>(
    a: &So3Spectrum<T>,
    b: &So3Spectrum<T>,
    out: Bandwidth,
    oversample: usize,
) -> Vec<T> {
    match product_bandwidth(a.bandwidth(), out, oversample) {
        None => {
            let (x, y) = (so3_ft_inverse(out, a), so3_ft_inverse(out, b));
            x.iter().zip(&y).map(|(p, q)| *p * *q).collect()
        }
        Some(bp) => {
            let (x, y) = (so3_ft_inverse(bp, a), so3_ft_inverse(bp, b));
            let prod: Vec<T> = x.iter().zip(&y).map(|(p, q)| *p * *q).collect();
            let spec = so3_ft_forward_truncated(bp, &prod, out).expect("grid length matches");
            so3_ft_inverse(out, &spec)
        }
    }
}

fn combine<T: Real>(
    first: &[So3Spectrum<T>],
    a: &[So3Spectrum<T>],
    b: &[So3Spectrum<T>],
    lambda: T,
    bias: &[T],
    out: Bandwidth,
    oversample: usize,
) -> Result<So3Signal<T>> {
    let mut samples = Vec::with_capacity(first.len() * out.so3_len());
    for o in 0..first.len() {
        let lin = so3_ft_inverse(out, &first[o]);
        let quad = product_on_grid(&a[o], &b[o], out, oversample);
        samples.extend(lin.iter().zip(&quad).map(|(p, q)| lambda * *p + (T::one() - lambda) * *q + bias[o]));
    }
    So3Signal::new(out, first.len(), samples)
}

pub fn volterra2_s2_at<T: Real>(f: &S2Signal<T>, layer: &S2VolterraLayer<T>, out: Bandwidth) -> Result<So3Signal<T>> {
    let fs = f.spectra();
    let first = corr_s2_spectral(&fs, &layer.w1)?;
    let a = corr_s2_spectral(&fs, &layer.w2a)?;
    let b = corr_s2_spectral(&fs, &layer.w2b)?;
    combine(&first, &a, &b, layer.lambda(), &layer.bias, out, layer.oversample)
}

/// Second-order Volterra layer on S², output on the SO(3) grid at the input band limit.
pub fn volterra2_s2<T: Real>(f: &S2Signal<T>, layer: &S2VolterraLayer<T>) -> Result<So3Signal<T>> {
    volterra2_s2_at(f, layer, f.bandwidth())
}

pub fn volterra2_so3_at<T: Real>(f: &So3Signal<T>, layer: &So3VolterraLayer<T>, out: Bandwidth) -> Result<So3Signal<T>> {
    let fs = f.spectra();
    let first = corr_so3_spectral(&fs, &layer.w1)?;
    let a = corr_so3_spectral(&fs, &layer.w2a)?;
    let b = corr_so3_spectral(&fs, &layer.w2b)?;
    combine(&first, &a, &b, layer.lambda(), &layer.bias, out, layer.oversample)
}

pub fn volterra2_so3<T: Real>(f: &So3Signal<T>, layer: &So3VolterraLayer<T>) -> Result<So3Signal<T>> {
    volterra2_so3_at(f, layer, f.bandwidth())
}

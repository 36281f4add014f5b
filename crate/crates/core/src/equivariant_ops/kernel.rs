//! Spectrally parameterized kernels.
//!
//! A kernel for the channel pair `(i, o)` is the spectrum of a real function,
//! so only half of its coefficients are free. The real parameter layout per
//! degree `l` is:
//!
//! * S²: `Re ŵ_l^0`, then `(Re ŵ_l^m, Im ŵ_l^m)` for `m = 1..=l` (`2l+1` reals);
//! * SO(3): `Re ŵ^l_{00}`, then `(Re, Im)` of `ŵ^l_{mn}` for the half
//!   `m > 0` or `m = 0, n > 0`, in row-major order (`(2l+1)²` reals).
//!
//! Pairs are stored `[i][o]`.

use crate::error::{bail, Result};
use crate::harmonics::{sht_forward_truncated, so3_ft_forward_truncated, Bandwidth, S2Spectrum, So3Spectrum};
use crate::scalar::{parity, Cplx, Real};
use crate::signals::{S2Signal, So3Signal};
use rand::Rng;
use rand_distr::StandardNormal;

/// Real parameters of one S² kernel spectrum at band limit `bk`: `bk²`.
pub fn s2_param_len(bk: Bandwidth) -> usize {
    bk.s2_coeffs()
}

/// Real parameters of one SO(3) kernel spectrum at band limit `bk`: `Σ (2l+1)²`.
pub fn so3_param_len(bk: Bandwidth) -> usize {
    bk.so3_coeffs()
}

pub fn s2_spectrum_from_params<T: Real>(bk: Bandwidth, p: &[T]) -> S2Spectrum<T> {
    debug_assert_eq!(p.len(), s2_param_len(bk));
    let mut s = S2Spectrum::zeros(bk);
    let mut it = p.iter().copied();
    let mut next = || it.next().expect("parameter slice length checked");
    for l in 0..bk.get() {
        s.set(l, 0, Cplx::new(next(), T::zero()));
        for m in 1..=l as isize {
            let z = Cplx::new(next(), next());
            s.set(l, m, z);
            s.set(l, -m, z.conj() * parity::<T>(m));
        }
    }
    s
}

pub fn s2_params_from_spectrum<T: Real>(s: &S2Spectrum<T>) -> Vec<T> {
    let mut out = Vec::with_capacity(s2_param_len(s.bandwidth()));
    for l in 0..s.bandwidth().get() {
        out.push(s.get(l, 0).re);
        for m in 1..=l as isize {
            let z = s.get(l, m);
            out.push(z.re);
            out.push(z.im);
        }
    }
    out
}

/// Pull a gradient `G = ∂L/∂Re ŵ + i ∂L/∂Im ŵ` on the full spectrum back to
/// the real parameters.
pub fn s2_param_grad<T: Real>(g: &S2Spectrum<T>) -> Vec<T> {
    let mut out = Vec::with_capacity(s2_param_len(g.bandwidth()));
    for l in 0..g.bandwidth().get() {
        out.push(g.get(l, 0).re);
        for m in 1..=l as isize {
            let (gp, gm) = (g.get(l, m), g.get(l, -m));
            let s = parity::<T>(m);
            out.push(gp.re + s * gm.re);
            out.push(gp.im - s * gm.im);
        }
    }
    out
}

fn so3_free(m: isize, n: isize) -> bool {
    m > 0 || (m == 0 && n > 0)
}

pub fn so3_spectrum_from_params<T: Real>(bk: Bandwidth, p: &[T]) -> So3Spectrum<T> {
    debug_assert_eq!(p.len(), so3_param_len(bk));
    let mut s = So3Spectrum::zeros(bk);
    let mut it = p.iter().copied();
    let mut next = || it.next().expect("parameter slice length checked");
    for l in 0..bk.get() {
        let li = l as isize;
        let blk = s.block_mut(l);
        blk.set(0, 0, Cplx::new(next(), T::zero()));
        for m in -li..=li {
            for n in -li..=li {
                if so3_free(m, n) {
                    let z = Cplx::new(next(), next());
                    blk.set(m, n, z);
                    blk.set(-m, -n, z.conj() * parity::<T>(m - n));
                }
            }
        }
    }
    s
}

pub fn so3_params_from_spectrum<T: Real>(s: &So3Spectrum<T>) -> Vec<T> {
    let mut out = Vec::with_capacity(so3_param_len(s.bandwidth()));
    for (l, blk) in s.blocks().iter().enumerate() {
        let li = l as isize;
        out.push(blk.get(0, 0).re);
        for m in -li..=li {
            for n in -li..=li {
                if so3_free(m, n) {
                    let z = blk.get(m, n);
                    out.push(z.re);
                    out.push(z.im);
                }
            }
        }
    }
    out
}

pub fn so3_param_grad<T: Real>(g: &So3Spectrum<T>) -> Vec<T> {
    let mut out = Vec::with_capacity(so3_param_len(g.bandwidth()));
    for (l, blk) in g.blocks().iter().enumerate() {
        let li = l as isize;
        out.push(blk.get(0, 0).re);
        for m in -li..=li {
            for n in -li..=li {
                if so3_free(m, n) {
                    let (gp, gm) = (blk.get(m, n), blk.get(-m, -n));
                    let s = parity::<T>(m - n);
                    out.push(gp.re + s * gm.re);
                    out.push(gp.im - s * gm.im);
                }
            }
        }
    }
    out
}

macro_rules! kernel_type {
    ($name:ident, $spec:ident, $signal:ident, $plen:ident, $from:ident, $to:ident, $fwd:ident, $doc:literal) => {
        #[doc = $doc]
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name<T> {
            in_channels: usize,
            out_channels: usize,
            bandwidth: Bandwidth,
            spectra: Vec<$spec<T>>,
        }

        impl<T: Real> $name<T> {
            pub fn zeros(in_channels: usize, out_channels: usize, bandwidth: Bandwidth) -> Self {
                let spectra = vec![$spec::zeros(bandwidth); in_channels * out_channels];
                Self { in_channels, out_channels, bandwidth, spectra }
            }

            /// Spectra in `[i][o]` order, all at band limit `bandwidth`.
            pub fn from_spectra(in_channels: usize, out_channels: usize, spectra: Vec<$spec<T>>) -> Result<Self> {
                if in_channels == 0 || out_channels == 0 {
                    bail!(InvalidArgument, "kernel needs at least one input and one output channel");
                }
                if spectra.len() != in_channels * out_channels {
                    bail!(ShapeMismatch, "{} spectra for {in_channels}×{out_channels} channels", spectra.len());
                }
                let bandwidth = spectra[0].bandwidth();
                if spectra.iter().any(|s| s.bandwidth() != bandwidth) {
                    bail!(ShapeMismatch, "kernel spectra disagree on band limit");
                }
                Ok(Self { in_channels, out_channels, bandwidth, spectra })
            }

            pub fn param_len(in_channels: usize, out_channels: usize, bandwidth: Bandwidth) -> usize {
                in_channels * out_channels * $plen(bandwidth)
            }

            pub fn from_params(in_channels: usize, out_channels: usize, bandwidth: Bandwidth, p: &[T]) -> Result<Self> {
                let per = $plen(bandwidth);
                if p.len() != in_channels * out_channels * per {
                    bail!(ShapeMismatch, "expected {} kernel parameters, got {}", in_channels * out_channels * per, p.len());
                }
                let spectra = p.chunks(per).map(|c| $from(bandwidth, c)).collect();
                Self::from_spectra(in_channels, out_channels, spectra)
            }

            pub fn params(&self) -> Vec<T> {
                self.spectra.iter().flat_map($to).collect()
            }

            /// I.i.d. normal real parameters with standard deviation `std`.
            pub fn random<R: Rng + ?Sized>(
                in_channels: usize,
                out_channels: usize,
                bandwidth: Bandwidth,
                std: T,
                rng: &mut R,
            ) -> Self {
                let n = Self::param_len(in_channels, out_channels, bandwidth);
                let p: Vec<T> = (0..n).map(|_| T::lit(rng.sample::<f64, _>(StandardNormal)) * std).collect();
                Self::from_params(in_channels, out_channels, bandwidth, &p).expect("length computed above")
            }

            /// Project sampled kernel functions (channel `i·out + o`) to band limit `bandwidth`.
            pub fn from_signal(w: &$signal<T>, in_channels: usize, bandwidth: Bandwidth) -> Result<Self> {
                if in_channels == 0 || w.channels() % in_channels != 0 {
                    bail!(ShapeMismatch, "{} kernel channels do not split over {in_channels} inputs", w.channels());
                }
                if bandwidth > w.bandwidth() {
                    bail!(InvalidArgument, "kernel band limit {bandwidth} exceeds sampling {}", w.bandwidth());
                }
                let spectra = (0..w.channels())
                    .map(|c| $fwd(w.bandwidth(), w.channel(c), bandwidth))
                    .collect::<Result<Vec<_>>>()?;
                Self::from_spectra(in_channels, w.channels() / in_channels, spectra)
            }

            #[inline]
            pub fn in_channels(&self) -> usize {
                self.in_channels
            }

            #[inline]
            pub fn out_channels(&self) -> usize {
                self.out_channels
            }

            #[inline]
            pub fn bandwidth(&self) -> Bandwidth {
                self.bandwidth
            }

            #[inline]
            pub fn spectrum(&self, i: usize, o: usize) -> &$spec<T> {
                &self.spectra[i * self.out_channels + o]
            }

            pub fn spectrum_mut(&mut self, i: usize, o: usize) -> &mut $spec<T> {
                &mut self.spectra[i * self.out_channels + o]
            }

            pub fn spectra(&self) -> &[$spec<T>] {
                &self.spectra
            }

            /// Kernel with every coefficient multiplied by `s`.
            pub fn scaled(&self, s: T) -> Self {
                let mut out = self.clone();
                for sp in &mut out.spectra {
                    sp.scale_in_place(s);
                }
                out
            }
        }
    };
}

kernel_type!(
    S2Kernel,
    S2Spectrum,
    S2Signal,
    s2_param_len,
    s2_spectrum_from_params,
    s2_params_from_spectrum,
    sht_forward_truncated,
    "Bank of S² kernels, one spectrum per (input, output) channel pair."
);

kernel_type!(
    So3Kernel,
    So3Spectrum,
    So3Signal,
    so3_param_len,
    so3_spectrum_from_params,
    so3_params_from_spectrum,
    so3_ft_forward_truncated,
    "Bank of SO(3) kernels, one spectrum per (input, output) channel pair."
);

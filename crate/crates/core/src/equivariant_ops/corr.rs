//! Correlations computed by the convolution theorem.
//!
//! With `f̂ = ∫ f conj(Y)` and `f̂ = ∫ f conj(D) dμ`, the correlation
//! `(f ⋆ w)(g) = ∫ f(x) w(g⁻¹x) dx` has Wigner blocks
//!
//! * S² → SO(3): `ô^l = f̂^l (ŵ^l)† / (2l+1)` (outer product of degree vectors);
//! * SO(3) → SO(3): `ô^l = f̂^l (ŵ^l)†`.
//!
//! Output channel `o` sums over input channels `i` of `f_i ⋆ w_{io}`.

use super::kernel::{S2Kernel, So3Kernel};
use crate::error::{bail, Result};
use crate::harmonics::{Bandwidth, S2Spectrum, So3Spectrum, SquareMatrix};
use crate::scalar::{Cplx, Real};
use crate::signals::{S2Signal, So3Signal};
use num_traits::Zero;

fn degree_scale<T: Real>(l: usize) -> T {
    T::one() / T::from_usize_lossy(2 * l + 1)
}

/// `Σ_i f̂_i ŵ_{io}† / (2l+1)` for each output channel; band limit `B_k`.
pub fn corr_s2_spectral<T: Real>(f: &[S2Spectrum<T>], w: &S2Kernel<T>) -> Result<Vec<So3Spectrum<T>>> {
    if f.len() != w.in_channels() {
        bail!(ShapeMismatch, "{} input channels for a kernel expecting {}", f.len(), w.in_channels());
    }
    let bk = w.bandwidth();
    if let Some(s) = f.iter().find(|s| s.bandwidth() < bk) {
        bail!(ShapeMismatch, "signal band limit {} below kernel band limit {bk}", s.bandwidth());
    }
    let mut out = vec![So3Spectrum::zeros(bk); w.out_channels()];
    for (o, dst) in out.iter_mut().enumerate() {
        for (i, fi) in f.iter().enumerate() {
            let wi = w.spectrum(i, o);
            for l in 0..bk.get() {
                let s = degree_scale::<T>(l);
                let (fv, wv) = (fi.degree(l), wi.degree(l));
                let blk = dst.block_mut(l);
                let d = 2 * l + 1;
                let data = blk.as_mut_slice();
                for r in 0..d {
                    let a = fv[r] * s;
                    for c in 0..d {
                        data[r * d + c] += a * wv[c].conj();
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Gradients of [`corr_s2_spectral`]: returns `(G_f̂ per input, G_ŵ per pair)`.
pub fn corr_s2_spectral_backward<T: Real>(
    f: &[S2Spectrum<T>],
    w: &S2Kernel<T>,
    g_out: &[So3Spectrum<T>],
) -> (Vec<S2Spectrum<T>>, Vec<S2Spectrum<T>>) {
    let bk = w.bandwidth();
    let mut gf: Vec<S2Spectrum<T>> = vec![S2Spectrum::zeros(bk); f.len()];
    let mut gw: Vec<S2Spectrum<T>> = vec![S2Spectrum::zeros(bk); f.len() * w.out_channels()];
    for (i, fi) in f.iter().enumerate() {
        for (o, go) in g_out.iter().enumerate() {
            let wi = w.spectrum(i, o);
            let gwi = &mut gw[i * w.out_channels() + o];
            for l in 0..bk.get() {
                let s = degree_scale::<T>(l);
                let d = 2 * l + 1;
                let gb = go.block(l).as_slice();
                let (fv, wv) = (fi.degree(l), wi.degree(l));
                // G_f̂ = G_ô ŵ / s
                let gfl = gf[i].degree_mut(l);
                for r in 0..d {
                    let mut acc = Cplx::zero();
                    for c in 0..d {
                        acc += gb[r * d + c] * wv[c];
                    }
                    gfl[r] += acc * s;
                }
                // G_ŵ = G_ô† f̂ / s
                let gwl = gwi.degree_mut(l);
                for c in 0..d {
                    let mut acc = Cplx::zero();
                    for r in 0..d {
                        acc += gb[r * d + c].conj() * fv[r];
                    }
                    gwl[c] += acc * s;
                }
            }
        }
    }
    (gf, gw)
}

/// `Σ_i f̂_i ŵ_{io}†` for each output channel; band limit `B_k`.
pub fn corr_so3_spectral<T: Real>(f: &[So3Spectrum<T>], w: &So3Kernel<T>) -> Result<Vec<So3Spectrum<T>>> {
    if f.len() != w.in_channels() {
        bail!(ShapeMismatch, "{} input channels for a kernel expecting {}", f.len(), w.in_channels());
    }
    let bk = w.bandwidth();
    if let Some(s) = f.iter().find(|s| s.bandwidth() < bk) {
        bail!(ShapeMismatch, "signal band limit {} below kernel band limit {bk}", s.bandwidth());
    }
    let mut out = vec![So3Spectrum::zeros(bk); w.out_channels()];
    for (o, dst) in out.iter_mut().enumerate() {
        for (i, fi) in f.iter().enumerate() {
            let wi = w.spectrum(i, o);
            for l in 0..bk.get() {
                accumulate_mul_adjoint(dst.block_mut(l), fi.block(l), wi.block(l));
            }
        }
    }
    Ok(out)
}

/// `dst += a · b†`.
fn accumulate_mul_adjoint<T: Real>(dst: &mut SquareMatrix<Cplx<T>>, a: &SquareMatrix<Cplx<T>>, b: &SquareMatrix<Cplx<T>>) {
    let d = a.dim();
    let (a, b) = (a.as_slice(), b.as_slice());
    let out = dst.as_mut_slice();
    for r in 0..d {
        for c in 0..d {
            let mut acc = Cplx::zero();
            for k in 0..d {
                acc += a[r * d + k] * b[c * d + k].conj();
            }
            out[r * d + c] += acc;
        }
    }
}

/// `dst += a · b`.
fn accumulate_mul<T: Real>(dst: &mut SquareMatrix<Cplx<T>>, a: &SquareMatrix<Cplx<T>>, b: &SquareMatrix<Cplx<T>>) {
    let d = a.dim();
    let (a, b) = (a.as_slice(), b.as_slice());
    let out = dst.as_mut_slice();
    for r in 0..d {
        for k in 0..d {
            let x = a[r * d + k];
            for c in 0..d {
                out[r * d + c] += x * b[k * d + c];
            }
        }
    }
}

/// `dst += a† · b`.
fn accumulate_adjoint_mul<T: Real>(dst: &mut SquareMatrix<Cplx<T>>, a: &SquareMatrix<Cplx<T>>, b: &SquareMatrix<Cplx<T>>) {
    let d = a.dim();
    let (a, b) = (a.as_slice(), b.as_slice());
    let out = dst.as_mut_slice();
    for k in 0..d {
        for r in 0..d {
            let x = a[k * d + r].conj();
            for c in 0..d {
                out[r * d + c] += x * b[k * d + c];
            }
        }
    }
}

/// Gradients of [`corr_so3_spectral`]: `G_f̂ = Σ_o G_ô ŵ`, `G_ŵ = G_ô† f̂`.
pub fn corr_so3_spectral_backward<T: Real>(
    f: &[So3Spectrum<T>],
    w: &So3Kernel<T>,
    g_out: &[So3Spectrum<T>],
) -> (Vec<So3Spectrum<T>>, Vec<So3Spectrum<T>>) {
    let bk = w.bandwidth();
    let mut gf = vec![So3Spectrum::zeros(bk); f.len()];
    let mut gw = vec![So3Spectrum::zeros(bk); f.len() * w.out_channels()];
    for (i, fi) in f.iter().enumerate() {
        for (o, go) in g_out.iter().enumerate() {
            let wi = w.spectrum(i, o);
            for l in 0..bk.get() {
                accumulate_mul(gf[i].block_mut(l), go.block(l), wi.block(l));
                accumulate_adjoint_mul(gw[i * w.out_channels() + o].block_mut(l), go.block(l), fi.block(l));
            }
        }
    }
    (gf, gw)
}

/// `f ⋆ w` on S², materialized on the SO(3) grid of band limit `out`.
pub fn corr_s2_at<T: Real>(f: &S2Signal<T>, w: &S2Kernel<T>, out: Bandwidth) -> Result<So3Signal<T>> {
    let spectra = corr_s2_spectral(&f.spectra(), w)?;
    So3Signal::from_spectra(out, &spectra)
}

/// `f ⋆ w` on S², on the SO(3) grid at the input's band limit.
pub fn corr_s2<T: Real>(f: &S2Signal<T>, w: &S2Kernel<T>) -> Result<So3Signal<T>> {
    corr_s2_at(f, w, f.bandwidth())
}

pub fn corr_so3_at<T: Real>(f: &So3Signal<T>, w: &So3Kernel<T>, out: Bandwidth) -> Result<So3Signal<T>> {
    let spectra = corr_so3_spectral(&f.spectra(), w)?;
    So3Signal::from_spectra(out, &spectra)
}

/// `f ⋆ w` on SO(3), on the grid at the input's band limit.
pub fn corr_so3<T: Real>(f: &So3Signal<T>, w: &So3Kernel<T>) -> Result<So3Signal<T>> {
    corr_so3_at(f, w, f.bandwidth())
}

//! Spherical harmonic transform on the `2B×2B` Driscoll–Healy grid.
//!
//! Samples are θ-major: index `j·2B + k` holds `f(θ_j, φ_k)`.

use super::{plan, Bandwidth, Plan, S2Spectrum};
use crate::error::{bail, Result};
use crate::scalar::{Cplx, Real};
use num_traits::Zero;

#[inline]
fn wrap(m: isize, n: usize) -> usize {
    m.rem_euclid(n as isize) as usize
}

fn c_l<T: Real>(l: usize) -> T {
    (T::from_usize_lossy(2 * l + 1) / (T::lit(4.0) * T::PI())).sqrt()
}

/// `out_l^m = c_l Σ_j row_w[j] d^l_{m0}(θ_j) Σ_k y_{jk} e^{imφ_k}` for `l < out_bw`.
pub(crate) fn analyze<T: Real>(p: &Plan<T>, y: &[Cplx<T>], row_w: &[T], out_bw: Bandwidth) -> S2Spectrum<T> {
    let n = p.bandwidth().nodes();
    let bs = out_bw.get();
    let mut out = S2Spectrum::zeros(out_bw);
    let mut row = vec![Cplx::zero(); n];
    for j in 0..n {
        row.copy_from_slice(&y[j * n..(j + 1) * n]);
        p.dft(&mut row, true);
        for l in 0..bs {
            let d = p.wigner_d(j, l);
            let scale = row_w[j] * c_l::<T>(l);
            for m in -(l as isize)..=(l as isize) {
                let v = row[wrap(m, n)] * (scale * d.get(m, 0));
                let idx = S2Spectrum::<T>::index(l, m);
                out.coeffs_mut()[idx] = out.coeffs()[idx] + v;
            }
        }
    }
    out
}

/// `y_{jk} = row_s[j] Σ_m e^{−imφ_k} Σ_l c_l f̂_l^m d^l_{m0}(θ_j)`.
pub(crate) fn synthesize<T: Real>(p: &Plan<T>, spec: &S2Spectrum<T>, row_s: Option<&[T]>) -> Vec<Cplx<T>> {
    let n = p.bandwidth().nodes();
    let bs = spec.bandwidth().get().min(p.bandwidth().get());
    let mut out = vec![Cplx::zero(); n * n];
    let mut row = vec![Cplx::zero(); n];
    for j in 0..n {
        row.iter_mut().for_each(|z| *z = Cplx::zero());
        for l in 0..bs {
            let d = p.wigner_d(j, l);
            let cl = c_l::<T>(l);
            for m in -(l as isize)..=(l as isize) {
                let k = wrap(m, n);
                row[k] = row[k] + spec.get(l, m) * (cl * d.get(m, 0));
            }
        }
        p.dft(&mut row, false);
        let s = row_s.map_or(T::one(), |r| r[j]);
        for (dst, src) in out[j * n..(j + 1) * n].iter_mut().zip(&row) {
            *dst = *src * s;
        }
    }
    out
}

fn check_len(b: Bandwidth, len: usize) -> Result<()> {
    if len != b.s2_len() {
        bail!(ShapeMismatch, "S² grid at {b} needs {} samples, got {len}", b.s2_len());
    }
    Ok(())
}

fn forward_row_weights<T: Real>(p: &Plan<T>) -> Vec<T> {
    (0..p.bandwidth().nodes()).map(|j| p.s2_cell(j)).collect()
}

/// Forward transform `f̂_l^m = ∫ f conj(Y_l^m) dω`, exact for band-limited `f`.
pub fn sht_forward<T: Real>(b: Bandwidth, samples: &[T]) -> Result<S2Spectrum<T>> {
    sht_forward_truncated(b, samples, b)
}

/// Forward transform keeping only degrees below `out_bw ≤ b`.
pub fn sht_forward_truncated<T: Real>(b: Bandwidth, samples: &[T], out_bw: Bandwidth) -> Result<S2Spectrum<T>> {
    check_len(b, samples.len())?;
    if out_bw > b {
        bail!(InvalidArgument, "cannot analyze {b} samples up to {out_bw}");
    }
    let p = plan::<T>(b);
    let y: Vec<Cplx<T>> = samples.iter().map(|&x| Cplx::new(x, T::zero())).collect();
    Ok(analyze(&p, &y, &forward_row_weights(&p), out_bw))
}

/// Inverse transform sampled on the grid of band limit `b` (≥ the spectrum's).
/// Returns real parts; the imaginary residue vanishes for conjugate-symmetric spectra.
pub fn sht_inverse<T: Real>(b: Bandwidth, spec: &S2Spectrum<T>) -> Vec<T> {
    sht_inverse_complex(b, spec).into_iter().map(|z| z.re).collect()
}

/// Inverse transform without discarding imaginary parts.
pub fn sht_inverse_complex<T: Real>(b: Bandwidth, spec: &S2Spectrum<T>) -> Vec<Cplx<T>> {
    let p = plan::<T>(b);
    synthesize(&p, spec, None)
}

/// Real part of the adjoint of [`sht_forward_truncated`]: maps a spectral
/// gradient to a gradient on grid samples.
pub fn sht_adjoint_forward<T: Real>(b: Bandwidth, grad: &S2Spectrum<T>) -> Vec<T> {
    let p = plan::<T>(b);
    let w = forward_row_weights(&p);
    synthesize(&p, grad, Some(&w)).into_iter().map(|z| z.re).collect()
}

/// Adjoint of [`sht_inverse_complex`] applied to real grid values, truncated to `out_bw`.
pub fn sht_adjoint_inverse<T: Real>(b: Bandwidth, y: &[T], out_bw: Bandwidth) -> Result<S2Spectrum<T>> {
    check_len(b, y.len())?;
    let p = plan::<T>(b);
    let ones = vec![T::one(); b.nodes()];
    let yc: Vec<Cplx<T>> = y.iter().map(|&x| Cplx::new(x, T::zero())).collect();
    Ok(analyze(&p, &yc, &ones, out_bw.min(b)))
}

//! Fourier transform on SO(3) over the `2B×2B×2B` ZYZ Euler grid.
//!
//! Samples are stored `[α][β][γ]`: index `(i·2B + j)·2B + k` holds
//! `f(α_i, β_j, γ_k)` with `α_i = πi/B`, `β_j = π(2j+1)/(4B)`, `γ_k = πk/B`.
//! Separation of variables: 2-D FFT over `(α, γ)` per β node, then a
//! contraction against `d^l_{mn}(β_j)`; `O(B⁴)` overall.

use super::{plan, Bandwidth, Plan, So3Spectrum};
use crate::error::{bail, Result};
use crate::scalar::{Cplx, Real};
use num_traits::Zero;

#[inline]
fn wrap(m: isize, n: usize) -> usize {
    m.rem_euclid(n as isize) as usize
}

/// `out^l_{mn} = deg_w(l) Σ_j row_w[j] d^l_{mn}(β_j) Σ_{ik} y_{ijk} e^{imα_i} e^{inγ_k}`.
pub(crate) fn analyze<T: Real>(
    p: &Plan<T>,
    y: &[Cplx<T>],
    row_w: &[T],
    weight_by_degree: bool,
    out_bw: Bandwidth,
) -> So3Spectrum<T> {
    let n = p.bandwidth().nodes();
    let bs = out_bw.get();
    let mut out = So3Spectrum::zeros(out_bw);
    let mut slab = vec![Cplx::zero(); n * n];
    for j in 0..n {
        for i in 0..n {
            for k in 0..n {
                slab[i * n + k] = y[(i * n + j) * n + k];
            }
        }
        p.dft2(&mut slab, true);
        for l in 0..bs {
            let d = p.wigner_d(j, l);
            let mut scale = row_w[j];
            if weight_by_degree {
                scale = scale * T::from_usize_lossy(2 * l + 1);
            }
            let li = l as isize;
            let blk = out.block_mut(l);
            for m in -li..=li {
                let r = wrap(m, n) * n;
                for nn in -li..=li {
                    let v = slab[r + wrap(nn, n)] * (scale * d.get(m, nn));
                    blk.set(m, nn, blk.get(m, nn) + v);
                }
            }
        }
    }
    out
}

/// `y_{ijk} = row_s[j] Σ_{mn} e^{−imα_i} e^{−inγ_k} Σ_l deg_w(l) ĉ^l_{mn} d^l_{mn}(β_j)`.
pub(crate) fn synthesize<T: Real>(
    p: &Plan<T>,
    spec: &So3Spectrum<T>,
    weight_by_degree: bool,
    row_s: Option<&[T]>,
) -> Vec<Cplx<T>> {
    let n = p.bandwidth().nodes();
    let bs = spec.bandwidth().get().min(p.bandwidth().get());
    let mut out = vec![Cplx::zero(); n * n * n];
    let mut slab = vec![Cplx::zero(); n * n];
    for j in 0..n {
        slab.iter_mut().for_each(|z| *z = Cplx::zero());
        for l in 0..bs {
            let d = p.wigner_d(j, l);
            let w = if weight_by_degree { T::from_usize_lossy(2 * l + 1) } else { T::one() };
            let li = l as isize;
            let blk = spec.block(l);
            for m in -li..=li {
                let r = wrap(m, n) * n;
                for nn in -li..=li {
                    let c = r + wrap(nn, n);
                    slab[c] = slab[c] + blk.get(m, nn) * (w * d.get(m, nn));
                }
            }
        }
        p.dft2(&mut slab, false);
        let s = row_s.map_or(T::one(), |r| r[j]);
        for i in 0..n {
            for k in 0..n {
                out[(i * n + j) * n + k] = slab[i * n + k] * s;
            }
        }
    }
    out
}

fn check_len(b: Bandwidth, len: usize) -> Result<()> {
    if len != b.so3_len() {
        bail!(ShapeMismatch, "SO(3) grid at {b} needs {} samples, got {len}", b.so3_len());
    }
    Ok(())
}

fn forward_row_weights<T: Real>(p: &Plan<T>) -> Vec<T> {
    (0..p.bandwidth().nodes()).map(|j| p.so3_cell(j)).collect()
}

/// Forward transform `f̂^l_{mn} = ∫ f conj(D^l_{mn}) dμ`, exact for band-limited `f`.
pub fn so3_ft_forward<T: Real>(b: Bandwidth, samples: &[T]) -> Result<So3Spectrum<T>> {
    so3_ft_forward_truncated(b, samples, b)
}

/// Forward transform keeping only degrees below `out_bw ≤ b`.
pub fn so3_ft_forward_truncated<T: Real>(b: Bandwidth, samples: &[T], out_bw: Bandwidth) -> Result<So3Spectrum<T>> {
    check_len(b, samples.len())?;
    if out_bw > b {
        bail!(InvalidArgument, "cannot analyze {b} samples up to {out_bw}");
    }
    let p = plan::<T>(b);
    let y: Vec<Cplx<T>> = samples.iter().map(|&x| Cplx::new(x, T::zero())).collect();
    Ok(analyze(&p, &y, &forward_row_weights(&p), false, out_bw))
}

/// Inverse transform on the grid of band limit `b` (≥ the spectrum's); real parts.
pub fn so3_ft_inverse<T: Real>(b: Bandwidth, spec: &So3Spectrum<T>) -> Vec<T> {
    so3_ft_inverse_complex(b, spec).into_iter().map(|z| z.re).collect()
}

pub fn so3_ft_inverse_complex<T: Real>(b: Bandwidth, spec: &So3Spectrum<T>) -> Vec<Cplx<T>> {
    let p = plan::<T>(b);
    synthesize(&p, spec, true, None)
}

/// Real part of the adjoint of [`so3_ft_forward_truncated`].
pub fn so3_adjoint_forward<T: Real>(b: Bandwidth, grad: &So3Spectrum<T>) -> Vec<T> {
    let p = plan::<T>(b);
    let w = forward_row_weights(&p);
    synthesize(&p, grad, false, Some(&w)).into_iter().map(|z| z.re).collect()
}

/// Adjoint of [`so3_ft_inverse_complex`] applied to real grid values.
pub fn so3_adjoint_inverse<T: Real>(b: Bandwidth, y: &[T], out_bw: Bandwidth) -> Result<So3Spectrum<T>> {
    check_len(b, y.len())?;
    let p = plan::<T>(b);
    let ones = vec![T::one(); b.nodes()];
    let yc: Vec<Cplx<T>> = y.iter().map(|&x| Cplx::new(x, T::zero())).collect();
    Ok(analyze(&p, &yc, &ones, true, out_bw.min(b)))
}

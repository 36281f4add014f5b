//! Literal quadrature of the correlation integrals, used as oracles.
//!
//! Each output value rotates the kernel (spectrally, so exactly), multiplies
//! it with the input on the input grid and integrates. Costs grow like
//! `|grid| · |rotations|`, so band limits are capped unless forced.

use super::kernel::{S2Kernel, So3Kernel};
use crate::error::{bail, Result};
use crate::harmonics::{plan, sht_inverse, so3_ft_inverse, Bandwidth};
use crate::scalar::Real;
use crate::signals::{rotate_s2_spectrum, rotate_so3_spectrum, Rotation, S2Signal, So3Signal};

/// Largest band limit the first-order oracles accept without `force`.
pub const BRUTEFORCE_MAX_B: usize = 6;
/// Largest band limit the double-integral oracle accepts without `force`.
pub const VOLTERRA_BRUTEFORCE_MAX_B: usize = 3;

fn guard(b: Bandwidth, max: usize, force: bool) -> Result<()> {
    if b.get() > max && !force {
        bail!(CostGuard, "brute-force oracle refuses {b} (limit B = {max}); pass force to override");
    }
    Ok(())
}

fn check_kernel(b: Bandwidth, bk: Bandwidth, channels: usize, in_channels: usize) -> Result<()> {
    if bk > b {
        bail!(ShapeMismatch, "kernel band limit {bk} exceeds signal {b}");
    }
    if channels != in_channels {
        bail!(ShapeMismatch, "signal has {channels} channels, kernel expects {in_channels}");
    }
    Ok(())
}

fn s2_weights<T: Real>(b: Bandwidth) -> Vec<T> {
    let p = plan::<T>(b);
    (0..b.s2_len()).map(|i| p.s2_cell(i / b.nodes())).collect()
}

fn so3_weights<T: Real>(b: Bandwidth) -> Vec<T> {
    let p = plan::<T>(b);
    let n = b.nodes();
    (0..b.so3_len()).map(|i| p.so3_cell((i / n) % n)).collect()
}

/// Samples of `g·w_{io}` on the input grid, indexed `[i]`, for one output channel.
fn rotated_s2_kernels<T: Real>(w: &S2Kernel<T>, o: usize, g: &Rotation, b: Bandwidth) -> Vec<Vec<T>> {
    (0..w.in_channels())
        .map(|i| sht_inverse(b, &rotate_s2_spectrum(w.spectrum(i, o), g)))
        .collect()
}

fn rotated_so3_kernels<T: Real>(w: &So3Kernel<T>, o: usize, g: &Rotation, b: Bandwidth) -> Vec<Vec<T>> {
    (0..w.in_channels())
        .map(|i| so3_ft_inverse(b, &rotate_so3_spectrum(w.spectrum(i, o), g)))
        .collect()
}

fn weighted_dot<T: Real>(a: &[T], b: &[T], w: &[T]) -> T {
    a.iter().zip(b).zip(w).map(|((x, y), q)| *x * *y * *q).sum()
}

/// `Σ_i ∫_{S²} f_i(x) (g·w_{io})(x) dω` for each output channel `o` and each `g`,
/// laid out `[o][g]`.
pub fn corr_s2_bruteforce<T: Real>(f: &S2Signal<T>, w: &S2Kernel<T>, out: &[Rotation], force: bool) -> Result<Vec<T>> {
    let b = f.bandwidth();
    guard(b, BRUTEFORCE_MAX_B, force)?;
    check_kernel(b, w.bandwidth(), f.channels(), w.in_channels())?;
    let q = s2_weights::<T>(b);
    let mut res = Vec::with_capacity(w.out_channels() * out.len());
    for o in 0..w.out_channels() {
        for g in out {
            let ws = rotated_s2_kernels(w, o, g, b);
            res.push((0..f.channels()).map(|i| weighted_dot(f.channel(i), &ws[i], &q)).sum());
        }
    }
    Ok(res)
}

/// `Σ_i ∫_{SO(3)} f_i(h) (g·w_{io})(h) dμ`, laid out `[o][g]`.
pub fn corr_so3_bruteforce<T: Real>(f: &So3Signal<T>, w: &So3Kernel<T>, out: &[Rotation], force: bool) -> Result<Vec<T>> {
    let b = f.bandwidth();
    guard(b, BRUTEFORCE_MAX_B, force)?;
    check_kernel(b, w.bandwidth(), f.channels(), w.in_channels())?;
    let q = so3_weights::<T>(b);
    let mut res = Vec::with_capacity(w.out_channels() * out.len());
    for o in 0..w.out_channels() {
        for g in out {
            let ws = rotated_so3_kernels(w, o, g, b);
            res.push((0..f.channels()).map(|i| weighted_dot(f.channel(i), &ws[i], &q)).sum());
        }
    }
    Ok(res)
}

/// Kernels of the separable second-order term, in either domain.
pub enum SeparablePair<'a, T> {
    S2(&'a S2Kernel<T>, &'a S2Kernel<T>),
    So3(&'a So3Kernel<T>, &'a So3Kernel<T>),
}

/// Samples `f` on its grid (channel-major) with matching quadrature weights.
pub enum SampledInput<'a, T> {
    S2(&'a S2Signal<T>),
    So3(&'a So3Signal<T>),
}

/// The literal second-order Volterra term
/// `Σ_{ij} ∬ f_i(x) f_j(y) (g·w₂)_{ijo}(x, y) dx dy` with
/// `w₂(x, y) = w̃_{io}(x) w̄_{jo}(y)`, laid out `[o][g]`.
///
/// The double sum runs over every pair of grid points; no factorization is used.
pub fn volterra2_bruteforce<T: Real>(
    f: SampledInput<'_, T>,
    pair: SeparablePair<'_, T>,
    out: &[Rotation],
    force: bool,
) -> Result<Vec<T>> {
    let (b, channels, samples, q) = match f {
        SampledInput::S2(s) => (s.bandwidth(), s.channels(), s.samples(), s2_weights::<T>(s.bandwidth())),
        SampledInput::So3(s) => (s.bandwidth(), s.channels(), s.samples(), so3_weights::<T>(s.bandwidth())),
    };
    guard(b, VOLTERRA_BRUTEFORCE_MAX_B, force)?;
    let (c_out, c_in) = match &pair {
        SeparablePair::S2(a, c) => {
            check_kernel(b, a.bandwidth(), channels, a.in_channels())?;
            check_kernel(b, c.bandwidth(), channels, c.in_channels())?;
            if a.out_channels() != c.out_channels() {
                bail!(ShapeMismatch, "kernel pair disagrees on output channels");
            }
            (a.out_channels(), a.in_channels())
        }
        SeparablePair::So3(a, c) => {
            check_kernel(b, a.bandwidth(), channels, a.in_channels())?;
            check_kernel(b, c.bandwidth(), channels, c.in_channels())?;
            if a.out_channels() != c.out_channels() {
                bail!(ShapeMismatch, "kernel pair disagrees on output channels");
            }
            (a.out_channels(), a.in_channels())
        }
    };
    let n = q.len();
    let mut res = Vec::with_capacity(c_out * out.len());
    for o in 0..c_out {
        for g in out {
            let (wa, wb) = match &pair {
                SeparablePair::S2(a, c) => (rotated_s2_kernels(a, o, g, b), rotated_s2_kernels(c, o, g, b)),
                SeparablePair::So3(a, c) => (rotated_so3_kernels(a, o, g, b), rotated_so3_kernels(c, o, g, b)),
            };
            let mut acc = T::zero();
            for i in 0..c_in {
                let fi = &samples[i * n..(i + 1) * n];
                for x in 0..n {
                    let left = fi[x] * wa[i][x] * q[x];
                    let mut inner = T::zero();
                    for j in 0..c_in {
                        let fj = &samples[j * n..(j + 1) * n];
                        for y in 0..n {
                            inner += fj[y] * wb[j][y] * q[y];
                        }
                    }
                    acc += left * inner;
                }
            }
            res.push(acc);
        }
    }
    Ok(res)
}

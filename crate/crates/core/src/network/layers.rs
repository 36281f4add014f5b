//! Batched layer ops recorded on a [`Tape`] with hand-written adjoints.
//!
//! Activations are flat `[batch][channel][grid]` buffers. Spectral
//! intermediates are cached in the adjoint closures.

use super::tape::{Tape, Var};
use crate::equivariant_ops::{
    corr_s2_spectral, corr_s2_spectral_backward, corr_so3_spectral, corr_so3_spectral_backward, product_bandwidth,
    s2_param_grad, s2_spectrum_from_params, so3_param_grad, so3_spectrum_from_params, S2Kernel, So3Kernel,
};
use crate::error::{bail, Result};
use crate::harmonics::{
    plan, sht_adjoint_forward, sht_forward_truncated, so3_adjoint_forward, so3_adjoint_inverse, so3_ft_forward_truncated,
    so3_ft_inverse, Bandwidth, S2Spectrum, So3Spectrum,
};
use crate::scalar::Real;
use crate::signals::{Domain, S2, So3};
use rayon::prelude::*;
use std::sync::Arc;

/// Domain-specific pieces of a correlation layer.
pub(crate) trait InputSpace<T: Real>: Domain {
    type Spec: Clone + Send + Sync;
    type Kernel: Send + Sync;
    fn analyze(b: Bandwidth, x: &[T], bk: Bandwidth) -> Self::Spec;
    fn analyze_adjoint(b: Bandwidth, g: &Self::Spec) -> Vec<T>;
    fn kernel(c_in: usize, c_out: usize, bk: Bandwidth, p: &[T]) -> Self::Kernel;
    fn param_len(bk: Bandwidth) -> usize;
    fn corr(f: &[Self::Spec], w: &Self::Kernel) -> Vec<So3Spectrum<T>>;
    fn corr_backward(f: &[Self::Spec], w: &Self::Kernel, g: &[So3Spectrum<T>]) -> (Vec<Self::Spec>, Vec<Self::Spec>);
    fn param_grad(g: &Self::Spec) -> Vec<T>;
    fn accumulate(dst: &mut Self::Spec, src: &Self::Spec);
}

impl<T: Real> InputSpace<T> for S2 {
    type Spec = S2Spectrum<T>;
    type Kernel = S2Kernel<T>;
    fn analyze(b: Bandwidth, x: &[T], bk: Bandwidth) -> Self::Spec {
        sht_forward_truncated(b, x, bk).expect("layer shapes validated")
    }
    fn analyze_adjoint(b: Bandwidth, g: &Self::Spec) -> Vec<T> {
        sht_adjoint_forward(b, g)
    }
    fn kernel(c_in: usize, c_out: usize, bk: Bandwidth, p: &[T]) -> Self::Kernel {
        let per = <Self as InputSpace<T>>::param_len(bk);
        S2Kernel::from_spectra(c_in, c_out, p.chunks(per).map(|c| s2_spectrum_from_params(bk, c)).collect())
            .expect("parameter block sized by the spec")
    }
    fn param_len(bk: Bandwidth) -> usize {
        bk.s2_coeffs()
    }
    fn corr(f: &[Self::Spec], w: &Self::Kernel) -> Vec<So3Spectrum<T>> {
        corr_s2_spectral(f, w).expect("layer shapes validated")
    }
    fn corr_backward(f: &[Self::Spec], w: &Self::Kernel, g: &[So3Spectrum<T>]) -> (Vec<Self::Spec>, Vec<Self::Spec>) {
        corr_s2_spectral_backward(f, w, g)
    }
    fn param_grad(g: &Self::Spec) -> Vec<T> {
        s2_param_grad(g)
    }
    fn accumulate(dst: &mut Self::Spec, src: &Self::Spec) {
        dst.add_scaled(src, T::one());
    }
}

impl<T: Real> InputSpace<T> for So3 {
    type Spec = So3Spectrum<T>;
    type Kernel = So3Kernel<T>;
    fn analyze(b: Bandwidth, x: &[T], bk: Bandwidth) -> Self::Spec {
        so3_ft_forward_truncated(b, x, bk).expect("layer shapes validated")
    }
    fn analyze_adjoint(b: Bandwidth, g: &Self::Spec) -> Vec<T> {
        so3_adjoint_forward(b, g)
    }
    fn kernel(c_in: usize, c_out: usize, bk: Bandwidth, p: &[T]) -> Self::Kernel {
        let per = <Self as InputSpace<T>>::param_len(bk);
        So3Kernel::from_spectra(c_in, c_out, p.chunks(per).map(|c| so3_spectrum_from_params(bk, c)).collect())
            .expect("parameter block sized by the spec")
    }
    fn param_len(bk: Bandwidth) -> usize {
        bk.so3_coeffs()
    }
    fn corr(f: &[Self::Spec], w: &Self::Kernel) -> Vec<So3Spectrum<T>> {
        corr_so3_spectral(f, w).expect("layer shapes validated")
    }
    fn corr_backward(f: &[Self::Spec], w: &Self::Kernel, g: &[So3Spectrum<T>]) -> (Vec<Self::Spec>, Vec<Self::Spec>) {
        corr_so3_spectral_backward(f, w, g)
    }
    fn param_grad(g: &Self::Spec) -> Vec<T> {
        so3_param_grad(g)
    }
    fn accumulate(dst: &mut Self::Spec, src: &Self::Spec) {
        dst.add_scaled(src, T::one());
    }
}

/// Static shape of a second-order correlation layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corr2Shape {
    pub batch: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub in_bandwidth: Bandwidth,
    pub out_bandwidth: Bandwidth,
    pub kernel_bandwidth: Bandwidth,
    pub oversample: usize,
}

/// Parameters of one Corr₂ layer on the tape. `second` is `(w̃₂, w̄₂, mix)`;
/// without it the layer is first order only (`λ = 1`).
#[derive(Debug, Clone, Copy)]
pub struct Corr2Params {
    pub w1: Var,
    pub second: Option<(Var, Var, Var)>,
    pub bias: Var,
}

fn elementwise<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(x, y)| *x * *y).collect()
}

/// `λ·(f ⋆ w₁) + (1 − λ)·(f ⋆ w̃₂)⊙(f ⋆ w̄₂) + b` for a batch.
pub(crate) fn corr2<T: Real, D: InputSpace<T>>(tape: &mut Tape<T>, x: Var, p: Corr2Params, sh: Corr2Shape) -> Result<Var> {
    let in_len = D::grid_len(sh.in_bandwidth);
    let out_len = sh.out_bandwidth.so3_len();
    if tape.value(x).len() != sh.batch * sh.in_channels * in_len {
        bail!(ShapeMismatch, "Corr₂ input holds {} values, shape needs {}", tape.value(x).len(), sh.batch * sh.in_channels * in_len);
    }
    if sh.kernel_bandwidth > sh.in_bandwidth {
        bail!(InvalidSpec, "kernel band limit {} exceeds input {}", sh.kernel_bandwidth, sh.in_bandwidth);
    }
    let bk = sh.kernel_bandwidth;
    let per = D::param_len(bk);
    let k = |v: Var, tape: &Tape<T>| Arc::new(D::kernel(sh.in_channels, sh.out_channels, bk, tape.value(v)));
    let w1 = k(p.w1, tape);
    let second = p.second.map(|(a, b, m)| (k(a, tape), k(b, tape), tape.value(m)[0]));
    let bias: Vec<T> = tape.value(p.bias).to_vec();
    let lambda = second.as_ref().map_or(T::one(), |s| s.2.max(T::zero()).min(T::one()));
    let proj = product_bandwidth(bk, sh.out_bandwidth, sh.oversample);

    let xs = tape.value(x).to_vec();
    struct Cache<T, S> {
        spectra: Vec<S>,
        lin: Vec<Vec<T>>,
        // per output channel: (A, B, P) with A, B on the product grid
        quad: Vec<(Vec<T>, Vec<T>, Vec<T>)>,
    }
    let caches: Vec<Cache<T, D::Spec>> = xs
        .par_chunks(sh.in_channels * in_len)
        .map(|sample| {
            let spectra: Vec<D::Spec> =
                sample.chunks(in_len).map(|c| D::analyze(sh.in_bandwidth, c, bk)).collect();
            let c1 = D::corr(&spectra, &w1);
            let lin: Vec<Vec<T>> = c1.iter().map(|s| so3_ft_inverse(sh.out_bandwidth, s)).collect();
            let quad = match &second {
                None => Vec::new(),
                Some((wa, wb, _)) => {
                    let ca = D::corr(&spectra, wa);
                    let cb = D::corr(&spectra, wb);
                    ca.iter()
                        .zip(&cb)
                        .map(|(sa, sb)| {
                            let grid = proj.unwrap_or(sh.out_bandwidth);
                            let a = so3_ft_inverse(grid, sa);
                            let b = so3_ft_inverse(grid, sb);
                            let prod = elementwise(&a, &b);
                            let pr = match proj {
                                None => prod,
                                Some(bp) => {
                                    let s = so3_ft_forward_truncated(bp, &prod, sh.out_bandwidth).expect("grid sized");
                                    so3_ft_inverse(sh.out_bandwidth, &s)
                                }
                            };
                            (a, b, pr)
                        })
                        .collect()
                }
            };
            Cache { spectra, lin, quad }
        })
        .collect();

    let mut out = Vec::with_capacity(sh.batch * sh.out_channels * out_len);
    for c in &caches {
        for o in 0..sh.out_channels {
            if second.is_some() {
                let pr = &c.quad[o].2;
                out.extend(c.lin[o].iter().zip(pr).map(|(l, q)| lambda * *l + (T::one() - lambda) * *q + bias[o]));
            } else {
                out.extend(c.lin[o].iter().map(|l| *l + bias[o]));
            }
        }
    }

    let mut parents = vec![x, p.w1, p.bias];
    if let Some((a, b, m)) = p.second {
        parents.extend([a, b, m]);
    }
    let caches = Arc::new(caches);
    let mix_raw = second.as_ref().map(|s| s.2);
    let backward = Box::new(move |ad: &super::tape::Adjoint<'_, T>| {
        let dclamp = match mix_raw {
            Some(m) if m > T::zero() && m < T::one() => T::one(),
            _ => T::zero(),
        };
        let per_sample: Vec<_> = caches
            .par_iter()
            .enumerate()
            .map(|(s, c)| {
                let g = &ad.grad[s * sh.out_channels * out_len..(s + 1) * sh.out_channels * out_len];
                let mut g_bias = vec![T::zero(); sh.out_channels];
                let mut g_mix = T::zero();
                let mut g1 = Vec::with_capacity(sh.out_channels);
                let mut ga = Vec::with_capacity(sh.out_channels);
                let mut gb = Vec::with_capacity(sh.out_channels);
                for o in 0..sh.out_channels {
                    let go = &g[o * out_len..(o + 1) * out_len];
                    g_bias[o] = go.iter().copied().sum();
                    let glin: Vec<T> = go.iter().map(|v| *v * lambda).collect();
                    g1.push(so3_adjoint_inverse(sh.out_bandwidth, &glin, bk).expect("grid sized"));
                    if second.is_some() {
                        let (a, b, pr) = &c.quad[o];
                        g_mix += dclamp * go.iter().zip(&c.lin[o]).zip(pr).map(|((g, l), q)| *g * (*l - *q)).sum::<T>();
                        let gp: Vec<T> = go.iter().map(|v| *v * (T::one() - lambda)).collect();
                        let (gprod, grid) = match proj {
                            None => (gp, sh.out_bandwidth),
                            Some(bp) => {
                                let gs = so3_adjoint_inverse(sh.out_bandwidth, &gp, sh.out_bandwidth).expect("grid sized");
                                (so3_adjoint_forward(bp, &gs), bp)
                            }
                        };
                        ga.push(so3_adjoint_inverse(grid, &elementwise(&gprod, b), bk).expect("grid sized"));
                        gb.push(so3_adjoint_inverse(grid, &elementwise(&gprod, a), bk).expect("grid sized"));
                    }
                }
                let (mut gf, gw1) = D::corr_backward(&c.spectra, &w1, &g1);
                let mut gwa = Vec::new();
                let mut gwb = Vec::new();
                if let Some((wa, wb, _)) = &second {
                    let (gfa, gwa_) = D::corr_backward(&c.spectra, wa, &ga);
                    let (gfb, gwb_) = D::corr_backward(&c.spectra, wb, &gb);
                    for ((t, a), b) in gf.iter_mut().zip(&gfa).zip(&gfb) {
                        D::accumulate(t, a);
                        D::accumulate(t, b);
                    }
                    gwa = gwa_;
                    gwb = gwb_;
                }
                let gx: Option<Vec<T>> = ad.needs[0]
                    .then(|| gf.iter().flat_map(|s| D::analyze_adjoint(sh.in_bandwidth, s)).collect());
                let flat = |v: &[D::Spec]| -> Vec<T> { v.iter().flat_map(D::param_grad).collect() };
                (gx, flat(&gw1), flat(&gwa), flat(&gwb), g_mix, g_bias)
            })
            .collect();
        // deterministic reduction in sample order
        let n_w = sh.in_channels * sh.out_channels * per;
        let mut gx = ad.needs[0].then(|| Vec::with_capacity(ad.parents[0].len()));
        let mut gw1 = vec![T::zero(); n_w];
        let mut gwa = vec![T::zero(); n_w];
        let mut gwb = vec![T::zero(); n_w];
        let mut g_mix = T::zero();
        let mut g_bias = vec![T::zero(); sh.out_channels];
        for (sx, s1, sa, sb, sm, sbias) in per_sample {
            if let (Some(gx), Some(sx)) = (gx.as_mut(), sx) {
                gx.extend(sx);
            }
            add_into(&mut gw1, &s1);
            add_into(&mut gwa, &sa);
            add_into(&mut gwb, &sb);
            g_mix += sm;
            add_into(&mut g_bias, &sbias);
        }
        let mut res = vec![gx, Some(gw1), Some(g_bias)];
        if second.is_some() {
            res.extend([Some(gwa), Some(gwb), Some(vec![g_mix])]);
        }
        res
    });
    Ok(tape.push(out, &parents, backward))
}

fn add_into<T: Real>(dst: &mut [T], src: &[T]) {
    for (a, b) in dst.iter_mut().zip(src) {
        *a += *b;
    }
}

/// Haar cell weights of the SO(3) grid (sum one), in storage order.
pub(crate) fn haar_weights<T: Real>(b: Bandwidth) -> Vec<T> {
    let p = plan::<T>(b);
    let n = b.nodes();
    (0..b.so3_len()).map(|i| p.so3_cell((i / n) % n)).collect()
}

/// Haar integral per `[batch][channel]`.
pub(crate) fn invariant_pool<T: Real>(tape: &mut Tape<T>, x: Var, b: Bandwidth) -> Var {
    let q = Arc::new(haar_weights::<T>(b));
    let n = q.len();
    let out: Vec<T> = tape.value(x).chunks(n).map(|c| c.iter().zip(q.iter()).map(|(v, w)| *v * *w).sum()).collect();
    tape.push(
        out,
        &[x],
        Box::new(move |ad| vec![Some(ad.grad.iter().flat_map(|g| q.iter().map(move |w| *g * *w)).collect())]),
    )
}

/// `y = W x + b` per batch row; `W` is `out × in`, row-major.
pub(crate) fn dense<T: Real>(tape: &mut Tape<T>, x: Var, w: Var, b: Var, inputs: usize, outputs: usize) -> Result<Var> {
    if tape.value(x).len() % inputs != 0 || tape.value(w).len() != inputs * outputs || tape.value(b).len() != outputs {
        bail!(ShapeMismatch, "dense layer {inputs}→{outputs} given mismatched buffers");
    }
    let (xv, wv, bv) = (tape.value(x), tape.value(w), tape.value(b));
    let mut out = Vec::with_capacity(xv.len() / inputs * outputs);
    for row in xv.chunks(inputs) {
        for o in 0..outputs {
            let wr = &wv[o * inputs..(o + 1) * inputs];
            out.push(bv[o] + wr.iter().zip(row).map(|(a, c)| *a * *c).sum::<T>());
        }
    }
    Ok(tape.push(
        out,
        &[x, w, b],
        Box::new(move |ad| {
            let (xv, wv) = (ad.parents[0], ad.parents[1]);
            let mut gx = vec![T::zero(); xv.len()];
            let mut gw = vec![T::zero(); wv.len()];
            let mut gb = vec![T::zero(); outputs];
            for (r, (row, grow)) in xv.chunks(inputs).zip(ad.grad.chunks(outputs)).enumerate() {
                for o in 0..outputs {
                    let g = grow[o];
                    gb[o] += g;
                    let wr = &wv[o * inputs..(o + 1) * inputs];
                    for i in 0..inputs {
                        gw[o * inputs + i] += g * row[i];
                        gx[r * inputs + i] += g * wr[i];
                    }
                }
            }
            vec![ad.needs[0].then_some(gx), Some(gw), Some(gb)]
        }),
    ))
}

/// Batch statistics of a normalization layer.
#[derive(Debug, Clone)]
pub struct NormStats<T> {
    pub mean: Vec<T>,
    pub var: Vec<T>,
}

pub(crate) const BN_EPS: f64 = 1e-5;

/// Per-channel normalization with weights `q` over each channel's samples
/// (Haar cells on the grid, or `[1]` for flat features), then `γ x̂ + β`.
/// With `running = Some((mean, var))` the given statistics are used.
pub(crate) fn batch_norm<T: Real>(
    tape: &mut Tape<T>,
    x: Var,
    gamma: Var,
    beta: Var,
    channels: usize,
    q: Arc<Vec<T>>,
    running: Option<(&[T], &[T])>,
) -> (Var, NormStats<T>) {
    let n = q.len();
    let xv = tape.value(x).to_vec();
    let batch = xv.len() / (channels * n);
    let nb = T::from_usize_lossy(batch);
    let qsum: T = q.iter().copied().sum();
    let (mean, var) = match running {
        Some((m, v)) => (m.to_vec(), v.to_vec()),
        None => {
            let mut mean = vec![T::zero(); channels];
            let mut var = vec![T::zero(); channels];
            for c in 0..channels {
                let mut acc = T::zero();
                for s in 0..batch {
                    let ch = &xv[(s * channels + c) * n..(s * channels + c + 1) * n];
                    acc += ch.iter().zip(q.iter()).map(|(v, w)| *v * *w).sum::<T>();
                }
                mean[c] = acc / (nb * qsum);
                let mut acc = T::zero();
                for s in 0..batch {
                    let ch = &xv[(s * channels + c) * n..(s * channels + c + 1) * n];
                    acc += ch.iter().zip(q.iter()).map(|(v, w)| (*v - mean[c]) * (*v - mean[c]) * *w).sum::<T>();
                }
                var[c] = acc / (nb * qsum);
            }
            (mean, var)
        }
    };
    let eps = T::lit(BN_EPS);
    let inv: Vec<T> = var.iter().map(|v| T::one() / (*v + eps).sqrt()).collect();
    let (gv, bv) = (tape.value(gamma).to_vec(), tape.value(beta).to_vec());
    let mut xhat = Vec::with_capacity(xv.len());
    let mut out = Vec::with_capacity(xv.len());
    for (k, chunk) in xv.chunks(n).enumerate() {
        let c = k % channels;
        for v in chunk {
            let h = (*v - mean[c]) * inv[c];
            xhat.push(h);
            out.push(gv[c] * h + bv[c]);
        }
    }
    let frozen = running.is_some();
    let xhat = Arc::new(xhat);
    let stats = NormStats { mean, var };
    let var = tape.push(
        out,
        &[x, gamma, beta],
        Box::new(move |ad| {
            let gv = ad.parents[1];
            let mut ggamma = vec![T::zero(); channels];
            let mut gbeta = vec![T::zero(); channels];
            let mut sum_g = vec![T::zero(); channels];
            let mut sum_gx = vec![T::zero(); channels];
            for (k, (gchunk, hchunk)) in ad.grad.chunks(n).zip(xhat.chunks(n)).enumerate() {
                let c = k % channels;
                for (g, h) in gchunk.iter().zip(hchunk) {
                    ggamma[c] += *g * *h;
                    gbeta[c] += *g;
                    sum_g[c] += *g * gv[c];
                    sum_gx[c] += *g * gv[c] * *h;
                }
            }
            let gx = ad.needs[0].then(|| {
                let mut gx = Vec::with_capacity(ad.grad.len());
                let norm = nb * qsum;
                for (k, (gchunk, hchunk)) in ad.grad.chunks(n).zip(xhat.chunks(n)).enumerate() {
                    let c = k % channels;
                    for ((g, h), w) in gchunk.iter().zip(hchunk).zip(q.iter()) {
                        // Gx = (Gx̂ − a_p (ΣGx̂ + x̂ ΣGx̂x̂)) / s with a_p = q_p / (N Σq)
                        let gh = *g * gv[c];
                        let v = if frozen { gh } else { gh - *w / norm * (sum_g[c] + *h * sum_gx[c]) };
                        gx.push(v * inv[c]);
                    }
                }
                gx
            });
            vec![gx, Some(ggamma), Some(gbeta)]
        }),
    );
    (var, stats)
}

/// Mean softmax cross-entropy of `[batch][classes]` logits against labels.
pub(crate) fn softmax_cross_entropy<T: Real>(tape: &mut Tape<T>, logits: Var, labels: &[usize], classes: usize) -> Result<Var> {
    let lv = tape.value(logits);
    if lv.len() != labels.len() * classes {
        bail!(ShapeMismatch, "{} logits for {} labels × {classes} classes", lv.len(), labels.len());
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
        bail!(InvalidArgument, "label {bad} outside {classes} classes");
    }
    let probs: Vec<T> = lv.chunks(classes).flat_map(softmax).collect();
    let nb = T::from_usize_lossy(labels.len().max(1));
    let loss = labels
        .iter()
        .enumerate()
        .map(|(r, &y)| -probs[r * classes + y].max(T::min_positive_value()).ln())
        .sum::<T>()
        / nb;
    let labels = labels.to_vec();
    Ok(tape.push(
        vec![loss],
        &[logits],
        Box::new(move |ad| {
            let mut g = probs.clone();
            for (r, &y) in labels.iter().enumerate() {
                g[r * classes + y] -= T::one();
            }
            let s = ad.grad[0] / nb;
            g.iter_mut().for_each(|v| *v *= s);
            vec![Some(g)]
        }),
    ))
}

/// Numerically stable softmax of one row.
pub fn softmax<T: Real>(row: &[T]) -> Vec<T> {
    let m = row.iter().copied().fold(T::neg_infinity(), T::max);
    let e: Vec<T> = row.iter().map(|v| (*v - m).exp()).collect();
    let s: T = e.iter().copied().sum();
    e.into_iter().map(|v| v / s).collect()
}

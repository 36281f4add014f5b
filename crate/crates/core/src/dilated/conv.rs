use crate::error::{bail, Result};
use crate::network::{Tape, Var};
use crate::scalar::Real;

/// Causal dilated convolution of a sequence of `dim`-vectors (flat `[len][dim]`)
/// with a scalar kernel: `y(s) = Σ_i w(i) x(s − d·i)`, zero before the start.
pub fn dilated_conv1d<T: Real>(x: &[T], dim: usize, w: &[T], d: usize) -> Result<Vec<T>> {
    if x.is_empty() || dim == 0 {
        bail!(InvalidArgument, "empty input sequence");
    }
    if x.len() % dim != 0 {
        bail!(ShapeMismatch, "{} values do not form {dim}-vectors", x.len());
    }
    if w.is_empty() || d == 0 {
        bail!(InvalidArgument, "kernel size and dilation must be at least 1");
    }
    let len = x.len() / dim;
    let mut y = vec![T::zero(); x.len()];
    for s in 0..len {
        for (i, wi) in w.iter().enumerate() {
            let Some(src) = s.checked_sub(d * i) else { break };
            for c in 0..dim {
                y[s * dim + c] += *wi * x[src * dim + c];
            }
        }
    }
    Ok(y)
}

/// One layer of a dilated stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackLayer {
    pub kernel: usize,
    pub dilation: usize,
    pub channels: usize,
}

/// How many past positions (including the current one) can reach an output.
pub fn receptive_field(stack: &[StackLayer]) -> usize {
    1 + stack.iter().map(|l| l.dilation * (l.kernel - 1)).sum::<usize>()
}

/// Multichannel causal dilated convolution on a tape. `x` is `[len][cin]`,
/// `w` is `[k][cout][cin]`, `b` is `[cout]`; output is `[len][cout]`.
pub(crate) fn conv_on_tape<T: Real>(
    tape: &mut Tape<T>,
    x: Var,
    w: Var,
    b: Var,
    cin: usize,
    cout: usize,
    k: usize,
    d: usize,
) -> Var {
    let xv = tape.value(x);
    let len = xv.len() / cin;
    let (wv, bv) = (tape.value(w), tape.value(b));
    let mut out = Vec::with_capacity(len * cout);
    for s in 0..len {
        for o in 0..cout {
            let mut acc = bv[o];
            for i in 0..k {
                let Some(src) = s.checked_sub(d * i) else { break };
                let wr = &wv[(i * cout + o) * cin..(i * cout + o + 1) * cin];
                acc += wr.iter().zip(&xv[src * cin..(src + 1) * cin]).map(|(a, c)| *a * *c).sum::<T>();
            }
            out.push(acc);
        }
    }
    tape.push(
        out,
        &[x, w, b],
        Box::new(move |ad| {
            let (xv, wv) = (ad.parents[0], ad.parents[1]);
            let mut gx = vec![T::zero(); xv.len()];
            let mut gw = vec![T::zero(); wv.len()];
            let mut gb = vec![T::zero(); cout];
            for s in 0..len {
                for o in 0..cout {
                    let g = ad.grad[s * cout + o];
                    gb[o] += g;
                    for i in 0..k {
                        let Some(src) = s.checked_sub(d * i) else { break };
                        let base = (i * cout + o) * cin;
                        for c in 0..cin {
                            gw[base + c] += g * xv[src * cin + c];
                            gx[src * cin + c] += g * wv[base + c];
                        }
                    }
                }
            }
            vec![ad.needs[0].then_some(gx), Some(gw), Some(gb)]
        }),
    )
}

/// Mean of rows `start..` of a `[rows][cols]` node.
pub(crate) fn row_mean_from<T: Real>(tape: &mut Tape<T>, x: Var, cols: usize, start: usize) -> Var {
    let xv = tape.value(x);
    let rows = xv.len() / cols;
    let n = T::from_usize_lossy(rows - start);
    let mut out = vec![T::zero(); cols];
    for r in start..rows {
        for c in 0..cols {
            out[c] += xv[r * cols + c];
        }
    }
    out.iter_mut().for_each(|v| *v /= n);
    tape.push(
        out,
        &[x],
        Box::new(move |ad| {
            let mut g = vec![T::zero(); rows * cols];
            for r in start..rows {
                for c in 0..cols {
                    g[r * cols + c] = ad.grad[c] / n;
                }
            }
            vec![Some(g)]
        }),
    )
}

use crate::equivariant_ops::{volterra2_s2_at, S2VolterraLayer};
use crate::error::{bail, Result};
use crate::harmonics::Bandwidth;
use crate::scalar::Real;
use crate::signals::{rotate_s2, Rotation, S2Signal, So3Signal};

/// A function on S² × R⁺ sampled on `n_shells` radial shells; shell `r` is channel `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellSignal<T> {
    signal: S2Signal<T>,
}

impl<T: Real> ShellSignal<T> {
    pub fn new(signal: S2Signal<T>) -> Self {
        Self { signal }
    }

    pub fn from_samples(b: Bandwidth, n_shells: usize, samples: Vec<T>) -> Result<Self> {
        Ok(Self { signal: S2Signal::new(b, n_shells, samples)? })
    }

    pub fn bandwidth(&self) -> Bandwidth {
        self.signal.bandwidth()
    }

    pub fn n_shells(&self) -> usize {
        self.signal.channels()
    }

    pub fn shell(&self, r: usize) -> S2Signal<T> {
        S2Signal::new(self.bandwidth(), 1, self.signal.channel(r).to_vec()).expect("valid shell")
    }

    pub fn as_signal(&self) -> &S2Signal<T> {
        &self.signal
    }

    pub fn samples(&self) -> &[T] {
        self.signal.samples()
    }

    /// Rotate every shell by the same `g`.
    pub fn rotate(&self, g: &Rotation) -> Self {
        Self { signal: rotate_s2(&self.signal, g) }
    }
}

/// `n` log-uniformly spaced radii in `[lo, hi]`.
pub fn shell_radii(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![(lo * hi).sqrt()],
        _ => (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect(),
    }
}

/// One second-order Volterra layer per shell, mixed by shell weights:
/// `out = Σ_r a_r · volterra2(f_r; layer_r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellVolterraLayer<T> {
    pub layers: Vec<S2VolterraLayer<T>>,
    pub weights: Vec<T>,
}

impl<T: Real> ShellVolterraLayer<T> {
    pub fn new(layers: Vec<S2VolterraLayer<T>>, weights: Vec<T>) -> Result<Self> {
        if layers.is_empty() || layers.len() != weights.len() {
            bail!(ShapeMismatch, "{} shell layers with {} weights", layers.len(), weights.len());
        }
        let c = layers[0].out_channels();
        if layers.iter().any(|l| l.in_channels() != 1 || l.out_channels() != c) {
            bail!(ShapeMismatch, "shell layers must map one channel to a common output width");
        }
        Ok(Self { layers, weights })
    }

    pub fn out_channels(&self) -> usize {
        self.layers[0].out_channels()
    }
}

/// Apply a [`ShellVolterraLayer`] with output on the SO(3) grid of band limit `out`.
pub fn shell_volterra2<T: Real>(f: &ShellSignal<T>, layer: &ShellVolterraLayer<T>, out: Bandwidth) -> Result<So3Signal<T>> {
    if f.n_shells() != layer.layers.len() {
        bail!(ShapeMismatch, "signal has {} shells, layer expects {}", f.n_shells(), layer.layers.len());
    }
    let mut acc: Option<So3Signal<T>> = None;
    for (r, (l, a)) in layer.layers.iter().zip(&layer.weights).enumerate() {
        let y = volterra2_s2_at(&f.shell(r), l, out)?;
        acc = Some(match acc {
            None if *a == T::one() => y,
            None => y.map(|v| v * *a),
            Some(prev) => {
                let mut s = prev.samples().to_vec();
                s.iter_mut().zip(y.samples()).for_each(|(p, q)| *p += *a * *q);
                So3Signal::new(out, prev.channels(), s)?
            }
        });
    }
    Ok(acc.expect("at least one shell"))
}

/// Uniform subsample of the Euler grid, flattened `[channel][α][β][γ]`.
/// Keeps indices that are multiples of `stride` along each axis.
pub fn discretize_so3<T: Real>(g: &So3Signal<T>, stride: usize) -> Result<Vec<T>> {
    let n = g.bandwidth().nodes();
    if stride == 0 || n % stride != 0 {
        bail!(InvalidArgument, "stride {stride} does not divide the grid size {n}");
    }
    let m = n / stride;
    let mut out = Vec::with_capacity(g.channels() * m * m * m);
    for c in 0..g.channels() {
        let ch = g.channel(c);
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    out.push(ch[((i * stride) * n + j * stride) * n + k * stride]);
                }
            }
        }
    }
    Ok(out)
}

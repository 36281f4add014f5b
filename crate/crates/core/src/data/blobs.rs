use super::bandlimited_from_fn;
use crate::error::{bail, Result};
use crate::harmonics::Bandwidth;
use crate::rng::{split_seed, stream_rng, Stream};
use crate::signals::{random_bandlimited_s2, rotate_s2, unit_vector, Rotation, S2Signal};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Whether samples keep the template orientation or get a fresh random rotation each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "NR")]
    NonRotated,
    #[serde(rename = "R")]
    Rotated,
}

impl std::str::FromStr for Regime {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "NR" | "nr" => Ok(Regime::NonRotated),
            "R" | "r" => Ok(Regime::Rotated),
            other => Err(format!("unknown regime {other:?} (expected NR or R)")),
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::NonRotated => "NR",
            Regime::Rotated => "R",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobParams {
    pub classes: usize,
    pub per_class: usize,
    pub bandwidth: usize,
    /// Standard deviation of the additive band-limited noise (pointwise).
    pub noise: f64,
    pub regime: Regime,
    /// Seed for noise and rotations.
    pub seed: u64,
    /// Seed for the class templates, shared by train and test sets.
    #[serde(default)]
    pub template_seed: u64,
}

/// Labelled single-channel S² signals, flat `[example][grid]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub bandwidth: Bandwidth,
    pub channels: usize,
    pub classes: usize,
    pub rotated: bool,
    pub samples: Vec<f64>,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn example_len(&self) -> usize {
        self.channels * self.bandwidth.s2_len()
    }

    pub fn example(&self, i: usize) -> S2Signal<f64> {
        let n = self.example_len();
        S2Signal::new(self.bandwidth, self.channels, self.samples[i * n..(i + 1) * n].to_vec()).expect("stored shape")
    }

    /// Copy with every example rotated by its own rotation from `(seed, Rotation, i)`.
    pub fn rotated_copy(&self, seed: u64) -> Self {
        let mut samples = Vec::with_capacity(self.samples.len());
        for i in 0..self.len() {
            samples.extend_from_slice(rotate_s2(&self.example(i), &sample_rotation(seed, i)).samples());
        }
        Self { samples, rotated: true, ..self.clone() }
    }
}

/// Haar-random rotation of example `i` under `seed`.
pub fn sample_rotation(seed: u64, i: usize) -> Rotation {
    Rotation::random(&mut stream_rng(seed, Stream::Rotation, i as u64))
}

const SHARPNESS: f64 = 6.0;

/// Bump centres (colatitude, longitude) in degrees for the first four classes:
/// a tight cluster, a great-circle triangle, a pair with an opposite bump, an orthogonal triad.
const LAYOUTS: [[(f64, f64); 3]; 4] = [
    [(0.0, 0.0), (20.0, 0.0), (20.0, 60.0)],
    [(90.0, 0.0), (90.0, 120.0), (90.0, 240.0)],
    [(30.0, 0.0), (30.0, 180.0), (180.0, 0.0)],
    [(0.0, 0.0), (90.0, 0.0), (90.0, 90.0)],
];

/// Class `k` template: three equal von Mises bumps in a class-specific layout
/// under a rotation from `(template_seed, Content, k)`, band-limited to `b`.
/// Classes share their mean and differ in geometry only; classes past the
/// fourth get random centres.
pub fn blob_template(b: Bandwidth, class: usize, template_seed: u64) -> S2Signal<f64> {
    let mut rng = stream_rng(template_seed, Stream::Content, class as u64);
    let g = Rotation::random(&mut rng);
    let centres: Vec<[f64; 3]> = match LAYOUTS.get(class) {
        Some(layout) => layout.iter().map(|&(t, p)| g.apply(unit_vector(t.to_radians(), p.to_radians()))).collect(),
        None => (0..3)
            .map(|_| {
                let z: f64 = rng.random_range(-1.0..1.0);
                let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                unit_vector(z.acos(), phi)
            })
            .collect(),
    };
    bandlimited_from_fn(b, |theta, phi| {
        let x = unit_vector(theta, phi);
        centres
            .iter()
            .map(|c| (SHARPNESS * (x[0] * c[0] + x[1] * c[1] + x[2] * c[2] - 1.0)).exp())
            .sum::<f64>()
    })
}

/// Example `i` has class `i mod classes`; its noise comes from `(seed, Noise, i)` and,
/// in the rotated regime, its rotation from `(seed, Rotation, i)`.
pub fn generate_blobs(p: &BlobParams) -> Result<Dataset> {
    if p.classes == 0 {
        bail!(InvalidArgument, "classes must be positive");
    }
    if !(p.noise.is_finite() && p.noise >= 0.0) {
        bail!(InvalidArgument, "noise must be a finite non-negative number");
    }
    let b = Bandwidth::new(p.bandwidth)?;
    let templates: Vec<S2Signal<f64>> = (0..p.classes).map(|k| blob_template(b, k, p.template_seed)).collect();
    // unit-variance coefficients give pointwise variance B²/4π
    let noise_scale = p.noise / (b.get() as f64 / (4.0 * std::f64::consts::PI).sqrt());
    let n = p.classes * p.per_class;
    let mut samples = Vec::with_capacity(n * b.s2_len());
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let k = i % p.classes;
        let mut x = templates[k].clone();
        if p.noise > 0.0 {
            let e = random_bandlimited_s2::<f64>(b, 1, split_seed(p.seed, Stream::Noise, i as u64));
            x = S2Signal::new(b, 1, x.samples().iter().zip(e.samples()).map(|(a, e)| a + noise_scale * e).collect())?;
        }
        if p.regime == Regime::Rotated {
            x = rotate_s2(&x, &sample_rotation(p.seed, i));
        }
        samples.extend_from_slice(x.samples());
        labels.push(k);
    }
    Ok(Dataset { bandwidth: b, channels: 1, classes: p.classes, rotated: p.regime == Regime::Rotated, samples, labels })
}

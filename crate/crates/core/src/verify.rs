//! Property suites with per-property worst-case errors and pinned tolerances.
//!
//! Every check is deterministic given the seed, so two runs produce
//! byte-identical reports.

use crate::dilated::{dilated_conv1d, shell_volterra2, ShellSignal, ShellVolterraLayer};
use crate::equivariant_ops::{
    corr_s2, corr_s2_bruteforce, corr_so3, corr_so3_bruteforce, volterra2_bruteforce, volterra2_s2, volterra2_so3,
    S2Kernel, S2VolterraLayer, SampledInput, SeparablePair, So3Kernel, So3VolterraLayer, VolterraLayer,
};
use crate::error::{bail, Error, Result};
use crate::harmonics::{
    plan, sht_forward, sht_inverse, so3_ft_forward, so3_ft_inverse, sph_harm, wigner_big_d, Bandwidth,
};
use crate::network::{LayerSpec, Mode, Model, ModelSpec};
use crate::rng::{split_seed, stream_rng, Rng, Stream};
use crate::signals::{
    random_bandlimited_s2, random_bandlimited_so3, random_s2_spectrum, random_so3_spectrum, rotate_s2, rotate_so3,
    Rotation,
};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    All,
    Transforms,
    Equivariance,
    Volterra,
    Gradients,
    Dilated,
}

impl Suite {
    pub const EACH: [Suite; 5] = [Suite::Transforms, Suite::Equivariance, Suite::Volterra, Suite::Gradients, Suite::Dilated];

    pub fn name(self) -> &'static str {
        match self {
            Suite::All => "all",
            Suite::Transforms => "transforms",
            Suite::Equivariance => "equivariance",
            Suite::Volterra => "volterra",
            Suite::Gradients => "gradients",
            Suite::Dilated => "dilated",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all" => Suite::All,
            "transforms" => Suite::Transforms,
            "equivariance" => Suite::Equivariance,
            "volterra" => Suite::Volterra,
            "gradients" => Suite::Gradients,
            "dilated" => Suite::Dilated,
            other => bail!(InvalidArgument, "unknown suite {other:?}"),
        })
    }
}

impl std::fmt::Display for Suite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One checked property: the worst error seen against its tolerance.
/// A zero tolerance demands exact equality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Property {
    pub suite: String,
    pub name: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Property {
    pub fn new(suite: Suite, name: impl Into<String>, max_error: f64, tolerance: f64) -> Self {
        let passed = if tolerance == 0.0 { max_error == 0.0 } else { max_error < tolerance };
        Self { suite: suite.name().into(), name: name.into(), max_error, tolerance, passed }
    }
}

impl std::fmt::Display for Property {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {}/{} max_error={:.3e} tolerance={:.1e}", self.suite, self.name, self.max_error, self.tolerance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub seed: u64,
    pub properties: Vec<Property>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(|p| p.passed)
    }

    pub fn first_failure(&self) -> Option<&Property> {
        self.properties.iter().find(|p| !p.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Run one suite (or all of them) at the default sizes.
pub fn run_suite(suite: Suite, seed: u64) -> Result<VerifyReport> {
    let suites: Vec<Suite> = if suite == Suite::All { Suite::EACH.to_vec() } else { vec![suite] };
    let mut properties = Vec::new();
    for s in suites {
        let sub = split_seed(seed, Stream::Meta, s as u64);
        properties.extend(match s {
            Suite::Transforms => {
                let mut v = transform_properties(&[2, 4, 8, 16], sub)?;
                v.push(induced_basis_property(8)?);
                v
            }
            Suite::Equivariance => {
                let mut v = correlation_equivariance(40, 2..=8, sub)?;
                v.extend(oracle_properties(sub)?);
                v
            }
            Suite::Volterra => volterra_equivariance(40, 2..=6, sub)?,
            Suite::Gradients => vec![gradient_property(100, sub)?],
            Suite::Dilated => dilated_properties(sub)?,
            Suite::All => unreachable!("expanded above"),
        });
    }
    Ok(VerifyReport { suite, seed, properties })
}

fn bw(b: usize) -> Result<Bandwidth> {
    Bandwidth::new(b)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// `max|a − b| / max|b|`.
pub fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    max_abs_diff(a, b) / scale
}

/// Round trips (spectrum → grid → spectrum and grid → spectrum → grid) and
/// Parseval on S² and SO(3) at each band limit. Parseval errors are relative
/// to the energy.
pub fn transform_properties(bandwidths: &[usize], seed: u64) -> Result<Vec<Property>> {
    let s = Suite::Transforms;
    let mut out = Vec::new();
    for (k, &b) in bandwidths.iter().enumerate() {
        let bb = bw(b)?;
        let mut rng = stream_rng(seed, Stream::Signal, k as u64);
        let n = bb.nodes();
        let p = plan::<f64>(bb);

        let spec = random_s2_spectrum::<f64, _>(bb, &mut rng);
        let f = sht_inverse(bb, &spec);
        let back = sht_forward(bb, &f)?;
        let f2 = sht_inverse(bb, &back);
        let rt = back.max_abs_diff(&spec).max(max_abs_diff(&f, &f2));
        out.push(Property::new(s, format!("s2_round_trip_b{b}"), rt, 1e-9));
        let integral: f64 = (0..bb.s2_len()).map(|i| p.s2_cell(i / n) * f[i] * f[i]).sum();
        out.push(Property::new(s, format!("s2_parseval_b{b}"), (integral - spec.energy()).abs() / spec.energy(), 1e-9));

        let spec = random_so3_spectrum::<f64, _>(bb, &mut rng);
        let f = so3_ft_inverse(bb, &spec);
        let back = so3_ft_forward(bb, &f)?;
        let f2 = so3_ft_inverse(bb, &back);
        let rt = back.max_abs_diff(&spec).max(max_abs_diff(&f, &f2));
        out.push(Property::new(s, format!("so3_round_trip_b{b}"), rt, 1e-9));
        let integral: f64 = (0..bb.so3_len()).map(|i| p.so3_cell((i / n) % n) * f[i] * f[i]).sum();
        out.push(Property::new(s, format!("so3_parseval_b{b}"), (integral - spec.energy()).abs() / spec.energy(), 1e-9));
    }
    Ok(out)
}

/// `Y_l^m(θ, φ) = √((2l+1)/4π) D^l_{m0}(φ, θ, 0)` for all `l < b` on the full grid.
pub fn induced_basis_property(b: usize) -> Result<Property> {
    let bb = bw(b)?;
    let n = bb.nodes();
    let mut worst = 0.0f64;
    for j in 0..n {
        let theta: f64 = bb.beta(j);
        for k in 0..n {
            let phi: f64 = bb.azimuth(k);
            for l in 0..b {
                let d = wigner_big_d(l, phi, theta, 0.0);
                let c = ((2 * l + 1) as f64 / (4.0 * std::f64::consts::PI)).sqrt();
                for m in -(l as isize)..=(l as isize) {
                    let y = sph_harm(l, m, theta, phi)?;
                    worst = worst.max((y - d.get(m, 0) * c).norm());
                }
            }
        }
    }
    Ok(Property::new(Suite::Transforms, format!("induced_basis_b{b}"), worst, 1e-10))
}

fn s2_kernel(ci: usize, co: usize, bk: Bandwidth, rng: &mut Rng) -> S2Kernel<f64> {
    S2Kernel::random(ci, co, bk, 1.0, rng)
}

fn so3_kernel(ci: usize, co: usize, bk: Bandwidth, rng: &mut Rng) -> So3Kernel<f64> {
    So3Kernel::random(ci, co, bk, 1.0, rng)
}

/// Band limits cycle through `range`; trial `t` draws everything from
/// `(seed, Probe, t)`.
fn trial_bandwidth(range: &std::ops::RangeInclusive<usize>, t: usize) -> usize {
    range.start() + t % (range.end() - range.start() + 1)
}

/// `corr(g·f, w) = g·corr(f, w)` on S² and SO(3), relative error.
pub fn correlation_equivariance(
    trials: usize,
    bandwidths: std::ops::RangeInclusive<usize>,
    seed: u64,
) -> Result<Vec<Property>> {
    let (mut e2, mut e3) = (0.0f64, 0.0f64);
    for t in 0..trials {
        let b = bw(trial_bandwidth(&bandwidths, t))?;
        let mut rng = stream_rng(seed, Stream::Probe, t as u64);
        let g = Rotation::random(&mut rng);
        let bk = bw(rng.random_range(1..=b.get()))?;
        let f = random_bandlimited_s2::<f64>(b, 2, rng.random());
        let w = s2_kernel(2, 2, bk, &mut rng);
        let lhs = corr_s2(&rotate_s2(&f, &g), &w)?;
        let rhs = rotate_so3(&corr_s2(&f, &w)?, &g);
        e2 = e2.max(lhs.rel_diff(&rhs));
        let f3 = random_bandlimited_so3::<f64>(b, 2, rng.random());
        let w3 = so3_kernel(2, 2, bk, &mut rng);
        let lhs = corr_so3(&rotate_so3(&f3, &g), &w3)?;
        let rhs = rotate_so3(&corr_so3(&f3, &w3)?, &g);
        e3 = e3.max(lhs.rel_diff(&rhs));
    }
    Ok(vec![
        Property::new(Suite::Equivariance, "corr_s2_equivariance", e2, 1e-8),
        Property::new(Suite::Equivariance, "corr_so3_equivariance", e3, 1e-8),
    ])
}

/// Spectral correlations against brute-force quadrature (B ≤ 4), the
/// factored Volterra term against the literal double integral (B ≤ 3), and
/// the factorization identity itself.
pub fn oracle_properties(seed: u64) -> Result<Vec<Property>> {
    let s = Suite::Equivariance;
    let (mut c2, mut c3, mut v2, mut v3, mut fact) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for b in 1..=4 {
        let bb = bw(b)?;
        let mut rng = stream_rng(seed, Stream::Probe, 100 + b as u64);
        let grid = Rotation::grid(bb);
        let f = random_bandlimited_s2::<f64>(bb, 2, rng.random());
        let w = s2_kernel(2, 2, bb, &mut rng);
        c2 = c2.max(rel_error(corr_s2(&f, &w)?.samples(), &corr_s2_bruteforce(&f, &w, &grid, false)?));
        let f3 = random_bandlimited_so3::<f64>(bb, 2, rng.random());
        let w3 = so3_kernel(2, 1, bb, &mut rng);
        c3 = c3.max(rel_error(corr_so3(&f3, &w3)?.samples(), &corr_so3_bruteforce(&f3, &w3, &grid, false)?));
    }
    for b in 1..=3 {
        let bb = bw(b)?;
        let mut rng = stream_rng(seed, Stream::Probe, 200 + b as u64);
        let grid = Rotation::grid(bb);
        let f = random_bandlimited_s2::<f64>(bb, 2, rng.random());
        let layer: S2VolterraLayer<f64> = VolterraLayer::new(
            s2_kernel(2, 2, bb, &mut rng),
            s2_kernel(2, 2, bb, &mut rng),
            s2_kernel(2, 2, bb, &mut rng),
            0.0,
        )?;
        let brute = volterra2_bruteforce(SampledInput::S2(&f), SeparablePair::S2(&layer.w2a, &layer.w2b), &grid, false)?;
        v2 = v2.max(rel_error(volterra2_s2(&f, &layer)?.samples(), &brute));
        let a = corr_s2_bruteforce(&f, &layer.w2a, &grid, false)?;
        let c = corr_s2_bruteforce(&f, &layer.w2b, &grid, false)?;
        let prod: Vec<f64> = a.iter().zip(&c).map(|(x, y)| x * y).collect();
        fact = fact.max(rel_error(&brute, &prod));

        let f3 = random_bandlimited_so3::<f64>(bb, 1, rng.random());
        let l3: So3VolterraLayer<f64> = VolterraLayer::new(
            so3_kernel(1, 2, bb, &mut rng),
            so3_kernel(1, 2, bb, &mut rng),
            so3_kernel(1, 2, bb, &mut rng),
            0.0,
        )?;
        let brute = volterra2_bruteforce(SampledInput::So3(&f3), SeparablePair::So3(&l3.w2a, &l3.w2b), &grid, false)?;
        v3 = v3.max(rel_error(volterra2_so3(&f3, &l3)?.samples(), &brute));
        let a = corr_so3_bruteforce(&f3, &l3.w2a, &grid, false)?;
        let c = corr_so3_bruteforce(&f3, &l3.w2b, &grid, false)?;
        let prod: Vec<f64> = a.iter().zip(&c).map(|(x, y)| x * y).collect();
        fact = fact.max(rel_error(&brute, &prod));
    }
    Ok(vec![
        Property::new(s, "corr_s2_vs_quadrature", c2, 1e-8),
        Property::new(s, "corr_so3_vs_quadrature", c3, 1e-8),
        Property::new(s, "volterra2_s2_vs_double_integral", v2, 1e-7),
        Property::new(s, "volterra2_so3_vs_double_integral", v3, 1e-7),
        Property::new(s, "volterra2_factorization", fact, 1e-10),
    ])
}

/// `F(g·f) = g·F(f)` for second-order layers with random mixing weight,
/// products formed on a grid that represents them exactly.
pub fn volterra_equivariance(
    trials: usize,
    bandwidths: std::ops::RangeInclusive<usize>,
    seed: u64,
) -> Result<Vec<Property>> {
    let (mut e2, mut e3) = (0.0f64, 0.0f64);
    for t in 0..trials {
        let b = bw(trial_bandwidth(&bandwidths, t))?;
        let mut rng = stream_rng(seed, Stream::Probe, t as u64);
        let g = Rotation::random(&mut rng);
        let mix: f64 = rng.random();
        let bk = bw(rng.random_range(1..=b.get()))?;
        let f = random_bandlimited_s2::<f64>(b, 1, rng.random());
        let layer: S2VolterraLayer<f64> = VolterraLayer::new(
            s2_kernel(1, 2, bk, &mut rng),
            s2_kernel(1, 2, bk, &mut rng),
            s2_kernel(1, 2, bk, &mut rng),
            mix,
        )?
        .with_oversample(2);
        let lhs = volterra2_s2(&rotate_s2(&f, &g), &layer)?;
        let rhs = rotate_so3(&volterra2_s2(&f, &layer)?, &g);
        e2 = e2.max(lhs.rel_diff(&rhs));
        let f3 = random_bandlimited_so3::<f64>(b, 2, rng.random());
        let l3: So3VolterraLayer<f64> = VolterraLayer::new(
            so3_kernel(2, 1, bk, &mut rng),
            so3_kernel(2, 1, bk, &mut rng),
            so3_kernel(2, 1, bk, &mut rng),
            mix,
        )?
        .with_oversample(2);
        let lhs = volterra2_so3(&rotate_so3(&f3, &g), &l3)?;
        let rhs = rotate_so3(&volterra2_so3(&f3, &l3)?, &g);
        e3 = e3.max(lhs.rel_diff(&rhs));
    }
    Ok(vec![
        Property::new(Suite::Volterra, "volterra2_s2_equivariance", e2, 1e-8),
        Property::new(Suite::Volterra, "volterra2_so3_equivariance", e3, 1e-8),
    ])
}

/// Model used by the gradient check: two second-order layers with ReLU,
/// invariant pooling and a dense head at B = 3.
pub fn gradient_check_spec() -> ModelSpec {
    ModelSpec {
        input_bandwidth: 3,
        input_channels: 1,
        layers: vec![
            LayerSpec::Corr2S2 { channels: 3, bandwidth: 3, kernel_bandwidth: 3 },
            LayerSpec::Relu,
            LayerSpec::Corr2So3 { channels: 2, bandwidth: 3, kernel_bandwidth: 2 },
            LayerSpec::Relu,
            LayerSpec::InvariantLayer,
            LayerSpec::FullyConnected { outputs: 3 },
        ],
        oversample: 1,
        second_order: true,
        lambda_init: 0.5,
    }
}

/// Central finite differences (step 1e−4) against the tape gradient of the
/// training loss for `samples` distinct parameters. The relative error uses
/// `max(|fd|, |grad|, 1e−6)` as denominator.
pub fn gradient_property(samples: usize, seed: u64) -> Result<Property> {
    let model = Model::<f64>::new(gradient_check_spec(), seed)?;
    let b = bw(3)?;
    let x: Vec<f64> = (0..2).flat_map(|k| random_bandlimited_s2::<f64>(b, 1, seed + k).into_samples()).collect();
    let labels = [0, 2];
    let (_, grad, _) = model.loss_and_grad(&x, &labels, Mode::Train)?;
    let n = model.param_count();
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = stream_rng(seed, Stream::Probe, 1);
    for i in (1..n).rev() {
        idx.swap(i, rng.random_range(0..=i));
    }
    idx.truncate(samples.min(n));
    let eps = 1e-4;
    let mut worst = 0.0f64;
    for &i in &idx {
        let at = |d: f64| -> Result<f64> {
            let mut m = model.clone();
            m.params_mut()[i] += d;
            Ok(m.loss_and_grad(&x, &labels, Mode::Train)?.0)
        };
        let fd = (at(eps)? - at(-eps)?) / (2.0 * eps);
        worst = worst.max((fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-6));
    }
    Ok(Property::new(Suite::Gradients, format!("composed_model_fd_{}_params", idx.len()), worst, 1e-3))
}

fn causal_conv(x: &[f64], w: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for (s, o) in out.iter_mut().enumerate() {
        for (j, wj) in w.iter().enumerate().take(s + 1) {
            *o += wj * x[s - j];
        }
    }
    out
}

/// Hand-computed dilated convolutions; `max|got − want|` over all cases.
pub fn dilated_examples_error() -> Result<f64> {
    let x = [1.0, 2.0, 3.0, 4.0];
    let cases: [(&[f64], usize, Vec<f64>); 3] = [
        (&[1.0, 1.0], 1, vec![1.0, 3.0, 5.0, 7.0]),
        (&[1.0, 1.0], 2, vec![1.0, 2.0, 4.0, 6.0]),
        (&[1.0], 3, x.to_vec()),
    ];
    let mut worst = 0.0f64;
    for (w, d, want) in cases {
        worst = worst.max(max_abs_diff(&dilated_conv1d(&x, 1, w, d)?, &want));
    }
    Ok(worst)
}

/// Unit dilation against a directly written causal convolution.
pub fn unit_dilation_error(trials: usize, seed: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    for t in 0..trials {
        let mut rng = stream_rng(seed, Stream::Probe, 300 + t as u64);
        let n = rng.random_range(1..40);
        let k = rng.random_range(1..8);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
        worst = worst.max(max_abs_diff(&dilated_conv1d(&x, 1, &w, 1)?, &causal_conv(&x, &w)));
    }
    Ok(worst)
}

/// Perturb `x(s − Δ)` for every `Δ` beyond the receptive field of a random
/// three-layer stack and record the largest change at `s`.
pub fn locality_error(trials: usize, seed: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    for t in 0..trials {
        let mut rng = stream_rng(seed, Stream::Probe, 400 + t as u64);
        let layers: Vec<(Vec<f64>, usize)> = (0..3)
            .map(|i| {
                let k = rng.random_range(1..4);
                ((0..k).map(|_| rng.random_range(-1.0..1.0)).collect(), 1 << i)
            })
            .collect();
        let rf = 1 + layers.iter().map(|(w, d)| d * (w.len() - 1)).sum::<usize>();
        let run = |x: &[f64]| -> Result<Vec<f64>> {
            let mut h = x.to_vec();
            for (w, d) in &layers {
                h = dilated_conv1d(&h, 1, w, *d)?.into_iter().map(|v| v.max(0.0) + 0.1 * v).collect();
            }
            Ok(h)
        };
        let len = rf + 12;
        let x: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        let base = run(&x)?;
        for s in rf..len {
            for delta in rf..=s {
                let mut y = x.clone();
                y[s - delta] += 5.0;
                worst = worst.max((run(&y)?[s] - base[s]).abs());
            }
        }
    }
    Ok(worst)
}

/// Rotation equivariance of the multi-shell second-order layer.
pub fn shell_equivariance_error(trials: usize, seed: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    for t in 0..trials {
        let mut rng = stream_rng(seed, Stream::Probe, 500 + t as u64);
        let b = bw(rng.random_range(2..=5))?;
        let shells = rng.random_range(1..=3);
        let g = Rotation::random(&mut rng);
        let layers = (0..shells)
            .map(|_| {
                VolterraLayer::new(
                    s2_kernel(1, 2, b, &mut rng),
                    s2_kernel(1, 2, b, &mut rng),
                    s2_kernel(1, 2, b, &mut rng),
                    rng.random(),
                )
                .map(|l| l.with_oversample(2))
            })
            .collect::<Result<Vec<_>>>()?;
        let weights = (0..shells).map(|_| rng.random_range(0.5..1.5)).collect();
        let layer = ShellVolterraLayer::new(layers, weights)?;
        let f = ShellSignal::new(random_bandlimited_s2::<f64>(b, shells, rng.random()));
        let lhs = shell_volterra2(&f.rotate(&g), &layer, b)?;
        let rhs = rotate_so3(&shell_volterra2(&f, &layer, b)?, &g);
        worst = worst.max(lhs.rel_diff(&rhs));
    }
    Ok(worst)
}

pub fn dilated_properties(seed: u64) -> Result<Vec<Property>> {
    let s = Suite::Dilated;
    Ok(vec![
        Property::new(s, "hand_computed_examples", dilated_examples_error()?, 0.0),
        Property::new(s, "unit_dilation_is_causal_convolution", unit_dilation_error(50, seed)?, 1e-12),
        Property::new(s, "receptive_field_locality", locality_error(10, seed)?, 0.0),
        Property::new(s, "shell_volterra2_equivariance", shell_equivariance_error(10, seed)?, 1e-8),
    ])
}

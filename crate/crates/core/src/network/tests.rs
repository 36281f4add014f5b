use super::layers::{batch_norm, corr2, dense, haar_weights, invariant_pool, softmax_cross_entropy, Corr2Params, Corr2Shape};
use super::*;
use crate::error::Error;
use crate::harmonics::{plan, Bandwidth};
use crate::rng::{stream_rng, Stream};
use crate::signals::{random_bandlimited_s2, rotate_s2, Rotation, S2Signal, S2, So3};
use rand::Rng;
use std::sync::Arc;

fn bw(b: usize) -> Bandwidth {
    Bandwidth::new(b).unwrap()
}

fn uniform(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, Stream::Probe, 0);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Central differences of a scalar function at `p` against `grad`, on every coordinate.
/// Errors are relative, floored at 1e−3 of the largest gradient entry.
fn max_fd_error(p: &[f64], grad: &[f64], eps: f64, f: impl Fn(&[f64]) -> f64) -> f64 {
    let floor = 1e-3 * grad.iter().fold(1e-6f64, |m, g| m.max(g.abs()));
    let mut worst: f64 = 0.0;
    let mut q = p.to_vec();
    for i in 0..p.len() {
        q[i] = p[i] + eps;
        let up = f(&q);
        q[i] = p[i] - eps;
        let dn = f(&q);
        q[i] = p[i];
        let fd = (up - dn) / (2.0 * eps);
        let err = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(floor);
        worst = worst.max(err);
    }
    worst
}

/// Scalar loss `Σ r·y` of a graph built from leaves `p` by `build`; returns the loss and `∂/∂p` for each leaf.
fn readout<F>(inputs: &[Vec<f64>], r_seed: u64, build: &F) -> (f64, Vec<Vec<f64>>)
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Var,
{
    let mut t = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|v| t.leaf(v.clone())).collect();
    let y = build(&mut t, &vars);
    let r = t.constant(uniform(t.value(y).len(), r_seed));
    let loss = t.dot(y, r);
    t.backward(loss).unwrap();
    (t.value(loss)[0], vars.iter().map(|v| t.grad(*v)).collect())
}

fn fd_all_inputs<F>(inputs: Vec<Vec<f64>>, eps: f64, build: F) -> f64
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Var,
{
    let (_, grads) = readout(&inputs, 99, &build);
    let mut worst: f64 = 0.0;
    for k in 0..inputs.len() {
        let err = max_fd_error(&inputs[k], &grads[k], eps, |q| {
            let mut ins = inputs.clone();
            ins[k] = q.to_vec();
            readout(&ins, 99, &build).0
        });
        worst = worst.max(err);
    }
    worst
}

fn corr2_case(space_so3: bool, second: bool, oversample: usize) -> f64 {
    let (b, bo, bk, ci, co, batch) = (3, 3, 2, 2, 2, 2);
    let sh = Corr2Shape {
        batch,
        in_channels: ci,
        out_channels: co,
        in_bandwidth: bw(b),
        out_bandwidth: bw(bo),
        kernel_bandwidth: bw(bk),
        oversample,
    };
    let grid = if space_so3 { bw(b).so3_len() } else { bw(b).s2_len() };
    let per = if space_so3 { bw(bk).so3_coeffs() } else { bw(bk).s2_coeffs() };
    let mut inputs = vec![uniform(batch * ci * grid, 1), uniform(ci * co * per, 2), uniform(co, 3)];
    if second {
        inputs.extend([uniform(ci * co * per, 4), uniform(ci * co * per, 5), vec![0.3]]);
    }
    let build = move |t: &mut Tape<f64>, v: &[Var]| {
        let p = Corr2Params { w1: v[1], second: (v.len() > 3).then(|| (v[3], v[4], v[5])), bias: v[2] };
        if space_so3 {
            corr2::<f64, So3>(t, v[0], p, sh).unwrap()
        } else {
            corr2::<f64, S2>(t, v[0], p, sh).unwrap()
        }
    };
    fd_all_inputs(inputs, 1e-5, build)
}

#[test]
fn corr2_gradients_match_finite_differences() {
    for so3 in [false, true] {
        for second in [false, true] {
            let e = corr2_case(so3, second, 1);
            assert!(e < 1e-6, "so3={so3} second={second}: {e}");
        }
        let e = corr2_case(so3, true, 2);
        assert!(e < 1e-6, "so3={so3} projected: {e}");
    }
}

#[test]
fn pooling_dense_and_cross_entropy_gradients() {
    let b = bw(3);
    let e = fd_all_inputs(vec![uniform(2 * 3 * b.so3_len(), 7)], 1e-5, |t, v| invariant_pool(t, v[0], bw(3)));
    assert!(e < 1e-6, "pool {e}");
    let e = fd_all_inputs(vec![uniform(3 * 4, 8), uniform(5 * 4, 9), uniform(5, 10)], 1e-5, |t, v| {
        dense(t, v[0], v[1], v[2], 4, 5).unwrap()
    });
    assert!(e < 1e-6, "dense {e}");
    let e = fd_all_inputs(vec![uniform(3 * 4, 11)], 1e-5, |t, v| softmax_cross_entropy(t, v[0], &[0, 3, 1], 4).unwrap());
    assert!(e < 1e-6, "xent {e}");
}

#[test]
fn batch_norm_gradients_train_and_eval() {
    let b = bw(2);
    let (batch, c) = (3, 2);
    let x = uniform(batch * c * b.so3_len(), 12);
    let q = Arc::new(haar_weights::<f64>(b));
    for frozen in [false, true] {
        let q = q.clone();
        let e = fd_all_inputs(vec![x.clone(), vec![1.2, 0.7], vec![0.1, -0.3]], 1e-5, move |t, v| {
            let run = [0.05, -0.1, 0.8, 1.3];
            let running = frozen.then(|| (&run[..2], &run[2..]));
            batch_norm(t, v[0], v[1], v[2], c, q.clone(), running).0
        });
        assert!(e < 1e-5, "frozen={frozen}: {e}");
    }
    // flat features
    let e = fd_all_inputs(vec![uniform(4 * 3, 13), vec![1.0; 3], vec![0.0; 3]], 1e-5, |t, v| {
        batch_norm(t, v[0], v[1], v[2], 3, Arc::new(vec![1.0]), None).0
    });
    assert!(e < 1e-5, "flat: {e}");
}

#[test]
fn batch_norm_weighted_statistics() {
    let b = bw(3);
    let q = Arc::new(haar_weights::<f64>(b));
    let x = uniform(2 * b.so3_len(), 14);
    let mut t = Tape::new();
    let xv = t.constant(x);
    let (g, be) = (t.leaf(vec![1.0]), t.leaf(vec![0.0]));
    let (y, stats) = batch_norm(&mut t, xv, g, be, 1, q.clone(), None);
    let yv = t.value(y);
    let n = q.len();
    let mean: f64 = yv.chunks(n).map(|c| c.iter().zip(q.iter()).map(|(a, w)| a * w).sum::<f64>()).sum::<f64>() / 2.0;
    let var: f64 = yv.chunks(n).map(|c| c.iter().zip(q.iter()).map(|(a, w)| a * a * w).sum::<f64>()).sum::<f64>() / 2.0;
    assert!(mean.abs() < 1e-12);
    assert!((var - stats.var[0] / (stats.var[0] + layers::BN_EPS)).abs() < 1e-12);
}

fn composed_spec() -> ModelSpec {
    ModelSpec {
        input_bandwidth: 3,
        input_channels: 1,
        layers: vec![
            LayerSpec::Corr2S2 { channels: 2, bandwidth: 3, kernel_bandwidth: 3 },
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

fn batch_of(b: usize, n: usize, seed: u64) -> Vec<f64> {
    (0..n).flat_map(|k| random_bandlimited_s2::<f64>(bw(b), 1, seed + k as u64).samples().to_vec()).collect()
}

#[test]
fn composed_model_gradient_matches_finite_differences() {
    let model = Model::<f64>::new(composed_spec(), 5).unwrap();
    let x = batch_of(3, 2, 20);
    let labels = [0, 2];
    let (_, grad, _) = model.loss_and_grad(&x, &labels, Mode::Train).unwrap();
    let n = model.param_count();
    let mut rng = stream_rng(1, Stream::Probe, 1);
    let idx: Vec<usize> = (0..100).map(|_| rng.random_range(0..n)).collect();
    let eps = 1e-4;
    let mut worst: f64 = 0.0;
    for &i in &idx {
        let f = |d: f64| {
            let mut m = model.clone();
            m.params_mut()[i] += d;
            m.loss_and_grad(&x, &labels, Mode::Train).unwrap().0
        };
        let fd = (f(eps) - f(-eps)) / (2.0 * eps);
        worst = worst.max((fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-6));
    }
    assert!(worst < 1e-3, "{worst}");
}

#[test]
fn param_counts() {
    let fc = ModelSpec {
        input_bandwidth: 4,
        input_channels: 1,
        layers: vec![
            LayerSpec::Corr2S2 { channels: 1, bandwidth: 4, kernel_bandwidth: 3 },
            LayerSpec::InvariantLayer,
            LayerSpec::FullyConnected { outputs: 5 },
        ],
        oversample: 1,
        second_order: false,
        lambda_init: 0.5,
    };
    let m = Model::<f64>::new(fc.clone(), 0).unwrap();
    let rep = m.param_report();
    assert_eq!(rep.rows[0].count, 9 + 1);
    assert_eq!(rep.rows[1].count, 5 + 5);
    assert_eq!(m.param_count(), 20);
    let m2 = Model::<f64>::new(ModelSpec { second_order: true, ..fc }, 0).unwrap();
    assert_eq!(m2.param_report().rows[0].count, 3 * 9 + 1 + 1);
    let so3 = Model::<f64>::new(composed_spec(), 0).unwrap();
    // Σ_{l<2} (2l+1)² = 10 per SO(3) kernel pair
    assert_eq!(so3.param_report().rows[1].count, 3 * 2 * 2 * 10 + 1 + 2);
    assert_eq!(so3.param_count(), so3.param_report().rows.iter().map(|r| r.count).sum::<usize>());
    assert_eq!(MlpSpec { inputs: 4, hidden: vec![3], classes: 2 }.param_count(), 4 * 3 + 3 + 3 * 2 + 2);
}

#[test]
fn zero_head_gives_uniform_logits() {
    let mut m = Model::<f64>::new(composed_spec(), 1).unwrap();
    for b in m.blocks().to_vec() {
        if b.layer == 5 {
            m.params_mut()[b.offset..b.offset + b.len].iter_mut().for_each(|p| *p = 0.0);
        }
    }
    let l = m.logits(&batch_of(3, 3, 4)).unwrap();
    assert!(l.iter().all(|v| *v == 0.0));
    let p = softmax(&l[..3]);
    assert!(p.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
}

#[test]
fn single_example_matches_batched_row() {
    let mut spec = composed_spec();
    spec.layers.insert(2, LayerSpec::BatchNorm);
    let m = Model::<f64>::new(spec, 2).unwrap();
    let x = batch_of(3, 3, 30);
    let all = m.logits(&x).unwrap();
    let per = m.input_len();
    for k in 0..3 {
        let one = m.logits(&x[k * per..(k + 1) * per]).unwrap();
        for c in 0..3 {
            assert!((one[c] - all[k * 3 + c]).abs() < 1e-12);
        }
    }
}

fn rotated_features(spec: ModelSpec, g: &Rotation) -> f64 {
    let m = Model::<f64>::new(spec, 3).unwrap();
    let sigs: Vec<S2Signal<f64>> = (0..2).map(|k| random_bandlimited_s2(bw(m.spec().input_bandwidth), 1, 40 + k)).collect();
    let rot: Vec<S2Signal<f64>> = sigs.iter().map(|s| rotate_s2(s, g)).collect();
    let a = m.features(&m.stack_inputs(&sigs).unwrap()).unwrap();
    let b = m.features(&m.stack_inputs(&rot).unwrap()).unwrap();
    let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

#[test]
fn invariant_features_under_rotation() {
    let g = Rotation::new(0.7, 1.1, -2.3);
    // without pointwise nonlinearities the quadrature integral is exact
    let mut linear = composed_spec();
    linear.layers.retain(|l| *l != LayerSpec::Relu);
    linear.input_bandwidth = 4;
    linear.layers[0] = LayerSpec::Corr2S2 { channels: 2, bandwidth: 4, kernel_bandwidth: 3 };
    assert!(rotated_features(linear.clone(), &g) < 1e-10);
    // grid-aligned z rotations permute the SO(3) samples, so ReLU commutes exactly
    let step = Rotation::new(2.0 * std::f64::consts::PI / 6.0, 0.0, 0.0);
    assert!(rotated_features(composed_spec(), &step) < 1e-10);
}

#[test]
fn input_gradient_is_equivariant() {
    let b = bw(4);
    let bk = bw(3);
    let sh = Corr2Shape {
        batch: 1,
        in_channels: 1,
        out_channels: 2,
        in_bandwidth: b,
        out_bandwidth: b,
        kernel_bandwidth: bk,
        oversample: 1,
    };
    let per = bk.s2_coeffs();
    let params = [uniform(2 * per, 50), uniform(2, 51), uniform(2 * per, 52), uniform(2 * per, 53), vec![0.4]];
    let field = |f: &S2Signal<f64>| -> S2Signal<f64> {
        let mut t = Tape::new();
        let x = t.leaf(f.samples().to_vec());
        let v: Vec<Var> = params.iter().map(|p| t.leaf(p.clone())).collect();
        let p = Corr2Params { w1: v[0], second: Some((v[2], v[3], v[4])), bias: v[1] };
        let y = corr2::<f64, S2>(&mut t, x, p, sh).unwrap();
        let pooled = invariant_pool(&mut t, y, b);
        let c = t.constant(vec![0.8, -1.3]);
        let loss = t.dot(pooled, c);
        t.backward(loss).unwrap();
        // divide out the quadrature cells to get the gradient field
        let pl = plan::<f64>(b);
        let n = b.nodes();
        let g: Vec<f64> = t.grad(x).iter().enumerate().map(|(i, v)| v / pl.s2_cell(i / n)).collect();
        S2Signal::new(b, 1, g).unwrap()
    };
    let f = random_bandlimited_s2::<f64>(b, 1, 60);
    let g = Rotation::new(2.1, 0.4, 0.9);
    let lhs = field(&rotate_s2(&f, &g));
    let rhs = rotate_s2(&field(&f), &g);
    let err = lhs.max_abs_diff(&rhs) / rhs.max_abs();
    assert!(err < 1e-6, "{err}");
}

#[test]
fn spec_validation_chain() {
    let base = composed_spec();
    assert_eq!(base.validate().unwrap().len(), 6);
    let mut s = base.clone();
    s.layers[2] = LayerSpec::Corr2S2 { channels: 2, bandwidth: 3, kernel_bandwidth: 2 };
    assert!(matches!(s.validate(), Err(Error::InvalidSpec(_))));
    let mut s = base.clone();
    s.layers.retain(|l| *l != LayerSpec::InvariantLayer);
    assert!(s.validate().is_err());
    let mut s = base.clone();
    s.layers.push(LayerSpec::InvariantLayer);
    assert!(s.validate().is_err());
    let mut s = base.clone();
    s.layers.insert(0, LayerSpec::Relu);
    assert!(s.validate().is_err());
    let mut s = base.clone();
    s.layers.insert(4, LayerSpec::Softmax);
    assert!(s.validate().is_err());
    let mut s = base.clone();
    s.layers.push(LayerSpec::Softmax);
    assert!(s.validate().is_ok());
    let mut s = base.clone();
    s.layers[0] = LayerSpec::Corr2S2 { channels: 2, bandwidth: 3, kernel_bandwidth: 4 };
    assert!(s.validate().is_err());
    let json = r#"{"input_bandwidth":3,"input_channels":1,"layers":[{"type":"fully_connected","outputs":3,"x":1}]}"#;
    assert!(serde_json::from_str::<ModelSpec>(json).is_err());
    let json = r#"{"input_bandwidth":3,"input_channels":1,"layers":[],"extra":0}"#;
    assert!(serde_json::from_str::<ModelSpec>(json).is_err());
    let rt: ModelSpec = serde_json::from_str(&base.canonical_json()).unwrap();
    assert_eq!(rt, base);
    assert_eq!(rt.fingerprint(), base.fingerprint());
}

#[test]
fn forward_checks_shapes() {
    let m = Model::<f64>::new(composed_spec(), 0).unwrap();
    assert!(matches!(m.logits(&[0.0; 5]), Err(Error::ShapeMismatch(_))));
    let wrong = random_bandlimited_s2::<f64>(bw(4), 1, 0);
    assert!(m.forward(&[wrong]).is_err());
    let mut bad = batch_of(3, 1, 0);
    bad[0] = f64::NAN;
    assert!(matches!(m.logits(&bad), Err(Error::NonFinite { layer: 0, .. })));
}

#[test]
fn checkpoint_round_trip_and_errors() {
    let mut spec = composed_spec();
    spec.layers.insert(2, LayerSpec::BatchNorm);
    let mut m = Model::<f64>::new(spec.clone(), 9).unwrap();
    let x = batch_of(3, 4, 70);
    let labels = [0, 1, 2, 0];
    let mut tr = Trainer::new(TrainConfig { epochs: 1, batch_size: 2, lr: 5e-3, seed: 9 }, m.param_count()).unwrap();
    tr.run_epoch(&mut m, &x, &labels).unwrap();
    let ck = Checkpoint::of_model(&m, Some(&tr.adam), 9, tr.epoch as u64);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.hckp");
    ck.save(&path).unwrap();
    let back = Checkpoint::load(&path).unwrap();
    assert_eq!(back, ck);
    let m2: Model<f64> = back.model().unwrap();
    let (a, b) = (m.logits(&x).unwrap(), m2.logits(&x).unwrap());
    assert!(a.iter().zip(&b).all(|(p, q)| p.to_bits() == q.to_bits()));
    assert_eq!(back.adam::<f64>().unwrap().unwrap(), tr.adam);

    let bytes = std::fs::read(&path).unwrap();
    for cut in [3, 20, bytes.len() / 2, bytes.len() - 1] {
        assert!(matches!(Checkpoint::read_from(&mut &bytes[..cut]), Err(Error::Corrupt(_))), "cut {cut}");
    }
    let mut v = bytes.clone();
    v[4] = 7;
    assert!(matches!(Checkpoint::read_from(&mut &v[..]), Err(Error::Version { found: 7, .. })));
    let other = composed_spec();
    assert!(matches!(back.model_for::<f64>(&other), Err(Error::Fingerprint { .. })));
}

#[test]
fn training_loss_decreases_on_separable_features() {
    // two classes separated by mean value: invariant features are linearly separable
    let spec = ModelSpec {
        input_bandwidth: 2,
        input_channels: 1,
        layers: vec![
            LayerSpec::Corr2S2 { channels: 2, bandwidth: 2, kernel_bandwidth: 2 },
            LayerSpec::InvariantLayer,
            LayerSpec::FullyConnected { outputs: 2 },
        ],
        oversample: 1,
        second_order: true,
        lambda_init: 0.5,
    };
    let mut ok = 0;
    for seed in 0..20u64 {
        let mut m = Model::<f64>::new(spec.clone(), seed).unwrap();
        let mut x = Vec::new();
        let mut labels = Vec::new();
        for k in 0..8 {
            let y = k % 2;
            let s = random_bandlimited_s2::<f64>(bw(2), 1, seed * 100 + k as u64);
            x.extend(s.samples().iter().map(|v| 0.3 * v + if y == 0 { 1.0 } else { -1.0 }));
            labels.push(y);
        }
        let mut tr = Trainer::new(TrainConfig { epochs: 1, batch_size: 8, lr: 5e-3, seed }, m.param_count()).unwrap();
        let losses: Vec<f64> = (0..50).map(|_| tr.step(&mut m, &x, &labels).unwrap()).collect();
        if losses.windows(2).all(|w| w[1] <= w[0]) {
            ok += 1;
        }
    }
    assert!(ok >= 19, "{ok}/20 seeds monotone");
}

#[test]
fn training_is_deterministic() {
    let run = || {
        let mut m = Model::<f64>::new(composed_spec(), 4).unwrap();
        let x = batch_of(3, 4, 80);
        let mut tr = Trainer::new(TrainConfig { epochs: 2, batch_size: 3, lr: 5e-3, seed: 4 }, m.param_count()).unwrap();
        let h = tr.fit(&mut m, &x, &[0, 1, 2, 1], |_| {}).unwrap();
        (h, m.params().to_vec())
    };
    assert_eq!(run(), run());
}

#[test]
fn mlp_learns_and_has_correct_gradient() {
    let mut m = Mlp::<f64>::new(MlpSpec { inputs: 3, hidden: vec![4], classes: 2 }, 1).unwrap();
    let x = uniform(6 * 3, 90);
    let labels = [0, 1, 1, 0, 1, 0];
    let (_, g, _) = m.train_grad(&x, &labels).unwrap();
    let p0 = m.params().to_vec();
    let e = max_fd_error(&p0, &g, 1e-5, |q| {
        let mut mm = m.clone();
        mm.params_mut().copy_from_slice(q);
        mm.train_grad(&x, &labels).unwrap().0
    });
    assert!(e < 1e-5, "{e}");
    let mut tr = Trainer::new(TrainConfig { epochs: 300, batch_size: 6, lr: 0.05, seed: 1 }, m.param_count()).unwrap();
    tr.fit(&mut m, &x, &labels, |_| {}).unwrap();
    assert_eq!(accuracy(&m, &x, &labels, 4).unwrap(), 1.0);
}

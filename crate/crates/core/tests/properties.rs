use homcorr::dilated::{dilated_conv1d, p_values, receptive_field, StackLayer};
use homcorr::equivariant_ops::{corr_s2, volterra2_s2, S2Kernel, S2VolterraLayer};
use homcorr::harmonics::{sht_forward, sht_inverse, Bandwidth, S2Spectrum};
use homcorr::network::Checkpoint;
use homcorr::signals::{
    integrate_s2, random_bandlimited_s2, random_s2_spectrum, rotate_s2, unit_vector, Rotation, S2Signal,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rotation() -> impl Strategy<Value = Rotation> {
    (0.0..std::f64::consts::TAU, 0.0..std::f64::consts::PI, 0.0..std::f64::consts::TAU)
        .prop_map(|(a, b, g)| Rotation::new(a, b, g))
}

fn close(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
    a.iter().zip(&b).all(|(x, y)| (x - y).abs() < tol)
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rotations_compose_and_invert(g in rotation(), h in rotation(), theta in 0.0..3.14f64, phi in 0.0..6.28f64) {
        let x = unit_vector(theta, phi);
        prop_assert!(close(g.inverse().apply(g.apply(x)), x, 1e-12));
        prop_assert!(close(g.compose(&h).apply(x), g.apply(h.apply(x)), 1e-12));
        let r = Rotation::from_matrix(&g.to_matrix());
        prop_assert!(close(r.apply(x), g.apply(x), 1e-12));
    }

    #[test]
    fn s2_transform_round_trip(b in 1usize..7, seed in any::<u64>()) {
        let bw = Bandwidth::new(b).unwrap();
        let spec = random_s2_spectrum::<f64, _>(bw, &mut ChaCha8Rng::seed_from_u64(seed));
        let back = sht_forward(bw, &sht_inverse(bw, &spec)).unwrap();
        let grid = sht_inverse(bw, &back);
        let again = sht_inverse(bw, &spec);
        let err = grid.iter().zip(&again).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        prop_assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn rotation_preserves_mean_and_composes(b in 1usize..6, seed in any::<u64>(), g in rotation(), h in rotation()) {
        let f = random_bandlimited_s2::<f64>(Bandwidth::new(b).unwrap(), 1, seed);
        let gf = rotate_s2(&f, &g);
        prop_assert!((integrate_s2(&gf)[0] - integrate_s2(&f)[0]).abs() < 1e-10);
        let two = rotate_s2(&rotate_s2(&f, &h), &g);
        let once = rotate_s2(&f, &g.compose(&h));
        prop_assert!(two.max_abs_diff(&once) < 1e-9 * f.max_abs().max(1.0));
    }

    #[test]
    fn correlation_is_linear_in_the_signal(b in 1usize..5, seed in any::<u64>(), s in -3.0..3.0f64) {
        let bw = Bandwidth::new(b).unwrap();
        let f1 = random_bandlimited_s2::<f64>(bw, 1, seed);
        let f2 = random_bandlimited_s2::<f64>(bw, 1, seed.wrapping_add(1));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = S2Kernel::from_spectra(1, 1, vec![random_s2_spectrum(bw, &mut rng)]).unwrap();
        let mix: Vec<f64> = f1.samples().iter().zip(f2.samples()).map(|(a, b)| a + s * b).collect();
        let lhs = corr_s2(&S2Signal::new(bw, 1, mix).unwrap(), &w).unwrap();
        let (c1, c2) = (corr_s2(&f1, &w).unwrap(), corr_s2(&f2, &w).unwrap());
        let rhs: Vec<f64> = c1.samples().iter().zip(c2.samples()).map(|(a, b)| a + s * b).collect();
        let scale = l2(&rhs).max(1.0);
        let err = lhs.samples().iter().zip(&rhs).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        prop_assert!(err < 1e-10 * scale);
    }

    #[test]
    fn correlation_acts_degree_by_degree(b in 2usize..6, seed in any::<u64>(), pick in any::<usize>()) {
        let bw = Bandwidth::new(b).unwrap();
        let l0 = pick % b;
        let f = random_bandlimited_s2::<f64>(bw, 1, seed);
        let h = random_bandlimited_s2::<f64>(bw, 1, seed ^ 0x5555);
        let mut only = S2Spectrum::zeros(bw);
        only.degree_mut(l0).copy_from_slice(h.spectra()[0].degree(l0));
        let perturbed: Vec<f64> = f.samples().iter().zip(sht_inverse(bw, &only)).map(|(a, b)| a + b).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = S2Kernel::from_spectra(1, 1, vec![random_s2_spectrum(bw, &mut rng)]).unwrap();
        let a = corr_s2(&f, &w).unwrap().spectra().remove(0);
        let p = corr_s2(&S2Signal::new(bw, 1, perturbed).unwrap(), &w).unwrap().spectra().remove(0);
        for l in 0..b {
            let diff = a.block(l).max_abs_diff(p.block(l));
            if l == l0 {
                prop_assert!(diff > 1e-9);
            } else {
                prop_assert!(diff < 1e-12, "degree {} moved by {}", l, diff);
            }
        }
    }

    #[test]
    fn second_order_layer_is_linear_plus_quadratic(b in 1usize..5, seed in any::<u64>(), mix in 0.0..1.0f64, s in -3.0..3.0f64) {
        let bw = Bandwidth::new(b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut kernel = || S2Kernel::from_spectra(1, 1, vec![random_s2_spectrum(bw, &mut rng)]).unwrap();
        let layer = S2VolterraLayer::new(kernel(), kernel(), kernel(), mix).unwrap().with_oversample(2);
        let f = random_bandlimited_s2::<f64>(bw, 1, seed);
        let scaled = |c: f64| volterra2_s2(&f.map(|v| c * v), &layer).unwrap().into_samples();
        let (pos, neg) = (scaled(1.0), scaled(-1.0));
        let predicted: Vec<f64> = pos.iter().zip(&neg).map(|(p, n)| s * (p - n) / 2.0 + s * s * (p + n) / 2.0).collect();
        let got = scaled(s);
        let scale = got.iter().chain(&predicted).fold(1.0f64, |m, v| m.max(v.abs()));
        let err = got.iter().zip(&predicted).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        prop_assert!(err < 1e-10 * scale, "{}", err);
    }

    #[test]
    fn dilated_conv_is_causal_and_linear(
        x in prop::collection::vec(-5.0..5.0f64, 1..24),
        w in prop::collection::vec(-2.0..2.0f64, 1..4),
        d in 1usize..5,
        cut in 0usize..24,
    ) {
        let y = dilated_conv1d(&x, 1, &w, d).unwrap();
        let doubled: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let y2 = dilated_conv1d(&doubled, 1, &w, d).unwrap();
        prop_assert!(y.iter().zip(&y2).all(|(a, b)| (2.0 * a - b).abs() < 1e-12));
        // changing the future leaves the past untouched
        let cut = cut.min(x.len() - 1);
        let mut future = x.clone();
        for v in &mut future[cut..] {
            *v += 1.0;
        }
        let yf = dilated_conv1d(&future, 1, &w, d).unwrap();
        prop_assert_eq!(&y[..cut], &yf[..cut]);
    }

    #[test]
    fn receptive_field_grows_with_depth(layers in prop::collection::vec((1usize..4, 1usize..5), 1..5)) {
        let stack: Vec<StackLayer> = layers.iter().map(|&(kernel, dilation)| StackLayer { kernel, dilation, channels: 1 }).collect();
        let expected = 1 + layers.iter().map(|(k, d)| (k - 1) * d).sum::<usize>();
        prop_assert_eq!(receptive_field(&stack), expected);
    }

    #[test]
    fn p_values_are_bounded_and_monotone(obs in -2.0..2.0f64, d in prop::collection::vec(-2.0..2.0f64, 19..60)) {
        let (p, raw) = p_values(obs, &d);
        let n = d.len() as f64;
        prop_assert!(p >= 1.0 / (n + 1.0) && p <= 1.0);
        prop_assert!((0.0..=1.0).contains(&raw));
        let (p_hi, _) = p_values(obs + 1.0, &d);
        prop_assert!(p_hi <= p);
    }

    #[test]
    fn checkpoint_round_trips(params in prop::collection::vec(any::<f64>(), 0..40), seed in any::<u64>(), epoch in any::<u64>()) {
        let spec = "{\"arbitrary\":true}".to_string();
        let fp = homcorr::network::fingerprint_of_json(&spec);
        let ck = Checkpoint::raw(spec, fp, params, vec![0.5, -1.0], seed, epoch);
        let mut buf = Vec::new();
        ck.write_to(&mut buf).unwrap();
        let back = Checkpoint::read_from(&mut buf.as_slice()).unwrap();
        prop_assert_eq!(back.params.len(), ck.params.len());
        prop_assert!(back.params.iter().zip(&ck.params).all(|(a, b)| a.to_bits() == b.to_bits()));
        prop_assert_eq!((back.seed, back.epoch, back.fingerprint), (seed, epoch, fp));
    }
}

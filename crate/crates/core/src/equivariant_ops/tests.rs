use super::*;
use crate::harmonics::{so3_ft_forward, wigner_big_d, Bandwidth, S2Spectrum, So3Spectrum};
use crate::rng::{stream_rng, Stream};
use crate::scalar::Cplx;
use crate::signals::{
    random_bandlimited_s2, random_bandlimited_so3, random_s2_spectrum, random_so3_spectrum, rotate_s2, rotate_so3,
    Rotation, S2Signal, So3Signal,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bw(b: usize) -> Bandwidth {
    Bandwidth::new(b).unwrap()
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

fn s2k(ci: usize, co: usize, bk: usize, seed: u64) -> S2Kernel<f64> {
    S2Kernel::random(ci, co, bw(bk), 1.0, &mut stream_rng(seed, Stream::Kernel, 0))
}

fn so3k(ci: usize, co: usize, bk: usize, seed: u64) -> So3Kernel<f64> {
    So3Kernel::random(ci, co, bw(bk), 1.0, &mut stream_rng(seed, Stream::Kernel, 0))
}

#[test]
fn kernel_params_roundtrip_and_counts() {
    let k = s2k(2, 3, 4, 1);
    assert_eq!(k.params().len(), 2 * 3 * 16);
    let back = S2Kernel::from_params(2, 3, bw(4), &k.params()).unwrap();
    assert_eq!(back, k);
    assert!(k.spectra().iter().all(|s| s.conjugate_symmetry_defect() == 0.0));
    let k3 = so3k(1, 2, 3, 2);
    assert_eq!(k3.params().len(), 2 * (1 + 9 + 25));
    assert_eq!(So3Kernel::from_params(1, 2, bw(3), &k3.params()).unwrap(), k3);
    assert!(k3.spectra().iter().all(|s| s.conjugate_symmetry_defect() == 0.0));
    assert!(S2Kernel::<f64>::from_params(1, 1, bw(2), &[0.0; 3]).is_err());
}

#[test]
fn kernel_param_gradients_match_finite_differences() {
    // L(p) = Re Σ conj(C) ŵ(p); ∂L/∂p must equal the pulled-back gradient of C.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let bk = bw(4);
    let c2 = {
        let mut s = S2Spectrum::<f64>::zeros(bk);
        s.coeffs_mut().iter_mut().for_each(|z| *z = Cplx::new(rng.random(), rng.random()));
        s
    };
    let p: Vec<f64> = (0..s2_param_len(bk)).map(|_| rng.random()).collect();
    let loss = |p: &[f64]| -> f64 {
        let w = s2_spectrum_from_params(bk, p);
        w.coeffs().iter().zip(c2.coeffs()).map(|(a, c)| (c.conj() * a).re).sum()
    };
    let g = s2_param_grad(&c2);
    for k in 0..p.len() {
        let mut q = p.clone();
        q[k] += 1e-6;
        let fd = (loss(&q) - loss(&p)) / 1e-6;
        assert!((fd - g[k]).abs() < 1e-6, "s2 param {k}");
    }
    let mut c3 = So3Spectrum::<f64>::zeros(bk);
    for l in 0..4 {
        c3.block_mut(l).as_mut_slice().iter_mut().for_each(|z| *z = Cplx::new(rng.random(), rng.random()));
    }
    let p: Vec<f64> = (0..so3_param_len(bk)).map(|_| rng.random()).collect();
    let loss = |p: &[f64]| -> f64 {
        let w = so3_spectrum_from_params(bk, p);
        w.blocks()
            .iter()
            .zip(c3.blocks())
            .flat_map(|(a, c)| a.as_slice().iter().zip(c.as_slice()).map(|(x, y)| (y.conj() * x).re))
            .sum()
    };
    let g = so3_param_grad(&c3);
    for k in 0..p.len() {
        let mut q = p.clone();
        q[k] += 1e-6;
        let fd = (loss(&q) - loss(&p)) / 1e-6;
        assert!((fd - g[k]).abs() < 1e-6, "so3 param {k}");
    }
}

#[test]
fn constant_correlations() {
    let b = bw(3);
    let c = 1.7;
    let f = S2Signal::constant(b, 1, c);
    let w = S2Kernel::from_signal(&f, 1, b).unwrap();
    let out = corr_s2(&f, &w).unwrap();
    let want = c * c * 4.0 * std::f64::consts::PI;
    assert!(out.samples().iter().all(|x| (x - want).abs() < 1e-12));

    let f3 = So3Signal::constant(b, 1, 2.0);
    let w3 = so3k(1, 1, 3, 4);
    let mean_w = w3.spectrum(0, 0).block(0).get(0, 0).re;
    let out = corr_so3(&f3, &w3).unwrap();
    assert!(out.samples().iter().all(|x| (x - 2.0 * mean_w).abs() < 1e-12));
}

#[test]
fn autocorrelation_at_identity_is_energy() {
    let b = bw(5);
    let f = random_bandlimited_s2::<f64>(b, 1, 8);
    let w = S2Kernel::from_signal(&f, 1, b).unwrap();
    let spec = &corr_s2_spectral(&f.spectra(), &w).unwrap()[0];
    // D(identity) = I, so the value is Σ (2l+1) tr ô^l
    let at_identity: f64 =
        (0..5).map(|l| (2 * l + 1) as f64 * (0..2 * l + 1).map(|r| spec.block(l).at(r, r).re).sum::<f64>()).sum();
    let energy = f.spectra()[0].energy();
    assert!((at_identity - energy).abs() < 1e-9 * energy);
    let brute = corr_s2_bruteforce(&f, &w, &[Rotation::identity()], false).unwrap();
    assert!((brute[0] - energy).abs() < 1e-9 * energy);
}

#[test]
fn spectral_correlations_match_bruteforce() {
    for b in 1..=4 {
        let bb = bw(b);
        let f = random_bandlimited_s2::<f64>(bb, 2, 10 + b as u64);
        let w = s2k(2, 2, b.max(2) - 1, 20 + b as u64);
        let grid = Rotation::grid(bb);
        let spectral = corr_s2(&f, &w).unwrap();
        let brute = corr_s2_bruteforce(&f, &w, &grid, false).unwrap();
        assert!(rel(spectral.samples(), &brute) < 1e-8, "S2 B={b}");
    }
    for b in 1..=3 {
        let bb = bw(b);
        let f = random_bandlimited_so3::<f64>(bb, 2, 30 + b as u64);
        let w = so3k(2, 1, b, 40 + b as u64);
        let grid = Rotation::grid(bb);
        let spectral = corr_so3(&f, &w).unwrap();
        let brute = corr_so3_bruteforce(&f, &w, &grid, false).unwrap();
        assert!(rel(spectral.samples(), &brute) < 1e-8, "SO3 B={b}");
    }
}

#[test]
fn bruteforce_is_linear_and_guarded() {
    let b = bw(3);
    let f1 = random_bandlimited_s2::<f64>(b, 1, 1);
    let f2 = random_bandlimited_s2::<f64>(b, 1, 2);
    let sum = S2Signal::new(b, 1, f1.samples().iter().zip(f2.samples()).map(|(a, c)| a + c).collect()).unwrap();
    let w = s2k(1, 1, 3, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let gs: Vec<Rotation> = (0..5).map(|_| Rotation::random(&mut rng)).collect();
    let a = corr_s2_bruteforce(&f1, &w, &gs, false).unwrap();
    let c = corr_s2_bruteforce(&f2, &w, &gs, false).unwrap();
    let s = corr_s2_bruteforce(&sum, &w, &gs, false).unwrap();
    for k in 0..gs.len() {
        assert!((s[k] - a[k] - c[k]).abs() < 1e-10);
    }
    let big = random_bandlimited_s2::<f64>(bw(7), 1, 1);
    let wk = s2k(1, 1, 2, 1);
    assert!(matches!(
        corr_s2_bruteforce(&big, &wk, &gs, false),
        Err(crate::error::Error::CostGuard(_))
    ));
    assert!(corr_s2_bruteforce(&big, &wk, &gs[..1], true).is_ok());
}

#[test]
fn correlations_are_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for b in 2..=6 {
        let bb = bw(b);
        let g = Rotation::random(&mut rng);
        let f = random_bandlimited_s2::<f64>(bb, 2, b as u64);
        let w = s2k(2, 3, b, b as u64);
        let lhs = corr_s2(&rotate_s2(&f, &g), &w).unwrap();
        let rhs = rotate_so3(&corr_s2(&f, &w).unwrap(), &g);
        assert!(lhs.rel_diff(&rhs) < 1e-8, "S2 B={b}");
        let f3 = random_bandlimited_so3::<f64>(bb, 2, b as u64);
        let w3 = so3k(2, 2, b, b as u64);
        let lhs = corr_so3(&rotate_so3(&f3, &g), &w3).unwrap();
        let rhs = rotate_so3(&corr_so3(&f3, &w3).unwrap(), &g);
        assert!(lhs.rel_diff(&rhs) < 1e-8, "SO3 B={b}");
    }
}

#[test]
fn block_right_multiplication_is_a_correlation() {
    // Any operator f̂^l ↦ f̂^l M^l is corr with ŵ^l = (M^l)†.
    let b = bw(4);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let m = random_so3_spectrum::<f64, _>(b, &mut rng);
    let f = random_bandlimited_so3::<f64>(b, 1, 9);
    let fs = f.spectra();
    let direct: Vec<_> = (0..4).map(|l| fs[0].block(l).matmul(m.block(l))).collect();
    let direct = So3Signal::from_spectra(b, &[So3Spectrum::from_blocks(b, direct).unwrap()]).unwrap();
    let recovered: Vec<_> = m.blocks().iter().map(|x| x.adjoint()).collect();
    let w = So3Kernel::from_spectra(1, 1, vec![So3Spectrum::from_blocks(b, recovered).unwrap()]).unwrap();
    assert!(corr_so3(&f, &w).unwrap().rel_diff(&direct) < 1e-8);

    // S² version: f̂^l ↦ f̂^l v^{l†}/(2l+1) for random degree vectors v.
    let v = random_s2_spectrum::<f64, _>(b, &mut rng);
    let fs2 = random_bandlimited_s2::<f64>(b, 1, 10);
    let w2 = S2Kernel::from_spectra(1, 1, vec![v.clone()]).unwrap();
    let spec = &fs2.spectra()[0];
    let blocks: Vec<_> = (0..4)
        .map(|l| {
            let d = 2 * l + 1;
            let mut blk = crate::harmonics::SquareMatrix::zeros(l);
            for r in 0..d {
                for c in 0..d {
                    blk.as_mut_slice()[r * d + c] = spec.degree(l)[r] * v.degree(l)[c].conj() / d as f64;
                }
            }
            blk
        })
        .collect();
    let direct = So3Signal::from_spectra(b, &[So3Spectrum::from_blocks(b, blocks).unwrap()]).unwrap();
    assert!(corr_s2(&fs2, &w2).unwrap().rel_diff(&direct) < 1e-8);
}

fn layer_s2(ci: usize, co: usize, bk: usize, mix: f64, seed: u64) -> S2VolterraLayer<f64> {
    VolterraLayer::new(s2k(ci, co, bk, seed), s2k(ci, co, bk, seed + 1), s2k(ci, co, bk, seed + 2), mix).unwrap()
}

fn layer_so3(ci: usize, co: usize, bk: usize, mix: f64, seed: u64) -> So3VolterraLayer<f64> {
    VolterraLayer::new(so3k(ci, co, bk, seed), so3k(ci, co, bk, seed + 1), so3k(ci, co, bk, seed + 2), mix).unwrap()
}

#[test]
fn volterra_limits() {
    let b = bw(4);
    let f = random_bandlimited_s2::<f64>(b, 2, 3);
    let layer = layer_s2(2, 2, 3, 1.0, 50);
    let v = volterra2_s2(&f, &layer).unwrap();
    assert!(v.max_abs_diff(&corr_s2(&f, &layer.w1).unwrap()) < 1e-12);
    assert_eq!(layer_s2(1, 1, 2, 7.0, 1).lambda(), 1.0);
    assert_eq!(layer_s2(1, 1, 2, -3.0, 1).lambda(), 0.0);

    let mut sq = layer_s2(2, 2, 3, 0.0, 60);
    sq.w2b = sq.w2a.clone();
    assert!(volterra2_s2(&f, &sq).unwrap().samples().iter().all(|&x| x >= 0.0));

    let f3 = random_bandlimited_so3::<f64>(bw(3), 1, 3);
    let l3 = layer_so3(1, 2, 3, 1.0, 70);
    assert!(volterra2_so3(&f3, &l3).unwrap().max_abs_diff(&corr_so3(&f3, &l3.w1).unwrap()) < 1e-12);

    let c = So3Signal::constant(bw(3), 1, 0.5);
    let l3 = layer_so3(1, 1, 3, 0.3, 80);
    let out = volterra2_so3(&c, &l3).unwrap();
    let m = |k: &So3Kernel<f64>| k.spectrum(0, 0).block(0).get(0, 0).re * 0.5;
    let want = 0.3 * m(&l3.w1) + 0.7 * m(&l3.w2a) * m(&l3.w2b);
    assert!(out.samples().iter().all(|x| (x - want).abs() < 1e-12));

    let zero = S2Signal::zeros(b, 2);
    let z = volterra2_s2(&zero, &layer_s2(2, 1, 4, 0.0, 1)).unwrap();
    assert_eq!(z.max_abs(), 0.0);
}

#[test]
fn volterra_matches_double_integral_oracle() {
    for b in 1..=3 {
        let bb = bw(b);
        let f = random_bandlimited_s2::<f64>(bb, 2, 90 + b as u64);
        let layer = layer_s2(2, 2, b, 0.0, 100 + b as u64);
        let grid = Rotation::grid(bb);
        let fast = volterra2_s2(&f, &layer).unwrap();
        let brute = volterra2_bruteforce(
            SampledInput::S2(&f),
            SeparablePair::S2(&layer.w2a, &layer.w2b),
            &grid,
            false,
        )
        .unwrap();
        assert!(rel(fast.samples(), &brute) < 1e-7, "S2 B={b}");
        // factorization: the double integral equals the product of two single ones
        let a = corr_s2_bruteforce(&f, &layer.w2a, &grid, false).unwrap();
        let c = corr_s2_bruteforce(&f, &layer.w2b, &grid, false).unwrap();
        let prod: Vec<f64> = a.iter().zip(&c).map(|(x, y)| x * y).collect();
        assert!(rel(&brute, &prod) < 1e-10);
        // swapping the pair leaves the term unchanged
        let swapped =
            volterra2_bruteforce(SampledInput::S2(&f), SeparablePair::S2(&layer.w2b, &layer.w2a), &grid, false)
                .unwrap();
        assert!(rel(&swapped, &brute) < 1e-12);
        // the exact-product path agrees on a grid that represents the product
        let fine = bw(2 * b - 1);
        let exact = volterra2_s2_at(&f, &layer.clone().with_oversample(2), fine).unwrap();
        let brute_fine =
            volterra2_bruteforce(SampledInput::S2(&f), SeparablePair::S2(&layer.w2a, &layer.w2b), &Rotation::grid(fine), false)
                .unwrap();
        assert!(rel(exact.samples(), &brute_fine) < 1e-7, "S2 fine B={b}");
    }
    for b in 1..=2 {
        let bb = bw(b);
        let f = random_bandlimited_so3::<f64>(bb, 1, 110 + b as u64);
        let layer = layer_so3(1, 2, b, 0.0, 120 + b as u64);
        let grid = Rotation::grid(bb);
        let fast = volterra2_so3(&f, &layer).unwrap();
        let brute =
            volterra2_bruteforce(SampledInput::So3(&f), SeparablePair::So3(&layer.w2a, &layer.w2b), &grid, false)
                .unwrap();
        assert!(rel(fast.samples(), &brute) < 1e-7, "SO3 B={b}");
    }
    let zero = S2Signal::zeros(bw(3), 1);
    let l = layer_s2(1, 1, 2, 0.0, 1);
    let out = volterra2_bruteforce(SampledInput::S2(&zero), SeparablePair::S2(&l.w2a, &l.w2b), &Rotation::grid(bw(3)), false)
        .unwrap();
    assert!(out.iter().all(|&x| x == 0.0));
    let big = random_bandlimited_s2::<f64>(bw(4), 1, 1);
    assert!(volterra2_bruteforce(SampledInput::S2(&big), SeparablePair::S2(&l.w2a, &l.w2b), &[], false).is_err());
}

#[test]
fn volterra_is_equivariant_with_exact_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for b in 2..=5 {
        let bb = bw(b);
        let g = Rotation::random(&mut rng);
        let mix: f64 = rng.random();
        let f = random_bandlimited_s2::<f64>(bb, 1, b as u64);
        let layer = layer_s2(1, 2, b, mix, 7 * b as u64).with_oversample(2);
        let lhs = volterra2_s2(&rotate_s2(&f, &g), &layer).unwrap();
        let rhs = rotate_so3(&volterra2_s2(&f, &layer).unwrap(), &g);
        assert!(lhs.rel_diff(&rhs) < 1e-8, "S2 B={b}");
        let f3 = random_bandlimited_so3::<f64>(bb, 2, b as u64);
        let l3 = layer_so3(2, 1, b, mix, 9 * b as u64).with_oversample(2);
        let lhs = volterra2_so3(&rotate_so3(&f3, &g), &l3).unwrap();
        let rhs = rotate_so3(&volterra2_so3(&f3, &l3).unwrap(), &g);
        assert!(lhs.rel_diff(&rhs) < 1e-8, "SO3 B={b}");
    }
}

#[test]
fn products_of_correlations_are_volterra_terms() {
    // Σ_k (f⋆a_k)(f⋆b_k) equals a sum of λ = 0 layers built from the same pairs.
    let b = bw(3);
    let f = random_bandlimited_s2::<f64>(b, 1, 4);
    let out = bw(5);
    let mut total_products = vec![0.0; out.so3_len()];
    let mut total_layers = vec![0.0; out.so3_len()];
    for k in 0..3 {
        let (a, c) = (s2k(1, 1, 3, 200 + k), s2k(1, 1, 3, 300 + k));
        let fa = corr_s2_at(&f, &a, out).unwrap();
        let fc = corr_s2_at(&f, &c, out).unwrap();
        for (t, (x, y)) in total_products.iter_mut().zip(fa.samples().iter().zip(fc.samples())) {
            *t += x * y;
        }
        let layer = VolterraLayer::new(a.clone(), a, c, 0.0).unwrap();
        let v = volterra2_s2_at(&f, &layer, out).unwrap();
        for (t, x) in total_layers.iter_mut().zip(v.samples()) {
            *t += x;
        }
    }
    assert!(rel(&total_layers, &total_products) < 1e-10);
}

#[test]
fn cascade_is_equivariant() {
    let b = bw(3);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let g = Rotation::random(&mut rng);
    let f = random_bandlimited_s2::<f64>(b, 1, 12);
    let l1 = layer_s2(1, 2, 3, 0.4, 400).with_oversample(2);
    let l2 = layer_so3(2, 1, 3, 0.6, 500).with_oversample(2);
    let run = |x: &S2Signal<f64>| volterra2_so3(&volterra2_s2(x, &l1).unwrap(), &l2).unwrap();
    let lhs = run(&rotate_s2(&f, &g));
    let rhs = rotate_so3(&run(&f), &g);
    assert!(lhs.rel_diff(&rhs) < 1e-8);
}

#[test]
fn invariant_layer_properties() {
    let b = bw(4);
    assert!((invariant_layer(&So3Signal::<f64>::constant(b, 2, 3.5))[1] - 3.5).abs() < 1e-13);
    let f = random_bandlimited_so3::<f64>(b, 3, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let g = Rotation::random(&mut rng);
    for (x, y) in invariant_layer(&f).iter().zip(invariant_layer(&rotate_so3(&f, &g))) {
        assert!((x - y).abs() < 1e-10);
    }
    let d100: Vec<f64> = Rotation::grid(b)
        .iter()
        .map(|h| {
            let (a, be, c) = h.angles::<f64>();
            wigner_big_d(1, a, be, c).get(0, 0).re
        })
        .collect();
    let s = So3Signal::new(b, 1, d100).unwrap();
    assert!(invariant_layer(&s)[0].abs() < 1e-10);
    assert!((so3_ft_forward(b, s.samples()).unwrap().block(1).get(0, 0).re - 1.0 / 3.0).abs() < 1e-12);
}

fn real_inner_s2(a: &[S2Spectrum<f64>], b: &[S2Spectrum<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.coeffs().iter().zip(y.coeffs()).map(|(p, q)| (q.conj() * p).re))
        .sum()
}

fn real_inner_so3(a: &[So3Spectrum<f64>], b: &[So3Spectrum<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| {
            x.blocks()
                .iter()
                .zip(y.blocks())
                .flat_map(|(p, q)| p.as_slice().iter().zip(q.as_slice()).map(|(u, v)| (v.conj() * u).re))
                .collect::<Vec<_>>()
        })
        .sum()
}

#[test]
fn spectral_backward_matches_directional_derivatives() {
    // L = Re⟨G, corr(f, w)⟩ is bilinear, so its derivative along (δf, δw) is exact.
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let bk = bw(3);
    let cplx = |rng: &mut ChaCha8Rng| Cplx::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
    let rand_s2 = |rng: &mut ChaCha8Rng| {
        let mut s = S2Spectrum::zeros(bk);
        s.coeffs_mut().iter_mut().for_each(|z| *z = cplx(rng));
        s
    };
    let rand_so3 = |rng: &mut ChaCha8Rng| {
        let mut s = So3Spectrum::zeros(bk);
        for l in 0..3 {
            s.block_mut(l).as_mut_slice().iter_mut().for_each(|z| *z = cplx(rng));
        }
        s
    };
    let f: Vec<_> = (0..2).map(|_| rand_s2(&mut rng)).collect();
    let df: Vec<_> = (0..2).map(|_| rand_s2(&mut rng)).collect();
    let w = S2Kernel::from_spectra(2, 3, (0..6).map(|_| rand_s2(&mut rng)).collect()).unwrap();
    let dw = S2Kernel::from_spectra(2, 3, (0..6).map(|_| rand_s2(&mut rng)).collect()).unwrap();
    let g: Vec<_> = (0..3).map(|_| rand_so3(&mut rng)).collect();
    let (gf, gw) = corr_s2_spectral_backward(&f, &w, &g);
    let along_f = real_inner_so3(&corr_s2_spectral(&df, &w).unwrap(), &g);
    assert!((along_f - real_inner_s2(&df, &gf)).abs() < 1e-12);
    let along_w = real_inner_so3(&corr_s2_spectral(&f, &dw).unwrap(), &g);
    assert!((along_w - real_inner_s2(dw.spectra(), &gw)).abs() < 1e-12);

    let f: Vec<_> = (0..2).map(|_| rand_so3(&mut rng)).collect();
    let df: Vec<_> = (0..2).map(|_| rand_so3(&mut rng)).collect();
    let w = So3Kernel::from_spectra(2, 2, (0..4).map(|_| rand_so3(&mut rng)).collect()).unwrap();
    let dw = So3Kernel::from_spectra(2, 2, (0..4).map(|_| rand_so3(&mut rng)).collect()).unwrap();
    let g: Vec<_> = (0..2).map(|_| rand_so3(&mut rng)).collect();
    let (gf, gw) = corr_so3_spectral_backward(&f, &w, &g);
    let along_f = real_inner_so3(&corr_so3_spectral(&df, &w).unwrap(), &g);
    assert!((along_f - real_inner_so3(&df, &gf)).abs() < 1e-12);
    let along_w = real_inner_so3(&corr_so3_spectral(&f, &dw).unwrap(), &g);
    assert!((along_w - real_inner_so3(dw.spectra(), &gw)).abs() < 1e-12);
}

#[test]
fn shape_errors() {
    let f = random_bandlimited_s2::<f64>(bw(3), 2, 1);
    assert!(corr_s2(&f, &s2k(1, 1, 2, 1)).is_err());
    assert!(corr_s2(&f, &s2k(2, 1, 4, 1)).is_err());
    assert!(VolterraLayer::new(s2k(1, 1, 2, 1), s2k(1, 2, 2, 1), s2k(1, 1, 2, 1), 0.5).is_err());
}

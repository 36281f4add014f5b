use super::SquareMatrix;
use crate::scalar::{cis, parity, Cplx, Real};

/// Test-harness hook that corrupts [`wigner_big_d`] so verification suites can
/// be shown to fail loudly. Never enabled outside fault-injection runs.
pub mod fault_injection {
    use std::sync::atomic::{AtomicBool, Ordering};

    static SIGN_FLIP: AtomicBool = AtomicBool::new(false);

    pub fn set_wigner_sign_flip(on: bool) {
        SIGN_FLIP.store(on, Ordering::SeqCst);
    }

    pub fn wigner_sign_flip() -> bool {
        SIGN_FLIP.load(Ordering::SeqCst)
    }
}

/// `√C(2j, j+k)` evaluated as a running product.
fn sqrt_binomial<T: Real>(two_j: usize, k: usize) -> T {
    let k = k.min(two_j - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (two_j - i) as f64 / (i + 1) as f64;
    }
    T::lit(acc.sqrt())
}

/// `d^{l0}_{mn}(β)` at the lowest degree `l0 = max(|m|, |n|)` of the column.
fn seed<T: Real>(m: isize, n: isize, c: T, s: T) -> T {
    if m.abs() < n.abs() {
        // d_{mn} = (−1)^{m−n} d_{nm}
        return parity::<T>(m - n) * seed(n, m, c, s);
    }
    let l0 = m.abs();
    let two_j = (2 * l0) as usize;
    let pw = |x: T, e: isize| x.powi(e as i32);
    if m == l0 {
        // d_{l,n} = (−1)^{l−n} √C(2l, l+n) cos^{l+n}(β/2) sin^{l−n}(β/2)
        parity::<T>(l0 - n) * sqrt_binomial::<T>(two_j, (l0 + n) as usize) * pw(c, l0 + n) * pw(s, l0 - n)
    } else {
        // d_{−l,n} = √C(2l, l+n) cos^{l−n}(β/2) sin^{l+n}(β/2)
        sqrt_binomial::<T>(two_j, (l0 + n) as usize) * pw(c, l0 - n) * pw(s, l0 + n)
    }
}

/// Runs the three-term recurrence in degree for one `(m, n)` column and calls
/// `emit(l, value)` for `l = max(|m|,|n|)..=lmax`.
fn column<T: Real>(lmax: usize, m: isize, n: isize, cos_b: T, c: T, s: T, mut emit: impl FnMut(usize, T)) {
    let l0 = m.abs().max(n.abs()) as usize;
    if l0 > lmax {
        return;
    }
    let mut prev = T::zero();
    let mut cur = seed(m, n, c, s);
    emit(l0, cur);
    let (mf, nf) = (T::from_isize_lossy(m), T::from_isize_lossy(n));
    for j in l0..lmax {
        let jf = T::from_usize_lossy(j);
        let j1 = jf + T::one();
        let lead = j1 * (T::lit(2.0) * jf + T::one())
            / ((j1 * j1 - mf * mf) * (j1 * j1 - nf * nf)).sqrt();
        let shift = if j == 0 { T::zero() } else { mf * nf / (jf * j1) };
        let back = if j == 0 {
            T::zero()
        } else {
            ((jf * jf - mf * mf) * (jf * jf - nf * nf)).sqrt() / (jf * (T::lit(2.0) * jf + T::one()))
        };
        let next = lead * ((cos_b - shift) * cur - back * prev);
        prev = cur;
        cur = next;
        emit(j + 1, cur);
    }
}

/// Wigner small-d matrices `d^l(β)` for every `l = 0..=lmax`.
pub fn wigner_d_all<T: Real>(lmax: usize, beta: T) -> Vec<SquareMatrix<T>> {
    let mut out: Vec<SquareMatrix<T>> = (0..=lmax).map(SquareMatrix::zeros).collect();
    let half = beta / T::lit(2.0);
    let (s, c) = half.sin_cos();
    let cos_b = beta.cos();
    let lm = lmax as isize;
    for m in -lm..=lm {
        for n in -lm..=lm {
            column(lmax, m, n, cos_b, c, s, |l, v| out[l].set(m, n, v));
        }
    }
    out
}

/// Wigner small-d matrix `d^l(β)`; rows and columns indexed `m, n ∈ [−l, l]`.
pub fn wigner_d<T: Real>(l: usize, beta: T) -> SquareMatrix<T> {
    let mut out = SquareMatrix::zeros(l);
    let half = beta / T::lit(2.0);
    let (s, c) = half.sin_cos();
    let cos_b = beta.cos();
    let li = l as isize;
    for m in -li..=li {
        for n in -li..=li {
            column(l, m, n, cos_b, c, s, |deg, v| {
                if deg == l {
                    out.set(m, n, v)
                }
            });
        }
    }
    out
}

fn assemble<T: Real>(d: &SquareMatrix<T>, alpha: T, gamma: T) -> SquareMatrix<Cplx<T>> {
    let l = d.degree() as isize;
    let flip = fault_injection::wigner_sign_flip();
    let mut out = SquareMatrix::zeros(d.degree());
    for m in -l..=l {
        let left = cis(-T::from_isize_lossy(m) * alpha);
        for n in -l..=l {
            let right = cis(-T::from_isize_lossy(n) * gamma);
            let mut v = d.get(m, n);
            if flip && m > n {
                v = -v;
            }
            out.set(m, n, left * right * v);
        }
    }
    out
}

/// Wigner D-matrix `D^l_{mn}(α, β, γ) = e^{−imα} d^l_{mn}(β) e^{−inγ}` for ZYZ angles.
pub fn wigner_big_d<T: Real>(l: usize, alpha: T, beta: T, gamma: T) -> SquareMatrix<Cplx<T>> {
    assemble(&wigner_d(l, beta), alpha, gamma)
}

/// `D^l(α, β, γ)` for all `l = 0..=lmax`.
pub fn wigner_big_d_all<T: Real>(lmax: usize, alpha: T, beta: T, gamma: T) -> Vec<SquareMatrix<Cplx<T>>> {
    wigner_d_all(lmax, beta).iter().map(|d| assemble(d, alpha, gamma)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_at_zero() {
        for l in 0..6 {
            let d = wigner_d::<f64>(l, 0.0);
            let li = l as isize;
            for m in -li..=li {
                for n in -li..=li {
                    let want = if m == n { 1.0 } else { 0.0 };
                    assert!((d.get(m, n) - want).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn l1_closed_form() {
        let b = 0.77f64;
        let d = wigner_d::<f64>(1, b);
        assert!((d.get(0, 0) - b.cos()).abs() < 1e-15);
        assert!((d.get(1, 0) + b.sin() / 2f64.sqrt()).abs() < 1e-15);
        assert!((d.get(-1, 0) - b.sin() / 2f64.sqrt()).abs() < 1e-15);
        assert!((d.get(1, 1) - (1.0 + b.cos()) / 2.0).abs() < 1e-15);
        assert!((d.get(1, -1) - (1.0 - b.cos()) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn all_matches_single() {
        let all = wigner_d_all::<f64>(7, 1.3);
        for (l, m) in all.iter().enumerate() {
            let one = wigner_d::<f64>(l, 1.3);
            assert_eq!(m, &one);
        }
    }

    #[test]
    fn small_d_is_orthogonal() {
        for l in 0..12 {
            let d = wigner_d::<f64>(l, 2.1);
            let p = d.matmul(&d.transpose());
            for r in 0..d.dim() {
                for c in 0..d.dim() {
                    let want = if r == c { 1.0 } else { 0.0 };
                    assert!((p.at(r, c) - want).abs() < 1e-12, "l={l}");
                }
            }
        }
    }
}

use crate::error::{bail, Result};
use crate::scalar::{cis, parity, Cplx, Real};

/// Fully normalized associated Legendre function `P̄_l^m(x)`, `0 ≤ m ≤ l`.
///
/// Normalized so that `∫_{−1}^{1} P̄_l^m(x)² dx = 1`, with the Condon–Shortley
/// sign. Then `Y_l^m(θ, φ) = P̄_l^m(cos θ) e^{−imφ} / √(2π)` for `m ≥ 0`.
pub fn assoc_legendre<T: Real>(l: usize, m: usize, x: T) -> Result<T> {
    if m > l {
        bail!(InvalidArgument, "order m={m} exceeds degree l={l}");
    }
    if !(x.abs() <= T::one()) {
        bail!(InvalidArgument, "argument {x} outside [-1, 1]");
    }
    Ok(*assoc_legendre_column(l, m, x).last().expect("column is non-empty"))
}

/// `P̄_l^m(x)` for `l = m..=lmax` (empty if `m > lmax`).
///
/// Sectoral start `P̄_m^m = (−1)^m √((2m+1)/2 · Π_{k≤m} (2k−1)/(2k)) (1−x²)^{m/2}`,
/// then the normalized three-term recurrence in `l`.
pub fn assoc_legendre_column<T: Real>(lmax: usize, m: usize, x: T) -> Vec<T> {
    if m > lmax {
        return Vec::new();
    }
    let one = T::one();
    let sin2 = (one - x * x).max(T::zero());
    // (1−x²)^{m/2} · Π (2k−1)/(2k), accumulated factor by factor to stay in range
    let mut pmm = T::one();
    for k in 1..=m {
        let kf = T::from_usize_lossy(k);
        pmm = pmm * (T::lit(2.0) * kf - one) / (T::lit(2.0) * kf) * sin2;
    }
    let pmm = parity::<T>(m as isize)
        * (pmm * T::from_usize_lossy(2 * m + 1) / T::lit(2.0)).sqrt();
    let mut out = Vec::with_capacity(lmax - m + 1);
    out.push(pmm);
    if lmax == m {
        return out;
    }
    let mut prev = pmm;
    let mut cur = x * T::from_usize_lossy(2 * m + 3).sqrt() * pmm;
    out.push(cur);
    let mf = T::from_usize_lossy(m);
    for l in (m + 2)..=lmax {
        let lf = T::from_usize_lossy(l);
        let a = ((T::lit(4.0) * lf * lf - one) / (lf * lf - mf * mf)).sqrt();
        let lp = lf - one;
        let a_prev = ((T::lit(4.0) * lp * lp - one) / (lp * lp - mf * mf)).sqrt();
        let next = a * (x * cur - prev / a_prev);
        prev = cur;
        cur = next;
        out.push(cur);
    }
    out
}

/// Orthonormal spherical harmonic `Y_l^m(θ, φ)` (colatitude θ, longitude φ).
///
/// Equal to `√((2l+1)/4π) · D^l_{m0}(φ, θ, 0)`; computed here from the
/// Legendre recurrence, independently of the Wigner-d code.
pub fn sph_harm<T: Real>(l: usize, m: isize, theta: T, phi: T) -> Result<Cplx<T>> {
    if m.unsigned_abs() > l {
        bail!(IndexOutOfRange, "|m|={} exceeds l={l}", m.unsigned_abs());
    }
    if !(theta >= T::zero() && theta <= T::PI()) {
        bail!(IndexOutOfRange, "colatitude {theta} outside [0, π]");
    }
    let p = assoc_legendre(l, m.unsigned_abs(), theta.cos())?;
    let sign = if m < 0 { parity::<T>(m) } else { T::one() };
    let norm = T::one() / (T::lit(2.0) * T::PI()).sqrt();
    Ok(cis(-T::from_isize_lossy(m) * phi) * (sign * p * norm))
}

use super::Bandwidth;
use crate::error::{bail, Result};
use crate::scalar::{parity, Cplx, Real};
use num_traits::Zero;
use std::ops::{Add, Mul};

/// Square matrix indexed by orders `m, n ∈ [−l, l]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<E> {
    degree: usize,
    data: Vec<E>,
}

impl<E: Copy + Zero> SquareMatrix<E> {
    pub fn zeros(degree: usize) -> Self {
        let n = 2 * degree + 1;
        Self { degree, data: vec![E::zero(); n * n] }
    }
}

impl<E: Copy> SquareMatrix<E> {
    pub fn from_vec(degree: usize, data: Vec<E>) -> Self {
        assert_eq!(data.len(), (2 * degree + 1) * (2 * degree + 1));
        Self { degree, data }
    }

    #[inline]
    pub fn degree(&self) -> usize {
        self.degree
    }

    #[inline]
    pub fn dim(&self) -> usize {
        2 * self.degree + 1
    }

    #[inline]
    fn offset(&self, m: isize, n: isize) -> usize {
        let l = self.degree as isize;
        debug_assert!(m.abs() <= l && n.abs() <= l);
        ((m + l) as usize) * self.dim() + (n + l) as usize
    }

    #[inline]
    pub fn get(&self, m: isize, n: isize) -> E {
        self.data[self.offset(m, n)]
    }

    #[inline]
    pub fn set(&mut self, m: isize, n: isize, v: E) {
        let o = self.offset(m, n);
        self.data[o] = v;
    }

    /// Entry by zero-based row/column.
    #[inline]
    pub fn at(&self, row: usize, col: usize) -> E {
        self.data[row * self.dim() + col]
    }

    #[inline]
    pub fn as_slice(&self) -> &[E] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [E] {
        &mut self.data
    }

    pub fn map<F: Copy, G: Fn(E) -> F>(&self, f: G) -> SquareMatrix<F> {
        SquareMatrix { degree: self.degree, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim();
        let mut data = self.data.clone();
        for r in 0..n {
            for c in 0..n {
                data[c * n + r] = self.data[r * n + c];
            }
        }
        Self { degree: self.degree, data }
    }
}

impl<E: Copy + Zero + Add<Output = E> + Mul<Output = E>> SquareMatrix<E> {
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.degree, rhs.degree);
        let n = self.dim();
        let mut out = vec![E::zero(); n * n];
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                let row = &rhs.data[k * n..(k + 1) * n];
                let dst = &mut out[r * n..(r + 1) * n];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d = *d + a * b;
                }
            }
        }
        Self { degree: self.degree, data: out }
    }

    pub fn matvec(&self, v: &[E]) -> Vec<E> {
        let n = self.dim();
        assert_eq!(v.len(), n);
        (0..n)
            .map(|r| {
                self.data[r * n..(r + 1) * n]
                    .iter()
                    .zip(v)
                    .fold(E::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }
}

impl<T: Real> SquareMatrix<Cplx<T>> {
    pub fn identity(degree: usize) -> Self {
        let mut m = Self::zeros(degree);
        for k in -(degree as isize)..=(degree as isize) {
            m.set(k, k, Cplx::new(T::one(), T::zero()));
        }
        m
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        self.transpose().map(|z| z.conj())
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), T::max)
    }
}

/// Spherical-harmonic coefficients `f̂_l^m`, `0 ≤ l < B`, `|m| ≤ l`.
#[derive(Debug, Clone, PartialEq)]
pub struct S2Spectrum<T> {
    bandwidth: Bandwidth,
    coeffs: Vec<Cplx<T>>,
}

impl<T: Real> S2Spectrum<T> {
    pub fn zeros(bandwidth: Bandwidth) -> Self {
        Self { bandwidth, coeffs: vec![Cplx::zero(); bandwidth.s2_coeffs()] }
    }

    pub fn from_coeffs(bandwidth: Bandwidth, coeffs: Vec<Cplx<T>>) -> Result<Self> {
        if coeffs.len() != bandwidth.s2_coeffs() {
            bail!(ShapeMismatch, "expected {} coefficients, got {}", bandwidth.s2_coeffs(), coeffs.len());
        }
        Ok(Self { bandwidth, coeffs })
    }

    #[inline]
    pub fn bandwidth(&self) -> Bandwidth {
        self.bandwidth
    }

    #[inline]
    pub fn index(l: usize, m: isize) -> usize {
        debug_assert!(m.unsigned_abs() <= l);
        l * l + (m + l as isize) as usize
    }

    #[inline]
    pub fn get(&self, l: usize, m: isize) -> Cplx<T> {
        self.coeffs[Self::index(l, m)]
    }

    #[inline]
    pub fn set(&mut self, l: usize, m: isize, v: Cplx<T>) {
        self.coeffs[Self::index(l, m)] = v;
    }

    /// Coefficient vector of degree `l`, ordered `m = −l..=l`.
    #[inline]
    pub fn degree(&self, l: usize) -> &[Cplx<T>] {
        &self.coeffs[l * l..(l + 1) * (l + 1)]
    }

    #[inline]
    pub fn degree_mut(&mut self, l: usize) -> &mut [Cplx<T>] {
        &mut self.coeffs[l * l..(l + 1) * (l + 1)]
    }

    #[inline]
    pub fn coeffs(&self) -> &[Cplx<T>] {
        &self.coeffs
    }

    #[inline]
    pub fn coeffs_mut(&mut self) -> &mut [Cplx<T>] {
        &mut self.coeffs
    }

    /// `Σ |f̂_l^m|²`, which equals `∫ |f|² dω` by Parseval.
    pub fn energy(&self) -> T {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest violation of `f̂_l^{−m} = (−1)^m conj(f̂_l^m)`.
    pub fn conjugate_symmetry_defect(&self) -> T {
        let mut worst = T::zero();
        for l in 0..self.bandwidth.get() {
            for m in 0..=l as isize {
                let lhs = self.get(l, -m);
                let rhs = self.get(l, m).conj() * parity::<T>(m);
                worst = worst.max((lhs - rhs).norm());
            }
        }
        worst
    }

    pub fn scale_in_place(&mut self, s: T) {
        self.coeffs.iter_mut().for_each(|z| *z = *z * s);
    }

    /// `self += s · other` over the common degrees.
    pub fn add_scaled(&mut self, other: &Self, s: T) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a = *a + *b * s;
        }
    }

    /// Copy truncated or zero-padded to another band limit.
    pub fn resized(&self, bandwidth: Bandwidth) -> Self {
        let mut out = Self::zeros(bandwidth);
        let keep = bandwidth.get().min(self.bandwidth.get());
        out.coeffs[..keep * keep].copy_from_slice(&self.coeffs[..keep * keep]);
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), T::max)
    }
}

/// Wigner coefficients: one `(2l+1)×(2l+1)` block `f̂^l` per degree `l < B`.
#[derive(Debug, Clone, PartialEq)]
pub struct So3Spectrum<T> {
    bandwidth: Bandwidth,
    blocks: Vec<SquareMatrix<Cplx<T>>>,
}

impl<T: Real> So3Spectrum<T> {
    pub fn zeros(bandwidth: Bandwidth) -> Self {
        Self { bandwidth, blocks: (0..bandwidth.get()).map(SquareMatrix::zeros).collect() }
    }

    pub fn from_blocks(bandwidth: Bandwidth, blocks: Vec<SquareMatrix<Cplx<T>>>) -> Result<Self> {
        if blocks.len() != bandwidth.get() {
            bail!(ShapeMismatch, "expected {} blocks, got {}", bandwidth.get(), blocks.len());
        }
        for (l, b) in blocks.iter().enumerate() {
            if b.degree() != l {
                bail!(ShapeMismatch, "block {l} has degree {}", b.degree());
            }
        }
        Ok(Self { bandwidth, blocks })
    }

    #[inline]
    pub fn bandwidth(&self) -> Bandwidth {
        self.bandwidth
    }

    #[inline]
    pub fn block(&self, l: usize) -> &SquareMatrix<Cplx<T>> {
        &self.blocks[l]
    }

    #[inline]
    pub fn block_mut(&mut self, l: usize) -> &mut SquareMatrix<Cplx<T>> {
        &mut self.blocks[l]
    }

    pub fn blocks(&self) -> &[SquareMatrix<Cplx<T>>] {
        &self.blocks
    }

    /// Number of stored complex entries, `Σ (2l+1)²`.
    pub fn len(&self) -> usize {
        self.blocks.iter().map(|b| b.as_slice().len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// `Σ_l (2l+1) ‖f̂^l‖²_F`, which equals `∫ |f|² dμ` by Parseval.
    pub fn energy(&self) -> T {
        self.blocks
            .iter()
            .enumerate()
            .map(|(l, b)| {
                T::from_usize_lossy(2 * l + 1) * b.as_slice().iter().map(|z| z.norm_sqr()).sum::<T>()
            })
            .sum()
    }

    /// Largest violation of `f̂_{−m,−n} = (−1)^{m−n} conj(f̂_{mn})`.
    pub fn conjugate_symmetry_defect(&self) -> T {
        let mut worst = T::zero();
        for (l, b) in self.blocks.iter().enumerate() {
            let l = l as isize;
            for m in -l..=l {
                for n in -l..=l {
                    let d = b.get(-m, -n) - b.get(m, n).conj() * parity::<T>(m - n);
                    worst = worst.max(d.norm());
                }
            }
        }
        worst
    }

    pub fn scale_in_place(&mut self, s: T) {
        for b in &mut self.blocks {
            b.as_mut_slice().iter_mut().for_each(|z| *z = *z * s);
        }
    }

    /// `self += s · other` over the common degrees.
    pub fn add_scaled(&mut self, other: &Self, s: T) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            for (x, y) in a.as_mut_slice().iter_mut().zip(b.as_slice()) {
                *x = *x + *y * s;
            }
        }
    }

    pub fn resized(&self, bandwidth: Bandwidth) -> Self {
        let mut out = Self::zeros(bandwidth);
        for l in 0..bandwidth.get().min(self.bandwidth.get()) {
            out.blocks[l] = self.blocks[l].clone();
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(T::zero(), T::max)
    }
}

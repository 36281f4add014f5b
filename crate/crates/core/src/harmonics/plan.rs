use super::{dh_weights, wigner_d_all, Bandwidth, SquareMatrix};
use crate::scalar::{Cplx, Real};
use rustfft::{Fft, FftPlanner};
use std::any::{Any, TypeId};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Tables shared by every transform at one band limit: quadrature nodes and
/// weights, Wigner-d values at each β node, and length-`2B` FFT plans.
pub struct Plan<T: Real> {
    bandwidth: Bandwidth,
    betas: Vec<T>,
    weights: Vec<T>,
    // dtab[j][l] = d^l(β_j)
    dtab: Vec<Vec<SquareMatrix<T>>>,
    // e^{-2πi jk/N}
    fft: Arc<dyn Fft<T>>,
    // e^{+2πi jk/N}
    ifft: Arc<dyn Fft<T>>,
}

impl<T: Real> std::fmt::Debug for Plan<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Plan").field("bandwidth", &self.bandwidth).finish_non_exhaustive()
    }
}

impl<T: Real> Plan<T> {
    fn build(bandwidth: Bandwidth) -> Self {
        let n = bandwidth.nodes();
        let betas: Vec<T> = (0..n).map(|j| bandwidth.beta(j)).collect();
        let weights = dh_weights(bandwidth);
        let dtab = betas.iter().map(|&b| wigner_d_all(bandwidth.get() - 1, b)).collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        Self { bandwidth, betas, weights, dtab, fft, ifft }
    }

    #[inline]
    pub fn bandwidth(&self) -> Bandwidth {
        self.bandwidth
    }

    /// β (colatitude) nodes.
    #[inline]
    pub fn betas(&self) -> &[T] {
        &self.betas
    }

    /// Driscoll–Healy weights, summing to 2.
    #[inline]
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// `d^l(β_j)`.
    #[inline]
    pub fn wigner_d(&self, j: usize, l: usize) -> &SquareMatrix<T> {
        &self.dtab[j][l]
    }

    /// Quadrature weight of one S² sample in row `j` (area normalization 4π).
    #[inline]
    pub fn s2_cell(&self, j: usize) -> T {
        self.weights[j] * T::PI() / T::from_usize_lossy(self.bandwidth.get())
    }

    /// Haar weight of one SO(3) sample with β index `j` (total mass one).
    #[inline]
    pub fn so3_cell(&self, j: usize) -> T {
        let b = T::from_usize_lossy(self.bandwidth.get());
        self.weights[j] / (T::lit(8.0) * b * b)
    }

    /// In-place length-`2B` DFT with kernel `e^{−2πi jk/N}` (`sign < 0`) or `e^{+2πi jk/N}`.
    pub(crate) fn dft(&self, buf: &mut [Cplx<T>], positive: bool) {
        if positive {
            self.ifft.process(buf)
        } else {
            self.fft.process(buf)
        }
    }

    /// In-place 2-D DFT over a row-major `N×N` array.
    pub(crate) fn dft2(&self, buf: &mut [Cplx<T>], positive: bool) {
        let n = self.bandwidth.nodes();
        debug_assert_eq!(buf.len(), n * n);
        // rows
        if positive {
            self.ifft.process(buf)
        } else {
            self.fft.process(buf)
        }
        // columns
        let mut col = vec![Cplx::new(T::zero(), T::zero()); n];
        for c in 0..n {
            for r in 0..n {
                col[r] = buf[r * n + c];
            }
            self.dft(&mut col, positive);
            for r in 0..n {
                buf[r * n + c] = col[r];
            }
        }
    }
}

type Cache = Mutex<HashMap<(TypeId, usize), Arc<dyn Any + Send + Sync>>>;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Shared, lazily built plan for `bandwidth`. Built once per `(scalar type, B)`.
pub fn plan<T: Real>(bandwidth: Bandwidth) -> Arc<Plan<T>> {
    let key = (TypeId::of::<T>(), bandwidth.get());
    if let Some(p) = cache().lock().expect("plan cache poisoned").get(&key) {
        return p.clone().downcast::<Plan<T>>().expect("plan cache keyed by type");
    }
    // build outside the lock; a racing builder just wastes work
    let built: Arc<Plan<T>> = Arc::new(Plan::build(bandwidth));
    let mut guard = cache().lock().expect("plan cache poisoned");
    let entry = guard.entry(key).or_insert_with(|| built.clone() as Arc<dyn Any + Send + Sync>);
    entry.clone().downcast::<Plan<T>>().expect("plan cache keyed by type")
}
